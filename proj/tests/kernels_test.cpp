#include <gtest/gtest.h>

#include <numeric>

#include "lpgemm/kernels.hpp"
#include "lpgemm/random.hpp"

using namespace lpgemm;

namespace {

Matrix from_rows(std::initializer_list<std::initializer_list<float>> rows) {
  Matrix m(rows.size(), rows.begin()->size());
  std::size_t i = 0;
  for (const auto& r : rows) {
    std::size_t j = 0;
    for (float v : r) m.view()(i, j++) = v;
    ++i;
  }
  return m;
}

TileParams random_params(SeededRng& rng) {
  const std::size_t mr = rng.index(1, 16), nr = rng.index(1, 8);
  return {mr * rng.index(1, 4), nr * rng.index(1, 6), rng.index(1, 48), mr, nr};
}

}  // namespace

TEST(GemmNaive, TwoByTwo) {
  const Matrix a = from_rows({{1, 2}, {3, 4}});
  const Matrix b = from_rows({{5, 6}, {7, 8}});
  Matrix c(2, 2);
  gemm_naive({2, 2, 2}, a.cview(), b.cview(), c.view());
  EXPECT_TRUE(bit_equal(c.cview(), from_rows({{19, 22}, {43, 50}}).cview()));
}

TEST(GemmNaive, IdentityAndScaling) {
  SeededRng rng(1);
  const Matrix b = random_matrix(5, 3, rng);
  const Matrix eye = Matrix::identity(5);
  EXPECT_TRUE(bit_equal(gemm_naive(eye.cview(), b.cview()).cview(), b.cview()));

  const Matrix a = random_matrix(4, 5, rng);
  Matrix c = random_matrix(4, 3, rng);
  const Matrix before = Matrix::copy_of(c.cview());
  gemm_naive({4, 3, 5, 0.0f, 1.0f}, a.cview(), b.cview(), c.view());
  EXPECT_TRUE(bit_equal(c.cview(), before.cview()));
}

TEST(GemmNaive, ShapeMismatchThrows) {
  const Matrix a(2, 3), b(4, 2);
  Matrix c(2, 2);
  EXPECT_THROW(gemm_naive({2, 2, 3}, a.cview(), b.cview(), c.view()), ContractError);
}

TEST(GemmDefault, SingleBlockMatchesNaive) {
  SeededRng rng(2);
  const Matrix a = random_matrix(13, 17, rng);
  const Matrix b = random_matrix(17, 11, rng);
  PackCounters ctr;
  const Matrix c = gemm_default(a.cview(), b.cview(), TileParams{16, 12, 20, 4, 4}, ctr);
  EXPECT_LE(max_relative_error(c.cview(), gemm_naive(a.cview(), b.cview()).cview()), 1e-5);
}

TEST(GemmDefault, Scalar) {
  const Matrix a = from_rows({{3}});
  Matrix c = from_rows({{10}});
  const Matrix b = from_rows({{4}});
  PackCounters ctr;
  gemm_default({1, 1, 1, 2.0f, 0.5f}, a.cview(), b.cview(), c.view(), TileParams{}, ctr);
  EXPECT_EQ(c(0, 0), 29.0f);
}

TEST(GemmDefault, AlphaBetaMatchNaive) {
  SeededRng rng(3);
  const TileParams p{8, 8, 5, 4, 4};
  const Matrix a = random_matrix(19, 14, rng);
  const Matrix b = random_matrix(14, 21, rng);
  Matrix c = random_matrix(19, 21, rng);
  Matrix ref = Matrix::copy_of(c.cview());
  PackCounters ctr;
  gemm_default({19, 21, 14, -1.5f, 0.25f}, a.cview(), b.cview(), c.view(), p, ctr);
  gemm_naive({19, 21, 14, -1.5f, 0.25f}, a.cview(), b.cview(), ref.view());
  EXPECT_LE(max_relative_error(c.cview(), ref.cview()), 1e-5);
}

TEST(GemmDefault, RandomSweepMatchesNaive) {
  SeededRng rng(4);
  for (int t = 0; t < 100; ++t) {
    const TileParams p = random_params(rng);
    const std::size_t m = rng.index(1, 96), n = rng.index(1, 96), k = rng.index(1, 96);
    const Matrix a = random_matrix(m, k, rng);
    const Matrix b = random_matrix(k, n, rng);
    PackCounters ctr;
    const Matrix c = gemm_default(a.cview(), b.cview(), p, ctr);
    ASSERT_LE(max_relative_error(c.cview(), gemm_naive(a.cview(), b.cview()).cview()), 1e-4)
        << m << "x" << n << "x" << k << " " << p.to_string();
  }
}

TEST(GemmDefault, WritesIntoStridedWindow) {
  SeededRng rng(5);
  const Matrix a = random_matrix(6, 7, rng);
  const Matrix b = random_matrix(7, 5, rng);
  Matrix big(10, 12);
  for (float& v : big.flat()) v = 3.0f;
  PackCounters ctr;
  gemm_default({6, 5, 7}, a.cview(), b.cview(), big.view().sub(2, 4, 6, 5), TileParams{4, 4, 4, 2, 2}, ctr);
  EXPECT_LE(max_relative_error(big.cview().sub(2, 4, 6, 5), gemm_naive(a.cview(), b.cview()).cview()), 1e-5);
  EXPECT_EQ(big(0, 0), 3.0f);
  EXPECT_EQ(big(8, 9), 3.0f);
  EXPECT_EQ(big(2, 9), 3.0f);
}

TEST(GemmIni, UnpackEqualsDefaultBitExact) {
  SeededRng rng(6);
  for (int t = 0; t < 40; ++t) {
    const TileParams p = random_params(rng);
    const Matrix a = random_matrix(rng.index(1, 80), rng.index(1, 80), rng);
    const Matrix b = random_matrix(a.cols(), rng.index(1, 80), rng);
    PackCounters c1, c2;
    const Matrix def = gemm_default(a.cview(), b.cview(), p, c1);
    const PropagatedMatrix ini = gemm_ini(a.cview(), b.cview(), p, c2);
    ASSERT_TRUE(bit_equal(unpack_propagated(ini.cview()).cview(), def.cview())) << p.to_string();
    EXPECT_EQ(c1.multiplier_pack_elems, c2.multiplier_pack_elems);
  }
}

TEST(GemmIni, IdentityMultiplier) {
  SeededRng rng(7);
  const Matrix b = random_matrix(9, 6, rng);
  PackCounters ctr;
  const PropagatedMatrix out = gemm_ini(Matrix::identity(9).cview(), b.cview(), TileParams{4, 4, 4, 2, 2}, ctr);
  EXPECT_TRUE(bit_equal(unpack_propagated(out.cview()).cview(), b.cview()));
}

TEST(GemmIni, PaddingIsZero) {
  SeededRng rng(8);
  const Matrix a = random_matrix(5, 3, rng);
  const Matrix b = random_matrix(3, 7, rng);
  PackCounters ctr;
  const PropagatedMatrix out = gemm_ini(a.cview(), b.cview(), TileParams{4, 4, 4, 4, 4}, ctr);
  const PropagatedLayout& lay = out.layout();
  for (std::size_t i = 0; i < lay.padded_rows(); ++i)
    for (std::size_t j = 0; j < lay.padded_cols(); ++j)
      if (i >= 5 || j >= 7) EXPECT_EQ(out.storage()[lay.offset_unchecked(i, j)], 0.0f);
}

TEST(GemmIni, CanonicalTargetIsRejected) {
  const Matrix a(2, 2), b(2, 2);
  StoreSpec s;
  s.target = StoreTarget::Canonical;
  PackCounters ctr;
  EXPECT_THROW((void)gemm_ini(a.cview(), b.cview(), TileParams{}, s, ctr), ContractError);
}

TEST(GemmIni, StridedStoreReadsBackDense) {
  SeededRng rng(9);
  const TileParams p{4, 4, 4, 2, 2};
  const Matrix a = random_matrix(10, 6, rng);
  const Matrix b = random_matrix(6, 9, rng);
  PackCounters ctr;
  const PropagatedMatrix dense = gemm_ini(a.cview(), b.cview(), p, ctr);
  StoreSpec s;
  s.inter_block_stride = 5;
  const PropagatedMatrix strided = gemm_ini(a.cview(), b.cview(), p, s, ctr);
  const PropagatedLayout& lay = strided.layout();
  ASSERT_GT(lay.block_count(), 1u);
  for (std::size_t blk = 0; blk < lay.block_count(); ++blk) {
    const float* src = strided.storage().data() + blk * (lay.block_size() + 5);
    const float* ref = dense.storage().data() + blk * lay.block_size();
    for (std::size_t e = 0; e < lay.block_size(); ++e) ASSERT_EQ(src[e], ref[e]);
  }
  EXPECT_TRUE(bit_equal(unpack_propagated(strided.cview()).cview(), unpack_propagated(dense.cview()).cview()));
}

TEST(GemmIni, PermutedBlockOrderRoundTrips) {
  SeededRng rng(10);
  const TileParams p{4, 4, 4, 2, 2};
  const Matrix a = random_matrix(11, 5, rng);
  const Matrix b = random_matrix(5, 10, rng);
  PackCounters ctr;
  const PropagatedMatrix dense = gemm_ini(a.cview(), b.cview(), p, ctr);
  const std::size_t blocks = dense.layout().block_count();
  StoreSpec s;
  s.block_order.resize(blocks);
  std::iota(s.block_order.begin(), s.block_order.end(), std::size_t{0});
  for (std::size_t k = blocks - 1; k > 0; --k) std::swap(s.block_order[k], s.block_order[rng.index(0, k)]);
  const PropagatedMatrix perm = gemm_ini(a.cview(), b.cview(), p, s, ctr);

  // slot k of the permuted buffer holds logical block order[k]
  const std::size_t bs = perm.layout().block_size();
  std::vector<float> restored(dense.storage().size());
  for (std::size_t slot = 0; slot < blocks; ++slot) {
    std::copy_n(perm.storage().data() + slot * bs, bs, restored.data() + s.block_order[slot] * bs);
  }
  EXPECT_TRUE(std::equal(restored.begin(), restored.end(), dense.storage().begin()));
  EXPECT_TRUE(bit_equal(unpack_propagated(perm.cview()).cview(), unpack_propagated(dense.cview()).cview()));
}

TEST(GemmIni, MismatchedOutputParamsAreRejected) {
  const Matrix a(4, 4), b(4, 4);
  PropagatedMatrix out(4, 4, TileParams{4, 4, 4, 2, 2});
  PackCounters ctr;
  GemmWorkspace ws;
  EXPECT_THROW(gemm_ini_into(a.cview(), b.cview(), out.view(), TileParams{4, 4, 4, 4, 4}, ctr, ws), LayoutError);
}

TEST(GemmMid, EqualsIniBitExact) {
  SeededRng rng(11);
  for (int t = 0; t < 40; ++t) {
    const TileParams p = random_params(rng);
    const Matrix a = random_matrix(rng.index(1, 80), rng.index(1, 80), rng);
    const Matrix b = random_matrix(a.cols(), rng.index(1, 80), rng);
    PackCounters ctr;
    const PropagatedMatrix ini = gemm_ini(a.cview(), b.cview(), p, ctr);
    const PropagatedMatrix mid = gemm_mid(pack_to_propagated(a.cview(), p).cview(), b.cview(), p, ctr);
    ASSERT_TRUE(std::equal(ini.storage().begin(), ini.storage().end(), mid.storage().begin())) << p.to_string();
  }
}

TEST(GemmMid, ChainMatchesNaive) {
  SeededRng rng(12);
  const TileParams p{8, 12, 6, 4, 3};
  const Matrix a = random_matrix(23, 17, rng);
  const Matrix b = random_matrix(17, 29, rng);
  const Matrix d = random_matrix(29, 13, rng);
  PackCounters ctr;
  const PropagatedMatrix ab = gemm_ini(a.cview(), b.cview(), p, ctr);
  const PropagatedMatrix abd = gemm_mid(ab.cview(), d.cview(), p, ctr);
  const Matrix ref = gemm_naive(gemm_naive(a.cview(), b.cview()).cview(), d.cview());
  EXPECT_LE(max_relative_error(unpack_propagated(abd.cview()).cview(), ref.cview()), 1e-4);
}

TEST(GemmMid, NeverPacksTheMultiplier) {
  SeededRng rng(13);
  const TileParams p{8, 8, 4, 4, 4};
  const Matrix a = random_matrix(30, 20, rng);
  const Matrix b = random_matrix(20, 18, rng);
  const PropagatedMatrix ap = pack_to_propagated(a.cview(), p);
  PackCounters ctr;
  (void)gemm_mid(ap.cview(), b.cview(), p, ctr);
  EXPECT_EQ(ctr.multiplier_pack_elems, 0u);
  EXPECT_EQ(ctr.unpack_elems, 0u);
  EXPECT_GT(ctr.multiplicand_pack_elems, 0u);
  EXPECT_EQ(ctr.mid_calls, 1u);
}

TEST(GemmMid, IntoColumnSliceLeavesOtherColumns) {
  SeededRng rng(14);
  const TileParams p{8, 16, 4, 4, 4};
  const Matrix a = random_matrix(9, 6, rng);
  const Matrix b = random_matrix(6, 4, rng);
  PropagatedMatrix y(9, 12, p);
  for (std::size_t i = 0; i < 9; ++i)
    for (std::size_t j = 0; j < 12; ++j) y.view().at(i, j) = -1.0f;
  PackCounters ctr;
  GemmWorkspace ws;
  gemm_mid_into(pack_to_propagated(a.cview(), p).cview(), b.cview(), column_slice(y.view(), 4, 4), p, ctr, ws);
  const Matrix ref = gemm_default(a.cview(), b.cview(), p, ctr);
  for (std::size_t i = 0; i < 9; ++i)
    for (std::size_t j = 0; j < 12; ++j) {
      if (j >= 4 && j < 8) {
        EXPECT_EQ(y.at(i, j), ref(i, j - 4));
      } else {
        EXPECT_EQ(y.at(i, j), -1.0f);
      }
    }
}

TEST(GemmMid, IncompatibleProducerFallsBack) {
  SeededRng rng(15);
  const TileParams producer{8, 8, 4, 4, 4};
  const TileParams consumer{6, 6, 5, 3, 2};
  const Matrix a = random_matrix(14, 10, rng);
  const Matrix b = random_matrix(10, 7, rng);
  PackCounters ctr;
  const PropagatedMatrix mid = gemm_mid(pack_to_propagated(a.cview(), producer).cview(), b.cview(), consumer, ctr);
  EXPECT_EQ(ctr.layout_fallbacks, 1u);
  EXPECT_GT(ctr.multiplier_pack_elems, 0u);
  EXPECT_EQ(mid.layout().params(), consumer);
  EXPECT_LE(max_relative_error(unpack_propagated(mid.cview()).cview(), gemm_naive(a.cview(), b.cview()).cview()),
            1e-5);
}

TEST(GemmEnd, EqualsDefaultBitExact) {
  SeededRng rng(16);
  for (int t = 0; t < 40; ++t) {
    const TileParams p = random_params(rng);
    const Matrix a = random_matrix(rng.index(1, 80), rng.index(1, 80), rng);
    const Matrix b = random_matrix(a.cols(), rng.index(1, 80), rng);
    PackCounters c1, c2;
    const Matrix def = gemm_default(a.cview(), b.cview(), p, c1);
    const Matrix end = gemm_end(pack_to_propagated(a.cview(), p).cview(), b.cview(), p, c2);
    ASSERT_TRUE(bit_equal(end.cview(), def.cview())) << p.to_string();
    EXPECT_EQ(c2.multiplier_pack_elems, 0u);
  }
}

TEST(GemmEnd, IdentityMultiplicandUnpacks) {
  SeededRng rng(17);
  const TileParams p{4, 4, 4, 2, 2};
  const Matrix a = random_matrix(7, 6, rng);
  const PropagatedMatrix ap = pack_to_propagated(a.cview(), p);
  PackCounters ctr;
  const Matrix c = gemm_end(ap.cview(), Matrix::identity(6).cview(), p, ctr);
  EXPECT_TRUE(bit_equal(c.cview(), unpack_propagated(ap.cview()).cview()));
}

TEST(GemmEnd, TwoGemmPipelineMatchesNaive) {
  SeededRng rng(18);
  const TileParams p{16, 16, 8, 8, 4};
  const Matrix x = random_matrix(37, 29, rng);
  const Matrix w1 = random_matrix(29, 41, rng);
  const Matrix w2 = random_matrix(41, 23, rng);
  PackCounters ctr;
  const PropagatedMatrix h = gemm_ini(x.cview(), w1.cview(), p, ctr);
  const Matrix y = gemm_end(h.cview(), w2.cview(), p, ctr);
  const Matrix ref = gemm_naive(gemm_naive(x.cview(), w1.cview()).cview(), w2.cview());
  EXPECT_LE(max_relative_error(y.cview(), ref.cview()), 1e-4);
  EXPECT_EQ(ctr.ini_calls, 1u);
  EXPECT_EQ(ctr.end_calls, 1u);
}

TEST(GemmEnd, ShapeMismatchThrows) {
  const PropagatedMatrix a(4, 5, TileParams{4, 4, 4, 2, 2});
  const Matrix b(6, 3);
  PackCounters ctr;
  EXPECT_THROW((void)gemm_end(a.cview(), b.cview(), TileParams{4, 4, 4, 2, 2}, ctr), ContractError);
}

TEST(AllPaths, RandomOracleSweep) {
  SeededRng rng(19);
  for (int t = 0; t < 200; ++t) {
    const TileParams p = random_params(rng);
    const std::size_t m = rng.index(1, 96), n = rng.index(1, 96), k = rng.index(1, 96);
    const Matrix a = random_matrix(m, k, rng);
    const Matrix b = random_matrix(k, n, rng);
    const Matrix ref = gemm_naive(a.cview(), b.cview());
    PackCounters ctr;
    const PropagatedMatrix ap = pack_to_propagated(a.cview(), p);
    ASSERT_LE(max_relative_error(gemm_default(a.cview(), b.cview(), p, ctr).cview(), ref.cview()), 1e-4);
    ASSERT_LE(max_relative_error(unpack_propagated(gemm_ini(a.cview(), b.cview(), p, ctr).cview()).cview(),
                                 ref.cview()),
              1e-4);
    ASSERT_LE(max_relative_error(unpack_propagated(gemm_mid(ap.cview(), b.cview(), p, ctr).cview()).cview(),
                                 ref.cview()),
              1e-4);
    ASSERT_LE(max_relative_error(gemm_end(ap.cview(), b.cview(), p, ctr).cview(), ref.cview()), 1e-4);
  }
}

TEST(Chain, DepthThreeMatchesNaive) {
  SeededRng rng(20);
  std::vector<Matrix> w;
  for (int s = 0; s < 3; ++s) w.push_back(random_matrix(32, 32, rng));
  const Matrix x = random_matrix(32, 32, rng);
  const ChainSpec spec{x.cview(), {{w[0].cview(), {}}, {w[1].cview(), {}}, {w[2].cview(), {}}}};
  PackCounters ctr;
  const Matrix out = chain_gemm(spec, TileParams{16, 16, 8, 8, 4}, ctr);
  EXPECT_LE(max_relative_error(out.cview(), chain_naive(spec).cview()), 1e-4);
  EXPECT_EQ(ctr.ini_calls, 1u);
  EXPECT_EQ(ctr.mid_calls, 1u);
  EXPECT_EQ(ctr.end_calls, 1u);
  EXPECT_EQ(ctr.default_calls, 0u);
}

TEST(Chain, DepthTwoUsesIniAndEndOnly) {
  SeededRng rng(21);
  const Matrix x = random_matrix(10, 12, rng);
  const Matrix w1 = random_matrix(12, 9, rng);
  const Matrix w2 = random_matrix(9, 5, rng);
  PackCounters ctr;
  (void)chain_gemm({x.cview(), {{w1.cview(), {}}, {w2.cview(), {}}}}, TileParams{8, 8, 4, 4, 4}, ctr);
  EXPECT_EQ(ctr.ini_calls, 1u);
  EXPECT_EQ(ctr.mid_calls, 0u);
  EXPECT_EQ(ctr.end_calls, 1u);
}

TEST(Chain, ActivationsMatchNaive) {
  SeededRng rng(22);
  const Matrix x = random_matrix(19, 24, rng);
  const Matrix w1 = random_matrix(24, 20, rng);
  const Matrix w2 = random_matrix(20, 20, rng);
  const Matrix w3 = random_matrix(20, 7, rng);
  const ChainSpec spec{x.cview(),
                       {{w1.cview(), Activation::relu()},
                        {w2.cview(), Activation::scaled(0.5f)},
                        {w3.cview(), Activation::relu()}}};
  PackCounters ctr;
  EXPECT_LE(max_relative_error(chain_gemm(spec, TileParams{8, 8, 4, 4, 4}, ctr).cview(), chain_naive(spec).cview()),
            1e-4);
}

TEST(Chain, LayoutClosureForEveryPrefix) {
  SeededRng rng(23);
  const TileParams p{8, 8, 8, 4, 4};
  const Matrix x = random_matrix(17, 16, rng);
  std::vector<Matrix> w;
  for (int s = 0; s < 5; ++s) w.push_back(random_matrix(16, 16, rng, -0.3f, 0.3f));
  PackCounters ctr;
  PropagatedMatrix cur = gemm_ini(x.cview(), w[0].cview(), p, ctr);
  Matrix ref = gemm_naive(x.cview(), w[0].cview());
  for (std::size_t s = 1; s < w.size(); ++s) {
    cur = gemm_mid(cur.cview(), w[s].cview(), p, ctr);
    ref = gemm_naive(ref.cview(), w[s].cview());
    ASSERT_LE(max_relative_error(unpack_propagated(cur.cview()).cview(), ref.cview()), 1e-4) << "prefix " << s;
  }
}

TEST(Chain, NonConformingStagesThrow) {
  const Matrix x(4, 5), w1(5, 6), w2(7, 3);
  PackCounters ctr;
  EXPECT_THROW((void)chain_gemm({x.cview(), {{w1.cview(), {}}, {w2.cview(), {}}}}, TileParams{}, ctr),
               ContractError);
  EXPECT_THROW((void)chain_gemm({x.cview(), {}}, TileParams{}, ctr), ContractError);
}

TEST(Chain, DepthEightPacksAnEighth) {
  SeededRng rng(24);
  const std::size_t n = 512;
  const TileParams p = TileParams::x86_avx512();
  const Matrix x = random_matrix(n, n, rng);
  const Matrix w = random_matrix(n, n, rng, -0.05f, 0.05f);
  ChainSpec spec{x.cview(), {}};
  for (int s = 0; s < 8; ++s) spec.stages.push_back({w.cview(), {}});
  PackCounters lp, def;
  (void)chain_gemm(spec, p, lp);
  (void)chain_default(spec, p, def);
  EXPECT_EQ(lp.mid_calls, 6u);
  EXPECT_LE(static_cast<double>(lp.multiplier_pack_elems), (1.0 / 8 + 1e-9) * def.multiplier_pack_elems);
  EXPECT_EQ(8 * lp.multiplier_pack_elems, def.multiplier_pack_elems);
}
