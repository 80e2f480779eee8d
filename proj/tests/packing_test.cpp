#include <gtest/gtest.h>

#include "lpgemm/kernels.hpp"
#include "lpgemm/packing.hpp"
#include "lpgemm/random.hpp"

using namespace lpgemm;

TEST(PackMultiplier, SingleElement) {
  Matrix x(1, 1);
  x.view()(0, 0) = 3.5f;
  PackCounters ctr;
  const auto buf = pack_multiplier(x.cview(), {0, 0}, {1, 1}, TileParams{1, 1, 1, 1, 1}, ctr);
  ASSERT_EQ(buf.data.size(), 1u);
  EXPECT_EQ(buf.data[0], 3.5f);
  EXPECT_EQ(ctr.multiplier_pack_elems, 1u);
}

TEST(PackMultiplier, IdentityInterleavesRowPairs) {
  const Matrix eye = Matrix::identity(4);
  PackCounters ctr;
  const auto buf = pack_multiplier(eye.cview(), {0, 0}, {4, 4}, TileParams{4, 4, 4, 2, 2}, ctr);
  ASSERT_EQ(buf.panel_count(), 2u);
  ASSERT_EQ(buf.panel_size(), 8u);
  const std::vector<float> p0(buf.panel(0), buf.panel(0) + 8);
  const std::vector<float> p1(buf.panel(1), buf.panel(1) + 8);
  EXPECT_EQ(p0, (std::vector<float>{1, 0, 0, 1, 0, 0, 0, 0}));
  EXPECT_EQ(p1, (std::vector<float>{0, 0, 0, 0, 1, 0, 0, 1}));
  EXPECT_TRUE(bit_equal(buf.to_matrix().cview(), eye.cview()));
}

TEST(PackMultiplier, EdgeBlockIsZeroPadded) {
  SeededRng rng(7);
  const Matrix x = random_matrix(7, 5, rng);
  PackCounters ctr;
  const auto buf = pack_multiplier(x.cview(), {0, 0}, {8, 8}, TileParams{8, 8, 8, 4, 4}, ctr);
  const Matrix back = buf.to_matrix();
  ASSERT_EQ(back.rows(), 8u);
  ASSERT_EQ(back.cols(), 5u);
  EXPECT_TRUE(bit_equal(back.cview().sub(0, 0, 7, 5), x.cview()));
  for (std::size_t j = 0; j < 5; ++j) EXPECT_EQ(back(7, j), 0.0f);
}

TEST(PackMultiplier, OriginOutsideSourceIsRejected) {
  const Matrix x(3, 3);
  PackCounters ctr;
  EXPECT_THROW((void)pack_multiplier(x.cview(), {3, 0}, {2, 2}, TileParams{2, 2, 2, 2, 2}, ctr), ContractError);
}

TEST(PackMultiplicand, SingleElement) {
  Matrix x(1, 1);
  x.view()(0, 0) = -2.0f;
  PackCounters ctr;
  const auto buf = pack_multiplicand(x.cview(), {0, 0}, {1, 1}, TileParams{1, 1, 1, 1, 1}, ctr);
  EXPECT_EQ(buf.data, std::vector<float>{-2.0f});
  EXPECT_EQ(ctr.multiplicand_pack_elems, 1u);
}

TEST(PackMultiplicand, TwoByTwoInterleavesColumns) {
  Matrix x(2, 2);
  x.view()(0, 0) = 1;
  x.view()(0, 1) = 2;
  x.view()(1, 0) = 3;
  x.view()(1, 1) = 4;
  PackCounters ctr;
  const auto buf = pack_multiplicand(x.cview(), {0, 0}, {2, 2}, TileParams{2, 2, 2, 2, 2}, ctr);
  EXPECT_EQ(buf.data, (std::vector<float>{1, 2, 3, 4}));
}

TEST(PackMultiplicand, NarrowEdgePanelHasZeroTail) {
  SeededRng rng(3);
  const Matrix x = random_matrix(3, 5, rng);
  PackCounters ctr;
  const auto buf = pack_multiplicand(x.cview(), {0, 3}, {3, 4}, TileParams{4, 4, 4, 4, 4}, ctr);
  ASSERT_EQ(buf.data.size(), 12u);
  for (std::size_t l = 0; l < 3; ++l) {
    EXPECT_EQ(buf.data[l * 4 + 0], x(l, 3));
    EXPECT_EQ(buf.data[l * 4 + 1], x(l, 4));
    EXPECT_EQ(buf.data[l * 4 + 2], 0.0f);
    EXPECT_EQ(buf.data[l * 4 + 3], 0.0f);
  }
}

TEST(PackToPropagated, SingleElement) {
  Matrix x(1, 1);
  x.view()(0, 0) = 9.0f;
  for (const TileParams p : {TileParams{1, 1, 1, 1, 1}, TileParams{}, TileParams{8, 8, 8, 4, 8}}) {
    const PropagatedMatrix q = pack_to_propagated(x.cview(), p);
    EXPECT_EQ(q.storage()[0], 9.0f);
    EXPECT_EQ(q.at(0, 0), 9.0f);
  }
}

TEST(PackToPropagated, FollowsOffsetMap) {
  const TileParams p{4, 4, 4, 2, 2};
  Matrix x(4, 4);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) x.view()(i, j) = float(i * 4 + j + 1);
  const PropagatedMatrix q = pack_to_propagated(x.cview(), p);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(q.storage()[propagated_offset(i, j, 4, 4, p)], x(i, j));
}

TEST(PackToPropagated, RegisterTileRoundTrip) {
  SeededRng rng(11);
  const Matrix x = random_matrix(19, 23, rng);
  const TileParams p{32, 16, 8, 16, 4};
  const PropagatedMatrix q = pack_to_propagated(x.cview(), p);
  EXPECT_TRUE(bit_equal(unpack_propagated(q.cview()).cview(), x.cview()));
}

TEST(PackToPropagated, PaddingIsZero) {
  SeededRng rng(12);
  const Matrix x = random_matrix(5, 7, rng, 1.0f, 2.0f);
  const TileParams p{4, 4, 4, 4, 4};
  const PropagatedMatrix q = pack_to_propagated(x.cview(), p);
  const PropagatedLayout& lay = q.layout();
  for (std::size_t i = 0; i < lay.padded_rows(); ++i)
    for (std::size_t j = 0; j < lay.padded_cols(); ++j)
      if (i >= 5 || j >= 7) EXPECT_EQ(q.storage()[lay.offset_unchecked(i, j)], 0.0f);
}

TEST(PackToPropagated, ZerosGiveZeroBufferOfPaddedSize) {
  const Matrix x(6, 10);
  const TileParams p{4, 8, 4, 4, 4};
  const PropagatedMatrix q = pack_to_propagated(x.cview(), p);
  EXPECT_EQ(q.storage().size(), q.padded_rows() * q.padded_cols());
  for (float v : q.storage()) EXPECT_EQ(v, 0.0f);
}

TEST(UnpackPropagated, RandomShapesRoundTrip) {
  SeededRng rng(2025);
  for (int t = 0; t < 50; ++t) {
    const std::size_t mr = rng.index(1, 8), nr = rng.index(1, 8);
    const TileParams p{mr * rng.index(1, 4), nr * rng.index(1, 4), rng.index(1, 16), mr, nr};
    const Matrix x = random_matrix(rng.index(1, 64), rng.index(1, 64), rng);
    const PropagatedMatrix q = pack_to_propagated(x.cview(), p);
    ASSERT_TRUE(bit_equal(unpack_propagated(q.cview()).cview(), x.cview())) << p.to_string();
  }
}

TEST(UnpackPropagated, AllZero) {
  const PropagatedMatrix q(5, 9, TileParams{4, 4, 4, 2, 2});
  const Matrix back = unpack_propagated(q.cview());
  for (float v : back.flat()) EXPECT_EQ(v, 0.0f);
}

TEST(UnpackPropagated, UnitTilesAreIdentityCopy) {
  Matrix x(2, 2);
  x.view()(0, 0) = 1;
  x.view()(0, 1) = 2;
  x.view()(1, 0) = 3;
  x.view()(1, 1) = 4;
  const PropagatedMatrix q = pack_to_propagated(x.cview(), TileParams{1, 1, 1, 1, 1});
  EXPECT_TRUE(bit_equal(unpack_propagated(q.cview()).cview(), x.cview()));
}

TEST(UnpackPropagated, WrongDestinationShape) {
  const PropagatedMatrix q(3, 3, TileParams{2, 2, 2, 2, 2});
  Matrix wrong(3, 4);
  EXPECT_THROW(unpack_propagated(q.cview(), wrong.view()), ContractError);
}

TEST(UnpackPropagated, CountsLogicalElements) {
  const PropagatedMatrix q(5, 7, TileParams{4, 4, 4, 4, 4});
  PackCounters ctr;
  (void)unpack_propagated(q.cview(), &ctr);
  EXPECT_EQ(ctr.unpack_elems, 35u);
}

// Default GEMM packs every mc x kc block of A once per nc pass.
TEST(PackCounters, DefaultGemmMatchesLoopStructure) {
  SeededRng rng(5);
  const TileParams p{8, 8, 4, 4, 4};
  const std::size_t m = 24, n = 20, k = 12;  // multiples of mc and kc
  const Matrix a = random_matrix(m, k, rng);
  const Matrix b = random_matrix(k, n, rng);
  PackCounters ctr;
  (void)gemm_default(a.cview(), b.cview(), p, ctr);
  const std::size_t nc_passes = ceil_div(n, p.nc);
  EXPECT_EQ(ctr.multiplier_pack_elems, ceil_div(m, p.mc) * ceil_div(k, p.kc) * (p.mc * p.kc) * nc_passes);
  EXPECT_EQ(ctr.multiplicand_pack_elems, k * round_up(n, p.nr));
}

// Ragged edges pack the register-tile padded size of each block.
TEST(PackCounters, DefaultGemmRaggedEdges) {
  SeededRng rng(6);
  const TileParams p{8, 8, 4, 4, 4};
  const std::size_t m = 21, n = 19, k = 10;
  const Matrix a = random_matrix(m, k, rng);
  const Matrix b = random_matrix(k, n, rng);
  PackCounters ctr;
  (void)gemm_default(a.cview(), b.cview(), p, ctr);
  EXPECT_EQ(ctr.multiplier_pack_elems, round_up(m, p.mr) * k * ceil_div(n, p.nc));
  EXPECT_EQ(ctr.multiplicand_pack_elems, k * round_up(n, p.nr));
}
