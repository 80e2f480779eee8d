#pragma once

// Register-tile micro-kernels. Both variants share one accumulation routine
// and differ only in how the finished mr x nr tile is stored:
//   microkernel_default   - scattered back to canonical (row, ld) addressing
//   microkernel_propagate - one contiguous nr x mr store (mr fastest)

#include <array>
#include <cstring>
#include <span>

#include "lpgemm/core.hpp"

namespace lpgemm {

/// `depth` consecutive multiplier steps of mr contiguous values each.
struct MultiplierRun {
  const float* data = nullptr;
  std::size_t depth = 0;
};

/// mr x nr accumulator, stored column-major (mr fastest) to match the
/// propagated micro-tile.
struct MicroTileAccumulator {
  std::size_t mr = 0;
  std::size_t nr = 0;
  alignas(64) std::array<float, kMaxRegisterTile * kMaxRegisterTile> tile;

  float operator()(std::size_t r, std::size_t c) const noexcept { return tile[c * mr + r]; }
};

namespace detail {

template <std::size_t N>
struct FloatVec;
template <>
struct FloatVec<4> {
  typedef float type __attribute__((vector_size(16)));
};
template <>
struct FloatVec<8> {
  typedef float type __attribute__((vector_size(32)));
};
template <>
struct FloatVec<16> {
  typedef float type __attribute__((vector_size(64)));
};

// Runs read in place from a propagated buffer jump between tiles, which the
// hardware prefetchers follow poorly.
inline void prefetch_run(const MultiplierRun& run, std::size_t mr) {
  const char* p = reinterpret_cast<const char*>(run.data);
  const std::size_t bytes = run.depth * mr * sizeof(float);
  for (std::size_t off = 0; off < bytes; off += 64) __builtin_prefetch(p + off);
}

// One accumulator vector per tile column; lanes are the mr rows. Each lane
// performs the same scalar multiply-add sequence as the generic path.
template <std::size_t MR, std::size_t NR>
inline void accumulate_fixed(std::span<const MultiplierRun> runs, const float* sb, float* out) {
  using vec = typename FloatVec<MR>::type;
  static_assert(sizeof(vec) == MR * sizeof(float));
  vec acc[NR];
  std::memcpy(acc, out, sizeof(acc));
  for (std::size_t i = 0; i < runs.size(); ++i) {
    if (i + 2 < runs.size()) prefetch_run(runs[i + 2], MR);
    const MultiplierRun& run = runs[i];
    const float* a = run.data;
    for (std::size_t l = 0; l < run.depth; ++l) {
      vec av;
      std::memcpy(&av, a, sizeof(vec));
      for (std::size_t c = 0; c < NR; ++c) acc[c] += av * sb[c];
      a += MR;
      sb += NR;
    }
  }
  std::memcpy(out, acc, sizeof(acc));
}

// Two tiles side by side (sb0, sb1) over the same multiplier runs. Twice the
// independent accumulators of a single tile; every lane still sees the same
// multiply-add sequence.
template <std::size_t MR, std::size_t NR>
inline void accumulate_fixed_cols(std::span<const MultiplierRun> runs, const float* sb0, const float* sb1,
                                  float* out0, float* out1) {
  using vec = typename FloatVec<MR>::type;
  vec acc0[NR], acc1[NR];
  std::memcpy(acc0, out0, sizeof(acc0));
  std::memcpy(acc1, out1, sizeof(acc1));
  for (std::size_t i = 0; i < runs.size(); ++i) {
    if (i + 2 < runs.size()) prefetch_run(runs[i + 2], MR);
    const float* a = runs[i].data;
    for (std::size_t l = 0; l < runs[i].depth; ++l) {
      vec av;
      std::memcpy(&av, a, sizeof(vec));
      for (std::size_t c = 0; c < NR; ++c) acc0[c] += av * sb0[c];
      for (std::size_t c = 0; c < NR; ++c) acc1[c] += av * sb1[c];
      a += MR;
      sb0 += NR;
      sb1 += NR;
    }
  }
  std::memcpy(out0, acc0, sizeof(acc0));
  std::memcpy(out1, acc1, sizeof(acc1));
}

// Two tiles stacked (contiguous panels a0, a1 of equal depth) over one sb panel.
template <std::size_t MR, std::size_t NR>
inline void accumulate_fixed_rows(const float* a0, const float* a1, std::size_t depth, const float* sb,
                                  float* out0, float* out1) {
  using vec = typename FloatVec<MR>::type;
  vec acc0[NR], acc1[NR];
  std::memcpy(acc0, out0, sizeof(acc0));
  std::memcpy(acc1, out1, sizeof(acc1));
  for (std::size_t l = 0; l < depth; ++l) {
    vec v0, v1;
    std::memcpy(&v0, a0, sizeof(vec));
    std::memcpy(&v1, a1, sizeof(vec));
    for (std::size_t c = 0; c < NR; ++c) {
      acc0[c] += v0 * sb[c];
      acc1[c] += v1 * sb[c];
    }
    a0 += MR;
    a1 += MR;
    sb += NR;
  }
  std::memcpy(out0, acc0, sizeof(acc0));
  std::memcpy(out1, acc1, sizeof(acc1));
}

inline void accumulate_generic(std::span<const MultiplierRun> runs, const float* sb, std::size_t mr,
                               std::size_t nr, float* out) {
  for (std::size_t i = 0; i < runs.size(); ++i) {
    if (i + 2 < runs.size()) prefetch_run(runs[i + 2], mr);
    const MultiplierRun& run = runs[i];
    const float* a = run.data;
    for (std::size_t l = 0; l < run.depth; ++l) {
      for (std::size_t c = 0; c < nr; ++c) {
        const float b = sb[c];
        float* o = out + c * mr;
        for (std::size_t r = 0; r < mr; ++r) o[r] += a[r] * b;
      }
      a += mr;
      sb += nr;
    }
  }
}

}  // namespace detail

/// acc(r, c) += sum over the runs' depth of sa(l, r) * sb(l, c), one
/// multiply-add per step in increasing l. The accumulation order per element
/// is fixed, so equal inputs give bit-identical tiles regardless of how the
/// tile is later stored, and splitting the depth across calls that carry the
/// partial tile forward gives the same bits as one call.
inline void accumulate_tile(std::span<const MultiplierRun> runs, const float* sb, MicroTileAccumulator& acc) {
  float* out = acc.tile.data();
  switch (acc.mr * 64 + acc.nr) {
    case 16 * 64 + 4: detail::accumulate_fixed<16, 4>(runs, sb, out); break;
    case 16 * 64 + 8: detail::accumulate_fixed<16, 8>(runs, sb, out); break;
    case 8 * 64 + 8: detail::accumulate_fixed<8, 8>(runs, sb, out); break;
    case 8 * 64 + 4: detail::accumulate_fixed<8, 4>(runs, sb, out); break;
    case 4 * 64 + 4: detail::accumulate_fixed<4, 4>(runs, sb, out); break;
    default: detail::accumulate_generic(runs, sb, acc.mr, acc.nr, out); break;
  }
}

/// Tiles (0, 0) and (0, 1) of a pair sharing the multiplier runs; bit-identical
/// to two accumulate_tile calls.
inline void accumulate_tile_pair_cols(std::span<const MultiplierRun> runs, const float* sb0, const float* sb1,
                                      MicroTileAccumulator& acc0, MicroTileAccumulator& acc1) {
  float* o0 = acc0.tile.data();
  float* o1 = acc1.tile.data();
  switch (acc0.mr * 64 + acc0.nr) {
    case 16 * 64 + 4: detail::accumulate_fixed_cols<16, 4>(runs, sb0, sb1, o0, o1); break;
    case 16 * 64 + 8: detail::accumulate_fixed_cols<16, 8>(runs, sb0, sb1, o0, o1); break;
    case 8 * 64 + 8: detail::accumulate_fixed_cols<8, 8>(runs, sb0, sb1, o0, o1); break;
    case 8 * 64 + 4: detail::accumulate_fixed_cols<8, 4>(runs, sb0, sb1, o0, o1); break;
    case 4 * 64 + 4: detail::accumulate_fixed_cols<4, 4>(runs, sb0, sb1, o0, o1); break;
    default:
      accumulate_tile(runs, sb0, acc0);
      accumulate_tile(runs, sb1, acc1);
      break;
  }
}

/// Tiles (0, 0) and (1, 0) of a pair sharing one sb panel.
inline void accumulate_tile_pair_rows(std::span<const MultiplierRun> runs0, std::span<const MultiplierRun> runs1,
                                      const float* sb, MicroTileAccumulator& acc0, MicroTileAccumulator& acc1) {
  const bool simple = runs0.size() == 1 && runs1.size() == 1 && runs0[0].depth == runs1[0].depth;
  float* o0 = acc0.tile.data();
  float* o1 = acc1.tile.data();
  const float* a0 = runs0.empty() ? nullptr : runs0[0].data;
  const float* a1 = runs1.empty() ? nullptr : runs1[0].data;
  const std::size_t d = simple ? runs0[0].depth : 0;
  switch (simple ? acc0.mr * 64 + acc0.nr : 0) {
    case 16 * 64 + 4: detail::accumulate_fixed_rows<16, 4>(a0, a1, d, sb, o0, o1); break;
    case 16 * 64 + 8: detail::accumulate_fixed_rows<16, 8>(a0, a1, d, sb, o0, o1); break;
    case 8 * 64 + 8: detail::accumulate_fixed_rows<8, 8>(a0, a1, d, sb, o0, o1); break;
    case 8 * 64 + 4: detail::accumulate_fixed_rows<8, 4>(a0, a1, d, sb, o0, o1); break;
    case 4 * 64 + 4: detail::accumulate_fixed_rows<4, 4>(a0, a1, d, sb, o0, o1); break;
    default:
      accumulate_tile(runs0, sb, acc0);
      accumulate_tile(runs1, sb, acc1);
      break;
  }
}

/// Starts a tile from zero, or from the current contents of the canonical
/// window `dst` when accumulating (entries outside the window start at zero).
inline void load_default(MicroTileAccumulator& acc, std::size_t mr, std::size_t nr, MatrixView dst,
                         bool accumulate) {
  acc.mr = mr;
  acc.nr = nr;
  std::fill_n(acc.tile.data(), mr * nr, 0.0f);
  if (!accumulate) return;
  for (std::size_t r = 0; r < dst.rows(); ++r) {
    const float* d = dst.row(r);
    for (std::size_t c = 0; c < dst.cols(); ++c) acc.tile[c * mr + r] = d[c];
  }
}

inline void load_propagate(MicroTileAccumulator& acc, std::size_t mr, std::size_t nr, const float* slot,
                           bool accumulate) {
  acc.mr = mr;
  acc.nr = nr;
  if (accumulate) {
    std::copy_n(slot, mr * nr, acc.tile.data());
  } else {
    std::fill_n(acc.tile.data(), mr * nr, 0.0f);
  }
}

/// Canonical store: scatters the tile back to (row, ld) addressing. Rows and
/// columns outside the (possibly clipped) window are not written.
inline void store_default(const MicroTileAccumulator& acc, MatrixView dst) {
  const std::size_t mr = acc.mr;
  const float* t = acc.tile.data();
  for (std::size_t r = 0; r < dst.rows(); ++r) {
    float* d = dst.row(r);
    for (std::size_t c = 0; c < dst.cols(); ++c) d[c] = t[c * mr + r];
  }
}

/// Contiguous store of all mr * nr values into one propagated micro-tile slot.
inline void store_propagate(const MicroTileAccumulator& acc, float* slot) {
  std::copy_n(acc.tile.data(), acc.mr * acc.nr, slot);
}

/// dst (+)= sa * sb over the panels' depth, stored canonically. `dst` is the
/// mr x nr window of C, clipped at the matrix edge.
inline void microkernel_default(std::span<const MultiplierRun> sa, const float* sb, std::size_t mr,
                                std::size_t nr, MatrixView dst, bool accumulate) {
  MicroTileAccumulator acc;
  load_default(acc, mr, nr, dst, accumulate);
  accumulate_tile(sa, sb, acc);
  store_default(acc, dst);
}

/// Single contiguous sa panel of depth kc.
inline void microkernel_default(const float* sa, const float* sb, std::size_t kc, std::size_t mr,
                                std::size_t nr, MatrixView dst, bool accumulate) {
  const MultiplierRun run{sa, kc};
  microkernel_default(std::span<const MultiplierRun>(&run, 1), sb, mr, nr, dst, accumulate);
}

/// slot (+)= sa * sb over the panels' depth; the slot is one contiguous
/// propagated micro-tile (nr columns of mr rows).
inline void microkernel_propagate(std::span<const MultiplierRun> sa, const float* sb, std::size_t mr,
                                  std::size_t nr, float* slot, bool accumulate) {
  MicroTileAccumulator acc;
  load_propagate(acc, mr, nr, slot, accumulate);
  accumulate_tile(sa, sb, acc);
  store_propagate(acc, slot);
}

inline void microkernel_propagate(const float* sa, const float* sb, std::size_t kc, std::size_t mr,
                                  std::size_t nr, float* slot, bool accumulate) {
  const MultiplierRun run{sa, kc};
  microkernel_propagate(std::span<const MultiplierRun>(&run, 1), sb, mr, nr, slot, accumulate);
}

}  // namespace lpgemm
