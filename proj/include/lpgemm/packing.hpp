#pragma once

// Packing of canonical operands into the micro-kernel panel formats (sa / sb),
// and conversion between canonical and propagated storage.

#include <cstdint>
#include <vector>

#include "lpgemm/core.hpp"

namespace lpgemm {

/// Element traffic through pack/unpack/store paths, plus kernel call tallies.
///
/// `unpack_elems` counts elements written back to canonical layout from a
/// computed or packed tile: stores of the default micro-kernel and explicit
/// unpack_propagated calls.
struct PackCounters {
  std::uint64_t multiplier_pack_elems = 0;
  std::uint64_t multiplicand_pack_elems = 0;
  std::uint64_t unpack_elems = 0;
  std::uint64_t layout_fallbacks = 0;

  std::uint64_t default_calls = 0;
  std::uint64_t ini_calls = 0;
  std::uint64_t mid_calls = 0;
  std::uint64_t end_calls = 0;

  std::uint64_t bytes_moved() const noexcept {
    return (multiplier_pack_elems + multiplicand_pack_elems + unpack_elems) * sizeof(float);
  }
  /// Activation traffic: multiplier packing plus canonical write-back.
  std::uint64_t pack_unpack_elems() const noexcept { return multiplier_pack_elems + unpack_elems; }

  PackCounters& operator+=(const PackCounters& o) noexcept {
    multiplier_pack_elems += o.multiplier_pack_elems;
    multiplicand_pack_elems += o.multiplicand_pack_elems;
    unpack_elems += o.unpack_elems;
    layout_fallbacks += o.layout_fallbacks;
    default_calls += o.default_calls;
    ini_calls += o.ini_calls;
    mid_calls += o.mid_calls;
    end_calls += o.end_calls;
    return *this;
  }
  friend bool operator==(const PackCounters&, const PackCounters&) = default;
};

struct Index2 {
  std::size_t row = 0;
  std::size_t col = 0;
};

enum class PanelKind { MultiplierSA, MultiplicandSB };

/// A packed sa or sb buffer.
///
/// MultiplierSA: ceil(rows / mr) panels; panel p holds `depth` steps of mr
/// values (rows interleaved, unit stride along mr).
/// MultiplicandSB: ceil(cols / nr) panels; panel q holds `depth` steps of nr
/// values (columns interleaved, unit stride along nr).
struct PackedPanelBuffer {
  PanelKind kind = PanelKind::MultiplierSA;
  Index2 origin;
  std::size_t rows = 0;   // logical extent of the packed block
  std::size_t cols = 0;
  std::size_t depth = 0;  // cols for SA, rows for SB
  std::size_t tile = 1;   // mr for SA, nr for SB
  std::vector<float> data;

  std::size_t panel_count() const noexcept {
    return ceil_div(kind == PanelKind::MultiplierSA ? rows : cols, tile);
  }
  std::size_t panel_size() const noexcept { return depth * tile; }
  const float* panel(std::size_t p) const noexcept { return data.data() + p * panel_size(); }

  /// Canonical copy of the packed block including padding rows/cols.
  Matrix to_matrix() const {
    const bool sa = kind == PanelKind::MultiplierSA;
    Matrix m(sa ? panel_count() * tile : depth, sa ? depth : panel_count() * tile);
    for (std::size_t p = 0; p < panel_count(); ++p) {
      const float* src = panel(p);
      for (std::size_t l = 0; l < depth; ++l) {
        for (std::size_t t = 0; t < tile; ++t) {
          if (sa) {
            m(p * tile + t, l) = src[l * tile + t];
          } else {
            m(l, p * tile + t) = src[l * tile + t];
          }
        }
      }
    }
    return m;
  }
};

/// Packs the block of `src` at `origin` with extent (mc, kc), clipped to src,
/// into `out` as mr-row panels. Rows past the clipped extent are zero.
/// Each element is multiplied by `alpha`.
inline void pack_multiplier(ConstMatrixView src, Index2 origin, Index2 block_dims,
                            const TileParams& params, PackCounters& counters,
                            PackedPanelBuffer& out, float alpha = 1.0f) {
  if (origin.row >= src.rows() || origin.col >= src.cols()) {
    throw ContractError("pack_multiplier: block origin outside source");
  }
  const std::size_t mr = params.mr;
  const std::size_t rows = std::min(block_dims.row, src.rows() - origin.row);
  const std::size_t depth = std::min(block_dims.col, src.cols() - origin.col);
  const std::size_t panels = ceil_div(rows, mr);

  out.kind = PanelKind::MultiplierSA;
  out.origin = origin;
  out.rows = rows;
  out.cols = depth;
  out.depth = depth;
  out.tile = mr;
  out.data.resize(panels * mr * depth);

  for (std::size_t p = 0; p < panels; ++p) {
    float* dst = out.data.data() + p * mr * depth;
    const std::size_t live = std::min(mr, rows - p * mr);
    for (std::size_t r = 0; r < live; ++r) {
      const float* s = src.row(origin.row + p * mr + r) + origin.col;
      if (alpha == 1.0f) {
        for (std::size_t l = 0; l < depth; ++l) dst[l * mr + r] = s[l];
      } else {
        for (std::size_t l = 0; l < depth; ++l) dst[l * mr + r] = alpha * s[l];
      }
    }
    for (std::size_t r = live; r < mr; ++r) {
      for (std::size_t l = 0; l < depth; ++l) dst[l * mr + r] = 0.0f;
    }
  }
  counters.multiplier_pack_elems += panels * mr * depth;
}

inline PackedPanelBuffer pack_multiplier(ConstMatrixView src, Index2 origin, Index2 block_dims,
                                         const TileParams& params, PackCounters& counters) {
  PackedPanelBuffer out;
  pack_multiplier(src, origin, block_dims, params, counters, out);
  return out;
}

/// Packs the (kc, width) region of `src` at `origin` into consecutive
/// nr-column panels of `out`, starting at panel index `first_panel`.
/// `out` must already be shaped (see begin_multiplicand_block).
inline void pack_multiplicand_panels(ConstMatrixView src, Index2 origin, std::size_t width,
                                     std::size_t first_panel, const TileParams& params,
                                     PackCounters& counters, PackedPanelBuffer& out) {
  const std::size_t nr = params.nr;
  const std::size_t depth = out.depth;
  const std::size_t panels = ceil_div(width, nr);
  for (std::size_t q = 0; q < panels; ++q) {
    float* dst = out.data.data() + (first_panel + q) * depth * nr;
    const std::size_t c0 = origin.col + q * nr;
    const std::size_t live = std::min(nr, width - q * nr);
    for (std::size_t l = 0; l < depth; ++l) {
      const float* s = src.row(origin.row + l) + c0;
      float* d = dst + l * nr;
      std::size_t c = 0;
      for (; c < live; ++c) d[c] = s[c];
      for (; c < nr; ++c) d[c] = 0.0f;
    }
  }
  counters.multiplicand_pack_elems += panels * nr * depth;
}

/// Shapes `out` to hold the sb panels of the (kc, nc) block of `src` at origin.
inline void begin_multiplicand_block(ConstMatrixView src, Index2 origin, Index2 block_dims,
                                     const TileParams& params, PackedPanelBuffer& out) {
  if (origin.row >= src.rows() || origin.col >= src.cols()) {
    throw ContractError("pack_multiplicand: panel origin outside source");
  }
  out.kind = PanelKind::MultiplicandSB;
  out.origin = origin;
  out.depth = std::min(block_dims.row, src.rows() - origin.row);
  out.rows = out.depth;
  out.cols = std::min(block_dims.col, src.cols() - origin.col);
  out.tile = params.nr;
  out.data.resize(ceil_div(out.cols, params.nr) * params.nr * out.depth);
}

/// Packs one or more nr-column panels of the (kc, width) block at `origin`.
inline void pack_multiplicand(ConstMatrixView src, Index2 origin, Index2 panel_dims,
                              const TileParams& params, PackCounters& counters,
                              PackedPanelBuffer& out) {
  begin_multiplicand_block(src, origin, panel_dims, params, out);
  pack_multiplicand_panels(src, origin, out.cols, 0, params, counters, out);
}

inline PackedPanelBuffer pack_multiplicand(ConstMatrixView src, Index2 origin, Index2 panel_dims,
                                           const TileParams& params, PackCounters& counters) {
  PackedPanelBuffer out;
  pack_multiplicand(src, origin, panel_dims, params, counters, out);
  return out;
}

// ---------------------------------------------------------------------------
// Propagated <-> canonical

/// Copies a canonical matrix into an existing propagated view. Padding inside
/// the view's blocks is zeroed.
inline void pack_into_propagated(ConstMatrixView src, const PropagatedView& dst, PackCounters* counters = nullptr) {
  const PropagatedLayout& lay = dst.layout();
  if (src.rows() != lay.rows() || src.cols() != lay.cols()) {
    throw ContractError("pack_to_propagated: dimension mismatch");
  }
  const std::size_t mr = lay.params().mr;
  const std::size_t nr = lay.params().nr;
  for (std::size_t i0 = 0; i0 < lay.padded_rows(); i0 += mr) {
    for (std::size_t j0 = 0; j0 < lay.padded_cols(); j0 += nr) {
      float* t = dst.tile(i0, j0);
      for (std::size_t c = 0; c < nr; ++c) {
        const std::size_t j = j0 + c;
        for (std::size_t r = 0; r < mr; ++r) {
          const std::size_t i = i0 + r;
          t[c * mr + r] = (i < src.rows() && j < src.cols()) ? src(i, j) : 0.0f;
        }
      }
    }
  }
  if (counters) counters->multiplier_pack_elems += lay.padded_rows() * lay.padded_cols();
}

inline PropagatedMatrix pack_to_propagated(ConstMatrixView src, const TileParams& params,
                                           PackCounters* counters = nullptr) {
  PropagatedMatrix out(src.rows(), src.cols(), params);
  pack_into_propagated(src, out.view(), counters);
  return out;
}

/// Writes the logical region of `src` into `dst`; padding is never written.
inline void unpack_propagated(const ConstPropagatedView& src, MatrixView dst,
                              PackCounters* counters = nullptr) {
  const PropagatedLayout& lay = src.layout();
  if (dst.rows() != lay.rows() || dst.cols() != lay.cols()) {
    throw ContractError("unpack_propagated: destination is " + std::to_string(dst.rows()) + "x" +
                        std::to_string(dst.cols()) + ", source is " + std::to_string(lay.rows()) + "x" +
                        std::to_string(lay.cols()));
  }
  const std::size_t mr = lay.params().mr;
  const std::size_t nr = lay.params().nr;
  for (std::size_t i0 = 0; i0 < lay.rows(); i0 += mr) {
    const std::size_t rlive = std::min(mr, lay.rows() - i0);
    for (std::size_t j0 = 0; j0 < lay.cols(); j0 += nr) {
      const std::size_t clive = std::min(nr, lay.cols() - j0);
      const float* t = src.tile(i0, j0);
      for (std::size_t r = 0; r < rlive; ++r) {
        float* d = dst.row(i0 + r) + j0;
        for (std::size_t c = 0; c < clive; ++c) d[c] = t[c * mr + r];
      }
    }
  }
  if (counters) counters->unpack_elems += lay.rows() * lay.cols();
}

inline Matrix unpack_propagated(const ConstPropagatedView& src, PackCounters* counters = nullptr) {
  Matrix out(src.rows(), src.cols());
  unpack_propagated(src, out.view(), counters);
  return out;
}

}  // namespace lpgemm
