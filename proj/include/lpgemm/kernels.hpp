#pragma once

// GEMM entry points.
//
//   gemm_naive    64-bit accumulating triple loop; the correctness oracle
//   gemm_default  blocked GotoBLAS kernel, canonical in, canonical out
//   gemm_ini      canonical in, propagated out (starts propagation)
//   gemm_mid      propagated multiplier in, propagated out (no multiplier packing)
//   gemm_end      propagated multiplier in, canonical out (ends propagation)
//
// All blocked kernels compute C = A * B with A (M x K) as the multiplier and
// B (K x N) as the multiplicand, so each output can feed the next GEMM's
// multiplier. The LP kernels fix alpha = 1, beta = 0.

#include <vector>

#include "lpgemm/core.hpp"
#include "lpgemm/layout_ops.hpp"
#include "lpgemm/microkernel.hpp"
#include "lpgemm/packing.hpp"

namespace lpgemm {

struct GemmProblem {
  std::size_t m = 0;
  std::size_t n = 0;
  std::size_t k = 0;
  float alpha = 1.0f;
  float beta = 0.0f;
};

/// Reusable sa/sb scratch shared by the blocked kernels.
struct GemmWorkspace {
  PackedPanelBuffer sa;
  PackedPanelBuffer sb;
  std::vector<MultiplierRun> runs;
  std::vector<std::size_t> run_begin;
};

namespace detail {

inline void check_problem(const char* who, const GemmProblem& p, ConstMatrixView a, ConstMatrixView b,
                          std::size_t c_rows, std::size_t c_cols) {
  if (p.m == 0 || p.n == 0 || p.k == 0) throw ContractError(std::string(who) + ": empty problem");
  if (a.rows() != p.m || a.cols() != p.k || b.rows() != p.k || b.cols() != p.n || c_rows != p.m ||
      c_cols != p.n) {
    throw ContractError(std::string(who) + ": operand shapes do not conform (A " + std::to_string(a.rows()) +
                        "x" + std::to_string(a.cols()) + ", B " + std::to_string(b.rows()) + "x" +
                        std::to_string(b.cols()) + ", C " + std::to_string(c_rows) + "x" +
                        std::to_string(c_cols) + ")");
  }
}

inline GemmProblem problem_of(std::size_t a_rows, std::size_t a_cols, ConstMatrixView b) {
  return {a_rows, b.cols(), a_cols, 1.0f, 0.0f};
}

/// Loop nest with a canonical multiplier packed into sa, following the
/// GotoBLAS order: for each (nc, kc) pass the first mc block of A is packed,
/// then every sb panel is packed and immediately used with that block; the
/// remaining mc blocks reuse the resident sb panels.
///
/// The sink consumes micro-tiles: sink.one(i, j, runs, sb, first_pass) for a
/// single tile, sink.pair_rows(...) for tiles (i, j) and (i + mr, j) sharing
/// sb, sink.pair_cols(...) for (i, j) and (i, j + nr) sharing the runs.
template <typename Sink>
void drive_packed(ConstMatrixView a, ConstMatrixView b, const TileParams& p, PackCounters& ctr,
                  GemmWorkspace& ws, float alpha, Sink&& sink) {
  const std::size_t m = a.rows();
  const std::size_t n = b.cols();
  const std::size_t k = a.cols();
  // first mc block: sb panels are packed one at a time, so each one is
  // consumed against every row panel as soon as it exists
  auto column_pass = [&](std::size_t i0, std::size_t q, std::size_t j, bool first) {
    const std::size_t depth = ws.sb.depth;
    const std::size_t panels_a = ws.sa.panel_count();
    std::size_t pa = 0;
    for (; pa + 1 < panels_a; pa += 2) {
      const MultiplierRun r0{ws.sa.panel(pa), depth}, r1{ws.sa.panel(pa + 1), depth};
      sink.pair_rows(i0 + pa * p.mr, j, std::span<const MultiplierRun>(&r0, 1),
                     std::span<const MultiplierRun>(&r1, 1), ws.sb.panel(q), first);
    }
    if (pa < panels_a) {
      const MultiplierRun run{ws.sa.panel(pa), depth};
      sink.one(i0 + pa * p.mr, j, std::span<const MultiplierRun>(&run, 1), ws.sb.panel(q), first);
    }
  };
  for (std::size_t j0 = 0; j0 < n; j0 += p.nc) {
    const std::size_t nb = std::min(p.nc, n - j0);
    for (std::size_t l0 = 0; l0 < k; l0 += p.kc) {
      const bool first = l0 == 0;
      begin_multiplicand_block(b, {l0, j0}, {p.kc, nb}, p, ws.sb);

      pack_multiplier(a, {0, l0}, {p.mc, p.kc}, p, ctr, ws.sa, alpha);
      const std::size_t panels_b = ceil_div(nb, p.nr);
      for (std::size_t q = 0; q < panels_b; ++q) {
        pack_multiplicand_panels(b, {l0, j0 + q * p.nr}, std::min(p.nr, nb - q * p.nr), q, p, ctr, ws.sb);
        column_pass(0, q, j0 + q * p.nr, first);
      }
      // later blocks: all sb panels are resident, sweep them per row panel
      for (std::size_t i0 = p.mc; i0 < m; i0 += p.mc) {
        pack_multiplier(a, {i0, l0}, {p.mc, p.kc}, p, ctr, ws.sa, alpha);
        for (std::size_t pa = 0; pa < ws.sa.panel_count(); ++pa) {
          const MultiplierRun run{ws.sa.panel(pa), ws.sb.depth};
          const std::span<const MultiplierRun> runs(&run, 1);
          std::size_t q = 0;
          for (; q + 1 < panels_b; q += 2) {
            sink.pair_cols(i0 + pa * p.mr, j0 + q * p.nr, runs, ws.sb.panel(q), ws.sb.panel(q + 1), first);
          }
          if (q < panels_b) sink.one(i0 + pa * p.mr, j0 + q * p.nr, runs, ws.sb.panel(q), first);
        }
      }
    }
  }
}

/// Appends the runs covering multiplier columns [l0, l0 + depth) of the row
/// panel starting at row i. Runs of this panel that are adjacent in storage are
/// merged.
inline void propagated_runs(const ConstPropagatedView& a, std::size_t i, std::size_t l0, std::size_t depth,
                            std::vector<MultiplierRun>& out) {
  const std::size_t mr = a.params().mr;
  const std::size_t nr = a.params().nr;
  const std::size_t end = l0 + depth;
  const std::size_t first = out.size();
  for (std::size_t l = l0; l < end;) {
    const std::size_t c = l % nr;
    const std::size_t len = std::min(nr - c, end - l);
    const float* ptr = a.tile(i, l - c) + c * mr;
    if (out.size() > first && out.back().data + out.back().depth * mr == ptr) {
      out.back().depth += len;
    } else {
      out.push_back({ptr, len});
    }
    l += len;
  }
}

/// Loop nest with the multiplier read in place from a propagated buffer: no
/// sa packing, and the mc loop starts at row 0. sb panels for each (nc, kc)
/// pass are packed up front.
template <typename Sink>
void drive_propagated(const ConstPropagatedView& a, ConstMatrixView b, const TileParams& p, PackCounters& ctr,
                      GemmWorkspace& ws, Sink&& sink) {
  const std::size_t m = a.rows();
  const std::size_t n = b.cols();
  const std::size_t k = a.cols();
  for (std::size_t j0 = 0; j0 < n; j0 += p.nc) {
    const std::size_t nb = std::min(p.nc, n - j0);
    for (std::size_t l0 = 0; l0 < k; l0 += p.kc) {
      const bool first = l0 == 0;
      begin_multiplicand_block(b, {l0, j0}, {p.kc, nb}, p, ws.sb);
      pack_multiplicand_panels(b, {l0, j0}, nb, 0, p, ctr, ws.sb);
      const std::size_t depth = ws.sb.depth;
      const std::size_t panels_b = ceil_div(nb, p.nr);

      for (std::size_t i0 = 0; i0 < m; i0 += p.mc) {
        const std::size_t panels_a = ceil_div(std::min(p.mc, m - i0), p.mr);
        ws.runs.clear();
        ws.run_begin.assign(1, 0);
        for (std::size_t pa = 0; pa < panels_a; ++pa) {
          propagated_runs(a, i0 + pa * p.mr, l0, depth, ws.runs);
          ws.run_begin.push_back(ws.runs.size());
        }
        // row panel outermost: the strided A panel stays in L1 while the
        // contiguous sb panels stream past it
        for (std::size_t pa = 0; pa < panels_a; ++pa) {
          const std::span<const MultiplierRun> runs(ws.runs.data() + ws.run_begin[pa],
                                                    ws.run_begin[pa + 1] - ws.run_begin[pa]);
          const std::size_t i = i0 + pa * p.mr;
          std::size_t q = 0;
          for (; q + 1 < panels_b; q += 2) {
            sink.pair_cols(i, j0 + q * p.nr, runs, ws.sb.panel(q), ws.sb.panel(q + 1), first);
          }
          if (q < panels_b) sink.one(i, j0 + q * p.nr, runs, ws.sb.panel(q), first);
        }
      }
    }
  }
}

/// Zeroes every micro-tile of `dst` that lies entirely in the padding.
inline void clear_padding_tiles(const PropagatedView& dst) {
  const PropagatedLayout& lay = dst.layout();
  const std::size_t mr = lay.params().mr;
  const std::size_t nr = lay.params().nr;
  for (std::size_t j0 = 0; j0 < lay.padded_cols(); j0 += nr) {
    for (std::size_t i0 = 0; i0 < lay.padded_rows(); i0 += mr) {
      if (i0 >= lay.rows() || j0 >= lay.cols()) std::fill_n(dst.tile(i0, j0), mr * nr, 0.0f);
    }
  }
}

inline void check_output_layout(const char* who, const PropagatedLayout& lay, const TileParams& p) {
  if (lay.params() != p) {
    throw LayoutError(std::string(who) + ": output layout tiled with " + lay.params().to_string() +
                      ", kernel configured with " + p.to_string());
  }
}

struct PropagateSink {
  const PropagatedView& dst;
  std::size_t mr, nr;

  void one(std::size_t i, std::size_t j, std::span<const MultiplierRun> runs, const float* sb, bool first) const {
    microkernel_propagate(runs, sb, mr, nr, dst.tile(i, j), !first);
  }
  void pair_rows(std::size_t i, std::size_t j, std::span<const MultiplierRun> r0, std::span<const MultiplierRun> r1,
                 const float* sb, bool first) const {
    float* s0 = dst.tile(i, j);
    float* s1 = dst.tile(i + mr, j);
    MicroTileAccumulator a0, a1;
    load_propagate(a0, mr, nr, s0, !first);
    load_propagate(a1, mr, nr, s1, !first);
    accumulate_tile_pair_rows(r0, r1, sb, a0, a1);
    store_propagate(a0, s0);
    store_propagate(a1, s1);
  }
  void pair_cols(std::size_t i, std::size_t j, std::span<const MultiplierRun> runs, const float* sb0,
                 const float* sb1, bool first) const {
    float* s0 = dst.tile(i, j);
    float* s1 = dst.tile(i, j + nr);
    MicroTileAccumulator a0, a1;
    load_propagate(a0, mr, nr, s0, !first);
    load_propagate(a1, mr, nr, s1, !first);
    accumulate_tile_pair_cols(runs, sb0, sb1, a0, a1);
    store_propagate(a0, s0);
    store_propagate(a1, s1);
  }
};

inline PropagateSink propagate_sink(const PropagatedView& dst, const TileParams& p) { return {dst, p.mr, p.nr}; }

struct CanonicalSink {
  MatrixView c;
  std::size_t mr, nr;
  PackCounters& ctr;
  bool accumulate_first;

  MatrixView window(std::size_t i, std::size_t j) const {
    return c.sub(i, j, std::min(mr, c.rows() - i), std::min(nr, c.cols() - j));
  }
  void one(std::size_t i, std::size_t j, std::span<const MultiplierRun> runs, const float* sb, bool first) const {
    const MatrixView win = window(i, j);
    microkernel_default(runs, sb, mr, nr, win, accumulate_first || !first);
    ctr.unpack_elems += win.rows() * win.cols();
  }
  void pair_rows(std::size_t i, std::size_t j, std::span<const MultiplierRun> r0, std::span<const MultiplierRun> r1,
                 const float* sb, bool first) const {
    const MatrixView w0 = window(i, j), w1 = window(i + mr, j);
    MicroTileAccumulator a0, a1;
    load_default(a0, mr, nr, w0, accumulate_first || !first);
    load_default(a1, mr, nr, w1, accumulate_first || !first);
    accumulate_tile_pair_rows(r0, r1, sb, a0, a1);
    store_default(a0, w0);
    store_default(a1, w1);
    ctr.unpack_elems += w0.rows() * w0.cols() + w1.rows() * w1.cols();
  }
  void pair_cols(std::size_t i, std::size_t j, std::span<const MultiplierRun> runs, const float* sb0,
                 const float* sb1, bool first) const {
    const MatrixView w0 = window(i, j), w1 = window(i, j + nr);
    MicroTileAccumulator a0, a1;
    load_default(a0, mr, nr, w0, accumulate_first || !first);
    load_default(a1, mr, nr, w1, accumulate_first || !first);
    accumulate_tile_pair_cols(runs, sb0, sb1, a0, a1);
    store_default(a0, w0);
    store_default(a1, w1);
    ctr.unpack_elems += w0.rows() * w0.cols() + w1.rows() * w1.cols();
  }
};

inline CanonicalSink canonical_sink(MatrixView c, const TileParams& p, PackCounters& ctr, bool accumulate_first) {
  return {c, p.mr, p.nr, ctr, accumulate_first};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Naive oracle

/// C <- alpha * A * B + beta * C with one 64-bit accumulator per element.
/// beta == 0 overwrites C without reading it.
inline void gemm_naive(const GemmProblem& problem, ConstMatrixView a, ConstMatrixView b, MatrixView c) {
  detail::check_problem("gemm_naive", problem, a, b, c.rows(), c.cols());
  for (std::size_t i = 0; i < problem.m; ++i) {
    for (std::size_t j = 0; j < problem.n; ++j) {
      double acc = 0.0;
      for (std::size_t l = 0; l < problem.k; ++l) acc += static_cast<double>(a(i, l)) * b(l, j);
      double v = static_cast<double>(problem.alpha) * acc;
      if (problem.beta != 0.0f) v += static_cast<double>(problem.beta) * c(i, j);
      c(i, j) = static_cast<float>(v);
    }
  }
}

inline Matrix gemm_naive(ConstMatrixView a, ConstMatrixView b) {
  Matrix c(a.rows(), b.cols());
  gemm_naive(detail::problem_of(a.rows(), a.cols(), b), a, b, c.view());
  return c;
}

// ---------------------------------------------------------------------------
// Default blocked GEMM

/// Blocked GEMM with canonical output. alpha is folded into sa packing; beta
/// is applied to C once before the first kc pass.
inline void gemm_default(const GemmProblem& problem, ConstMatrixView a, ConstMatrixView b, MatrixView c,
                         const TileParams& params, PackCounters& counters, GemmWorkspace& ws) {
  params.validate();
  detail::check_problem("gemm_default", problem, a, b, c.rows(), c.cols());
  ++counters.default_calls;
  const bool keep_c = problem.beta != 0.0f;
  if (keep_c && problem.beta != 1.0f) scale_inplace(c, problem.beta);
  detail::drive_packed(a, b, params, counters, ws, problem.alpha, detail::canonical_sink(c, params, counters, keep_c));
}

inline void gemm_default(const GemmProblem& problem, ConstMatrixView a, ConstMatrixView b, MatrixView c,
                         const TileParams& params, PackCounters& counters) {
  GemmWorkspace ws;
  gemm_default(problem, a, b, c, params, counters, ws);
}

inline Matrix gemm_default(ConstMatrixView a, ConstMatrixView b, const TileParams& params,
                           PackCounters& counters) {
  Matrix c(a.rows(), b.cols());
  gemm_default(detail::problem_of(a.rows(), a.cols(), b), a, b, c.view(), params, counters);
  return c;
}

// ---------------------------------------------------------------------------
// Initial kernel

/// A * B written into an existing propagated destination (which may be a
/// strided slice of a larger buffer).
inline void gemm_ini_into(ConstMatrixView a, ConstMatrixView b, const PropagatedView& dst,
                          const TileParams& params, PackCounters& counters, GemmWorkspace& ws) {
  params.validate();
  detail::check_problem("gemm_ini", detail::problem_of(a.rows(), a.cols(), b), a, b, dst.rows(), dst.cols());
  detail::check_output_layout("gemm_ini", dst.layout(), params);
  ++counters.ini_calls;
  detail::clear_padding_tiles(dst);
  detail::drive_packed(a, b, params, counters, ws, 1.0f, detail::propagate_sink(dst, params));
}

inline PropagatedMatrix gemm_ini(ConstMatrixView a, ConstMatrixView b, const TileParams& params,
                                 const StoreSpec& store, PackCounters& counters, GemmWorkspace& ws) {
  if (store.target != StoreTarget::Propagated) {
    throw ContractError("gemm_ini produces a propagated result; use gemm_default for canonical output");
  }
  if (a.cols() != b.rows()) throw ContractError("gemm_ini: inner dimensions differ");
  PropagatedMatrix out(a.rows(), b.cols(), params, store);
  gemm_ini_into(a, b, out.view(), params, counters, ws);
  return out;
}

inline PropagatedMatrix gemm_ini(ConstMatrixView a, ConstMatrixView b, const TileParams& params,
                                 const StoreSpec& store, PackCounters& counters) {
  GemmWorkspace ws;
  return gemm_ini(a, b, params, store, counters, ws);
}

inline PropagatedMatrix gemm_ini(ConstMatrixView a, ConstMatrixView b, const TileParams& params,
                                 PackCounters& counters) {
  return gemm_ini(a, b, params, StoreSpec{}, counters);
}

// ---------------------------------------------------------------------------
// Intermediate / ending kernels

namespace detail {

/// Runs `body` with a multiplier laid out for `params`, repacking through
/// canonical storage (and counting a fallback) when the producer's tiling
/// differs.
template <typename Body>
void with_compatible_multiplier(const ConstPropagatedView& a, const TileParams& params, PackCounters& counters,
                                Body&& body) {
  if (compatible(a.params(), params, a.rows(), a.cols())) {
    body(a);
    return;
  }
  ++counters.layout_fallbacks;
  const Matrix canonical = unpack_propagated(a, &counters);
  const PropagatedMatrix repacked = pack_to_propagated(canonical.cview(), params, &counters);
  body(repacked.cview());
}

}  // namespace detail

inline void gemm_mid_into(const ConstPropagatedView& a, ConstMatrixView b, const PropagatedView& dst,
                          const TileParams& params, PackCounters& counters, GemmWorkspace& ws) {
  params.validate();
  const GemmProblem prob = detail::problem_of(a.rows(), a.cols(), b);
  if (a.cols() != b.rows() || dst.rows() != prob.m || dst.cols() != prob.n) {
    throw ContractError("gemm_mid: operand shapes do not conform");
  }
  detail::check_output_layout("gemm_mid", dst.layout(), params);
  ++counters.mid_calls;
  detail::clear_padding_tiles(dst);
  detail::with_compatible_multiplier(a, params, counters, [&](const ConstPropagatedView& packed) {
    detail::drive_propagated(packed, b, params, counters, ws, detail::propagate_sink(dst, params));
  });
}

inline PropagatedMatrix gemm_mid(const ConstPropagatedView& a, ConstMatrixView b, const TileParams& params,
                                 const StoreSpec& store, PackCounters& counters, GemmWorkspace& ws) {
  if (store.target != StoreTarget::Propagated) {
    throw ContractError("gemm_mid produces a propagated result; use gemm_end for canonical output");
  }
  if (a.cols() != b.rows()) throw ContractError("gemm_mid: inner dimensions differ");
  PropagatedMatrix out(a.rows(), b.cols(), params, store);
  gemm_mid_into(a, b, out.view(), params, counters, ws);
  return out;
}

inline PropagatedMatrix gemm_mid(const ConstPropagatedView& a, ConstMatrixView b, const TileParams& params,
                                 const StoreSpec& store, PackCounters& counters) {
  GemmWorkspace ws;
  return gemm_mid(a, b, params, store, counters, ws);
}

inline PropagatedMatrix gemm_mid(const ConstPropagatedView& a, ConstMatrixView b, const TileParams& params,
                                 PackCounters& counters) {
  return gemm_mid(a, b, params, StoreSpec{}, counters);
}

/// Propagated multiplier times canonical B, stored canonically into C
/// (overwritten).
inline void gemm_end(const ConstPropagatedView& a, ConstMatrixView b, MatrixView c, const TileParams& params,
                     PackCounters& counters, GemmWorkspace& ws) {
  params.validate();
  if (a.cols() != b.rows() || c.rows() != a.rows() || c.cols() != b.cols()) {
    throw ContractError("gemm_end: operand shapes do not conform");
  }
  ++counters.end_calls;
  detail::with_compatible_multiplier(a, params, counters, [&](const ConstPropagatedView& packed) {
    detail::drive_propagated(packed, b, params, counters, ws, detail::canonical_sink(c, params, counters, false));
  });
}

inline void gemm_end(const ConstPropagatedView& a, ConstMatrixView b, MatrixView c, const TileParams& params,
                     PackCounters& counters) {
  GemmWorkspace ws;
  gemm_end(a, b, c, params, counters, ws);
}

inline Matrix gemm_end(const ConstPropagatedView& a, ConstMatrixView b, const TileParams& params,
                       PackCounters& counters) {
  Matrix c(a.rows(), b.cols());
  gemm_end(a, b, c.view(), params, counters);
  return c;
}

// ---------------------------------------------------------------------------
// Sequential chains

struct Activation {
  enum class Kind { None, ReLU, Scale };
  Kind kind = Kind::None;
  float scale = 1.0f;

  static Activation none() { return {}; }
  static Activation relu() { return {Kind::ReLU, 1.0f}; }
  static Activation scaled(float s) { return {Kind::Scale, s}; }
};

template <typename View>
void apply_activation(const Activation& act, const View& x) {
  switch (act.kind) {
    case Activation::Kind::None: break;
    case Activation::Kind::ReLU: relu_inplace(x); break;
    case Activation::Kind::Scale: scale_inplace(x, act.scale); break;
  }
}

struct ChainStage {
  ConstMatrixView weight;
  Activation activation;
};

/// O = F_S(... F_2(F_1(X * W_1) * W_2) ... * W_S).
struct ChainSpec {
  ConstMatrixView input;
  std::vector<ChainStage> stages;
};

inline void validate_chain(const ChainSpec& spec) {
  if (spec.stages.empty()) throw ContractError("chain has no stages");
  std::size_t width = spec.input.cols();
  for (std::size_t s = 0; s < spec.stages.size(); ++s) {
    if (spec.stages[s].weight.rows() != width) {
      throw ContractError("chain stage " + std::to_string(s + 1) + " expects " +
                          std::to_string(spec.stages[s].weight.rows()) + " inputs, previous stage yields " +
                          std::to_string(width));
    }
    width = spec.stages[s].weight.cols();
  }
}

/// LP chain: ini for the first stage, mid for the interior stages, end for
/// the last, with activations applied in the propagated layout between
/// stages. A single-stage chain runs gemm_default.
inline Matrix chain_gemm(const ChainSpec& spec, const TileParams& params, PackCounters& counters) {
  validate_chain(spec);
  GemmWorkspace ws;
  const auto& st = spec.stages;
  if (st.size() == 1) {
    Matrix out(spec.input.rows(), st[0].weight.cols());
    gemm_default(detail::problem_of(spec.input.rows(), spec.input.cols(), st[0].weight), spec.input,
                 st[0].weight, out.view(), params, counters, ws);
    apply_activation(st[0].activation, out.view());
    return out;
  }
  PropagatedMatrix cur = gemm_ini(spec.input, st[0].weight, params, StoreSpec{}, counters, ws);
  apply_activation(st[0].activation, cur.view());
  for (std::size_t s = 1; s + 1 < st.size(); ++s) {
    cur = gemm_mid(cur.cview(), st[s].weight, params, StoreSpec{}, counters, ws);
    apply_activation(st[s].activation, cur.view());
  }
  Matrix out(spec.input.rows(), st.back().weight.cols());
  gemm_end(cur.cview(), st.back().weight, out.view(), params, counters, ws);
  apply_activation(st.back().activation, out.view());
  return out;
}

/// Per-stage gemm_default pipeline: every boundary unpacks and repacks.
inline Matrix chain_default(const ChainSpec& spec, const TileParams& params, PackCounters& counters) {
  validate_chain(spec);
  GemmWorkspace ws;
  Matrix cur = Matrix::copy_of(spec.input);
  for (const ChainStage& stage : spec.stages) {
    Matrix next(cur.rows(), stage.weight.cols());
    gemm_default(detail::problem_of(cur.rows(), cur.cols(), stage.weight), cur.cview(), stage.weight, next.view(),
                 params, counters, ws);
    apply_activation(stage.activation, next.view());
    cur = std::move(next);
  }
  return cur;
}

inline Matrix chain_naive(const ChainSpec& spec) {
  validate_chain(spec);
  Matrix cur = Matrix::copy_of(spec.input);
  for (const ChainStage& stage : spec.stages) {
    Matrix next = gemm_naive(cur.cview(), stage.weight);
    apply_activation(stage.activation, next.view());
    cur = std::move(next);
  }
  return cur;
}

}  // namespace lpgemm
