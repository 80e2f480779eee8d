#pragma once

// Benchmark harness: size-file parsing, timing, CSV records and the three
// experiment drivers (single GEMM, GEMM chains, attention/MLP sweep).

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>
#include <span>
#include <string>
#include <vector>

#include "lpgemm/attention.hpp"
#include "lpgemm/kernels.hpp"
#include "lpgemm/random.hpp"

namespace lpgemm::bench {

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CheckFailed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Input formats

struct GemmShape {
  std::size_t m = 0, n = 0, k = 0;
  friend bool operator==(const GemmShape&, const GemmShape&) = default;
};

namespace detail {

/// Splits each non-comment line into unsigned integers; calls fn(line_no, values).
template <typename Fn>
void for_each_numeric_line(std::istream& in, const std::string& source, Fn&& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    std::vector<std::size_t> values;
    std::string tok;
    while (ss >> tok) {
      std::size_t used = 0;
      unsigned long long v = 0;
      try {
        if (tok.empty() || tok[0] == '-' || tok[0] == '+') throw std::invalid_argument(tok);
        v = std::stoull(tok, &used, 10);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tok.size() || v == 0) {
        throw ParseError(source + ":" + std::to_string(line_no) + ": expected a positive decimal integer, got '" +
                         tok + "'");
      }
      values.push_back(static_cast<std::size_t>(v));
    }
    if (!values.empty()) fn(line_no, values);
  }
}

}  // namespace detail

/// One "M N K" triple per line; '#' starts a comment; blank lines ignored.
inline std::vector<GemmShape> parse_sizes(std::istream& in, const std::string& source = "sizes") {
  std::vector<GemmShape> out;
  detail::for_each_numeric_line(in, source, [&](std::size_t line_no, const std::vector<std::size_t>& v) {
    if (v.size() != 3) {
      throw ParseError(source + ":" + std::to_string(line_no) + ": expected 'M N K', got " +
                       std::to_string(v.size()) + " values");
    }
    out.push_back({v[0], v[1], v[2]});
  });
  return out;
}

/// A chain X (m x widths[0]) * W1 (widths[0] x widths[1]) * ... .
struct ChainShape {
  std::size_t m = 0;
  std::vector<std::size_t> widths;

  std::size_t depth() const noexcept { return widths.empty() ? 0 : widths.size() - 1; }
  std::string label() const {
    std::string s = std::to_string(m);
    for (std::size_t w : widths) s += "x" + std::to_string(w);
    return s;
  }
};

/// Each line is either "M N K" (X is M x K, W1 is K x N, later weights N x N)
/// or the explicit list "M W0 W1 ... Wdepth".
inline std::vector<ChainShape> parse_chain_sizes(std::istream& in, std::size_t depth,
                                                 const std::string& source = "sizes") {
  if (depth == 0) throw ContractError("chain depth must be at least 1");
  std::vector<ChainShape> out;
  detail::for_each_numeric_line(in, source, [&](std::size_t line_no, const std::vector<std::size_t>& v) {
    ChainShape c;
    c.m = v[0];
    if (v.size() == depth + 2) {
      c.widths.assign(v.begin() + 1, v.end());
    } else if (v.size() == 3) {
      c.widths.push_back(v[2]);
      for (std::size_t s = 0; s < depth; ++s) c.widths.push_back(v[1]);
    } else {
      throw ContractError(source + ":" + std::to_string(line_no) + ": chain of depth " + std::to_string(depth) +
                          " needs 'M N K' or " + std::to_string(depth + 2) + " dimensions, got " +
                          std::to_string(v.size()));
    }
    out.push_back(std::move(c));
  });
  return out;
}

struct TokenRange {
  std::size_t start = 16, end = 512, step = 16;

  std::vector<std::size_t> values() const {
    std::vector<std::size_t> v;
    for (std::size_t t = start; t <= end; t += step) v.push_back(t);
    return v;
  }
};

/// "a", "a..b" (step 1) or "a..b..s".
inline TokenRange parse_token_range(const std::string& text) {
  std::vector<std::size_t> parts;
  std::size_t pos = 0;
  while (true) {
    const std::size_t dots = text.find("..", pos);
    const std::string tok = text.substr(pos, dots == std::string::npos ? std::string::npos : dots - pos);
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      if (tok.empty() || !std::isdigit(static_cast<unsigned char>(tok[0]))) throw std::invalid_argument(tok);
      v = std::stoull(tok, &used, 10);
    } catch (const std::exception&) {
      throw ParseError("token range '" + text + "': bad number '" + tok + "'");
    }
    if (used != tok.size()) throw ParseError("token range '" + text + "': bad number '" + tok + "'");
    parts.push_back(static_cast<std::size_t>(v));
    if (dots == std::string::npos) break;
    pos = dots + 2;
  }
  if (parts.size() > 3) throw ParseError("token range '" + text + "': expected start..end..step");
  TokenRange r{parts[0], parts.size() > 1 ? parts[1] : parts[0], parts.size() > 2 ? parts[2] : 1};
  if (r.start < 1 || r.step < 1 || r.end < r.start) {
    throw ParseError("token range '" + text + "': need 1 <= start <= end and step >= 1");
  }
  return r;
}

// ---------------------------------------------------------------------------
// Timing and records

struct Timing {
  std::uint64_t mean_ns = 0;
  std::uint64_t median_ns = 0;
  std::uint64_t min_ns = 0;
};

inline Timing summarize(std::vector<std::uint64_t> ns) {
  if (ns.empty()) throw ContractError("reps must be at least 1");
  Timing t;
  std::uint64_t total = 0;
  for (auto v : ns) total += v;
  const std::size_t n = ns.size();
  t.mean_ns = total / n;
  std::sort(ns.begin(), ns.end());
  t.min_ns = ns.front();
  t.median_ns = n % 2 ? ns[n / 2] : (ns[n / 2 - 1] + ns[n / 2]) / 2;
  return t;
}

template <typename Fn>
std::uint64_t time_once(Fn&& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  fn();
  const auto t1 = std::chrono::steady_clock::now();
  return static_cast<std::uint64_t>(std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count());
}

/// Runs `fn` warmup times untimed, then reps times on the steady clock.
template <typename Fn>
Timing time_runs(std::size_t reps, std::size_t warmup, Fn&& fn) {
  if (reps == 0) throw ContractError("reps must be at least 1");
  for (std::size_t i = 0; i < warmup; ++i) fn();
  std::vector<std::uint64_t> ns(reps);
  for (auto& v : ns) v = time_once(fn);
  return summarize(std::move(ns));
}

/// Times several kernels round-robin (one run of each per repetition), so
/// that drift in machine load hits all of them alike.
inline std::vector<Timing> time_interleaved(std::size_t reps, std::size_t warmup,
                                            const std::vector<std::function<void()>>& fns) {
  if (reps == 0) throw ContractError("reps must be at least 1");
  for (std::size_t i = 0; i < warmup; ++i)
    for (const auto& fn : fns) fn();
  std::vector<std::vector<std::uint64_t>> ns(fns.size(), std::vector<std::uint64_t>(reps));
  for (std::size_t i = 0; i < reps; ++i)
    for (std::size_t f = 0; f < fns.size(); ++f) ns[f][i] = time_once(fns[f]);
  std::vector<Timing> out;
  for (auto& v : ns) out.push_back(summarize(std::move(v)));
  return out;
}

struct BenchRecord {
  std::string experiment;
  std::string kernel;
  std::string shape;  // problem label (chain dims, attention config)
  std::size_t m = 0, n = 0, k = 0;
  std::size_t reps = 0, warmup = 0;
  Timing timing;
  double flops = 0.0;
  PackCounters counters;
  double speedup_vs_baseline = 1.0;
  double traffic_ratio_vs_baseline = 1.0;

  double gflops() const {
    return timing.median_ns == 0 ? 0.0 : flops / static_cast<double>(timing.median_ns);
  }
};

inline double gemm_flops(std::size_t m, std::size_t n, std::size_t k) {
  return 2.0 * static_cast<double>(m) * static_cast<double>(n) * static_cast<double>(k);
}

inline const char* csv_header() {
  return "experiment,kernel,shape,m,n,k,reps,warmup,mean_ns,median_ns,min_ns,gflops,"
         "multiplier_pack_elems,multiplicand_pack_elems,unpack_elems,speedup_vs_baseline,"
         "traffic_ratio_vs_baseline";
}

inline std::string to_csv(const BenchRecord& r) {
  char num[96];
  std::string s = r.experiment + "," + r.kernel + "," + r.shape + "," + std::to_string(r.m) + "," +
                  std::to_string(r.n) + "," + std::to_string(r.k) + "," + std::to_string(r.reps) + "," +
                  std::to_string(r.warmup) + "," + std::to_string(r.timing.mean_ns) + "," +
                  std::to_string(r.timing.median_ns) + "," + std::to_string(r.timing.min_ns) + ",";
  std::snprintf(num, sizeof num, "%.4f", r.gflops());
  s += num;
  s += "," + std::to_string(r.counters.multiplier_pack_elems) + "," +
       std::to_string(r.counters.multiplicand_pack_elems) + "," + std::to_string(r.counters.unpack_elems) + ",";
  std::snprintf(num, sizeof num, "%.4f,%.4f", r.speedup_vs_baseline, r.traffic_ratio_vs_baseline);
  s += num;
  return s;
}

inline void write_csv(std::ostream& os, const std::vector<BenchRecord>& records) {
  os << csv_header() << '\n';
  for (const auto& r : records) os << to_csv(r) << '\n';
}

/// Fills speedup and traffic ratio of every record against the record of the
/// same experiment and shape whose kernel is `baseline`.
inline void relate_to_baseline(std::vector<BenchRecord>& records, std::size_t first, const std::string& baseline) {
  const BenchRecord* base = nullptr;
  for (std::size_t i = first; i < records.size(); ++i) {
    if (records[i].kernel == baseline) base = &records[i];
  }
  if (!base) return;
  const double base_traffic = static_cast<double>(base->counters.pack_unpack_elems());
  for (std::size_t i = first; i < records.size(); ++i) {
    BenchRecord& r = records[i];
    r.speedup_vs_baseline = r.timing.median_ns == 0 ? 0.0
                                                    : static_cast<double>(base->timing.median_ns) /
                                                          static_cast<double>(r.timing.median_ns);
    r.traffic_ratio_vs_baseline =
        base_traffic == 0.0 ? 0.0 : static_cast<double>(r.counters.pack_unpack_elems()) / base_traffic;
  }
}

using CountedRun = std::function<void(PackCounters&)>;

/// Fills each record's counters from one untimed call (which doubles as the
/// first warmup iteration), then times the kernels interleaved.
inline void measure(std::span<BenchRecord> records, const std::vector<CountedRun>& fns) {
  if (records.size() != fns.size() || records.empty()) throw ContractError("measure: one kernel per record");
  for (std::size_t i = 0; i < fns.size(); ++i) fns[i](records[i].counters);
  PackCounters sink;
  std::vector<std::function<void()>> timed;
  for (const auto& fn : fns) timed.push_back([&sink, &fn] { fn(sink); });
  const std::size_t warmup = records[0].warmup > 0 ? records[0].warmup - 1 : 0;
  const std::vector<Timing> t = time_interleaved(records[0].reps, warmup, timed);
  for (std::size_t i = 0; i < records.size(); ++i) records[i].timing = t[i];
}

struct BenchOptions {
  std::size_t reps = 10;
  std::size_t warmup = 2;
  TileParams params{};
  std::uint32_t seed = 1;
  double gemm_tolerance = 1e-4;
  double attention_tolerance = 1e-3;
};

namespace detail {

inline void require_close(const std::string& what, ConstMatrixView got, ConstMatrixView ref, double tol,
                          double abs_floor) {
  const double err = max_relative_error(got, ref, abs_floor);
  if (!(err <= tol)) {
    throw CheckFailed("correctness check failed for " + what + ": relative error " + std::to_string(err) +
                      " exceeds " + std::to_string(tol));
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Single GEMM

/// Times gemm_default, gemm_ini, gemm_mid and gemm_end on each shape. The mid
/// and end kernels receive a multiplier packed outside the timed region.
inline std::vector<BenchRecord> bench_single(const std::vector<GemmShape>& shapes, const BenchOptions& opt) {
  std::vector<BenchRecord> records;
  SeededRng rng(opt.seed);
  GemmWorkspace ws;
  bool checked = false;
  for (const GemmShape& s : shapes) {
    const Matrix a = random_matrix(s.m, s.k, rng);
    const Matrix b = random_matrix(s.k, s.n, rng);
    Matrix c(s.m, s.n);
    PropagatedMatrix out(s.m, s.n, opt.params);
    PackCounters pre;
    const PropagatedMatrix a_packed = pack_to_propagated(a.cview(), opt.params, &pre);
    const GemmProblem prob{s.m, s.n, s.k};

    struct Variant {
      const char* name;
      std::function<void(PackCounters&)> run;
      std::function<Matrix()> result;
    };
    const std::vector<Variant> variants{
        {"default", [&](PackCounters& ctr) { gemm_default(prob, a.cview(), b.cview(), c.view(), opt.params, ctr, ws); },
         [&] { return c; }},
        {"ini", [&](PackCounters& ctr) { gemm_ini_into(a.cview(), b.cview(), out.view(), opt.params, ctr, ws); },
         [&] { return unpack_propagated(out.cview()); }},
        {"mid", [&](PackCounters& ctr) { gemm_mid_into(a_packed.cview(), b.cview(), out.view(), opt.params, ctr, ws); },
         [&] { return unpack_propagated(out.cview()); }},
        {"end", [&](PackCounters& ctr) { gemm_end(a_packed.cview(), b.cview(), c.view(), opt.params, ctr, ws); },
         [&] { return c; }},
    };

    if (!checked) {
      const Matrix ref = gemm_naive(a.cview(), b.cview());
      for (const Variant& v : variants) {
        PackCounters scratch;
        v.run(scratch);
        detail::require_close(std::string("gemm_") + v.name, v.result().cview(), ref.cview(), opt.gemm_tolerance,
                              1e-6);
      }
      checked = true;
    }

    const std::size_t first = records.size();
    std::vector<CountedRun> fns;
    for (const Variant& v : variants) {
      fns.push_back(v.run);
      BenchRecord r;
      r.experiment = "single";
      r.kernel = v.name;
      r.shape = std::to_string(s.m) + "x" + std::to_string(s.n) + "x" + std::to_string(s.k);
      r.m = s.m;
      r.n = s.n;
      r.k = s.k;
      r.reps = opt.reps;
      r.warmup = opt.warmup;
      r.flops = gemm_flops(s.m, s.n, s.k);
      records.push_back(std::move(r));
    }
    measure(std::span(records).subspan(first), fns);
    relate_to_baseline(records, first, "default");
  }
  return records;
}

// ---------------------------------------------------------------------------
// Chains

struct ChainData {
  Matrix input;
  std::vector<Matrix> weights;

  ChainSpec spec() const {
    ChainSpec s{input.cview(), {}};
    for (const Matrix& w : weights) s.stages.push_back({w.cview(), Activation::none()});
    return s;
  }
};

inline ChainData make_chain(const ChainShape& shape, SeededRng& rng) {
  if (shape.depth() == 0) throw ContractError("chain needs at least one weight");
  ChainData d;
  d.input = random_matrix(shape.m, shape.widths[0], rng);
  for (std::size_t s = 1; s < shape.widths.size(); ++s) {
    const float a = 1.0f / std::sqrt(static_cast<float>(shape.widths[s - 1]));
    d.weights.push_back(random_matrix(shape.widths[s - 1], shape.widths[s], rng, -a, a));
  }
  return d;
}

/// Times the naive, per-stage gemm_default and LP chains for each shape.
inline std::vector<BenchRecord> bench_chain(const std::vector<ChainShape>& shapes, const BenchOptions& opt) {
  std::vector<BenchRecord> records;
  SeededRng rng(opt.seed);
  bool checked = false;
  for (const ChainShape& shape : shapes) {
    const ChainData data = make_chain(shape, rng);
    const ChainSpec spec = data.spec();
    double flops = 0.0;
    for (std::size_t s = 0; s + 1 < shape.widths.size(); ++s) {
      flops += gemm_flops(shape.m, shape.widths[s + 1], shape.widths[s]);
    }

    struct Variant {
      const char* name;
      std::function<Matrix(PackCounters&)> run;
    };
    const std::vector<Variant> variants{
        {"naive", [&](PackCounters&) { return chain_naive(spec); }},
        {"default", [&](PackCounters& ctr) { return chain_default(spec, opt.params, ctr); }},
        {"lp", [&](PackCounters& ctr) { return chain_gemm(spec, opt.params, ctr); }},
    };

    if (!checked) {
      PackCounters scratch;
      const Matrix ref = chain_naive(spec);
      detail::require_close("chain_default", chain_default(spec, opt.params, scratch).cview(), ref.cview(),
                            opt.gemm_tolerance, 1e-6);
      detail::require_close("chain_gemm", chain_gemm(spec, opt.params, scratch).cview(), ref.cview(),
                            opt.gemm_tolerance, 1e-6);
      checked = true;
    }

    const std::size_t first = records.size();
    std::vector<CountedRun> fns;
    for (const Variant& v : variants) {
      fns.push_back([&v](PackCounters& c) { (void)v.run(c); });
      BenchRecord r;
      r.experiment = "chain" + std::to_string(shape.depth());
      r.kernel = v.name;
      r.shape = shape.label();
      r.m = shape.m;
      r.n = shape.widths.back();
      r.k = shape.widths.front();
      r.reps = opt.reps;
      r.warmup = opt.warmup;
      r.flops = flops;
      records.push_back(std::move(r));
    }
    measure(std::span(records).subspan(first), fns);
    relate_to_baseline(records, first, "default");
  }
  return records;
}

// ---------------------------------------------------------------------------
// Attention / MLP sweep

struct AttentionSweep {
  TokenRange tokens{};
  AttentionConfig config{0, 2048, 32, 8, 64, true, kDefaultRopeTheta, 42};  // n_tokens set per point
  std::size_t mlp_hidden = 8192;
};

inline double attention_flops(const AttentionConfig& c) {
  const std::size_t t = c.n_tokens;
  return gemm_flops(t, c.embed_dim, c.embed_dim) * 2 + gemm_flops(t, c.kv_dim(), c.embed_dim) * 2 +
         static_cast<double>(c.n_heads) * (gemm_flops(t, t, c.head_dim) + gemm_flops(t, c.head_dim, t));
}

/// For every token count: attention baseline (gemm_default throughout) vs
/// attention_lp, and mlp baseline vs mlp_block. Four rows per point.
inline std::vector<BenchRecord> bench_attention(const AttentionSweep& sweep, const BenchOptions& opt) {
  AttentionConfig cfg = sweep.config;
  cfg.n_tokens = sweep.tokens.start;
  cfg.validate();
  const AttentionWeights weights = AttentionWeights::generate(cfg);
  const MlpWeights mlp = MlpWeights::generate(cfg.embed_dim, sweep.mlp_hidden, cfg.seed + 7);
  std::vector<BenchRecord> records;
  bool checked = false;

  for (const std::size_t t : sweep.tokens.values()) {
    cfg.n_tokens = t;
    const Matrix x = attention_input(cfg);
    const std::string label = "t" + std::to_string(t) + "_e" + std::to_string(cfg.embed_dim) + "_h" +
                              std::to_string(cfg.n_heads) + "_kv" + std::to_string(cfg.n_kv_heads);

    if (!checked) {
      PackCounters scratch;
      const Matrix ref = attention_reference(cfg, weights, x.cview());
      detail::require_close("attention_baseline", attention_baseline(cfg, weights, x.cview(), opt.params, scratch).cview(),
                            ref.cview(), opt.attention_tolerance, 1e-5);
      detail::require_close("attention_lp", attention_lp(cfg, weights, x.cview(), opt.params, scratch).cview(),
                            ref.cview(), opt.attention_tolerance, 1e-5);
      const Matrix mlp_ref = mlp_reference(mlp, x.cview());
      detail::require_close("mlp_baseline", mlp_baseline(mlp, x.cview(), opt.params, scratch).cview(), mlp_ref.cview(),
                            opt.gemm_tolerance, 1e-6);
      detail::require_close("mlp_block", mlp_block(mlp, x.cview(), opt.params, scratch).cview(), mlp_ref.cview(),
                            opt.gemm_tolerance, 1e-6);
      checked = true;
    }

    std::vector<CountedRun> fns;
    auto add = [&](const char* experiment, const char* kernel, double flops, std::size_t k, CountedRun fn) {
      fns.push_back(std::move(fn));
      BenchRecord r;
      r.experiment = experiment;
      r.kernel = kernel;
      r.shape = label;
      r.m = t;
      r.n = cfg.embed_dim;
      r.k = k;
      r.reps = opt.reps;
      r.warmup = opt.warmup;
      r.flops = flops;
      records.push_back(std::move(r));
    };
    auto finish = [&](std::size_t first) {
      measure(std::span(records).subspan(first), fns);
      fns.clear();
      relate_to_baseline(records, first, "baseline");
    };

    std::size_t first = records.size();
    add("attention", "baseline", attention_flops(cfg), cfg.embed_dim,
        [&](PackCounters& c) { (void)attention_baseline(cfg, weights, x.cview(), opt.params, c); });
    add("attention", "lp", attention_flops(cfg), cfg.embed_dim,
        [&](PackCounters& c) { (void)attention_lp(cfg, weights, x.cview(), opt.params, c); });
    finish(first);

    first = records.size();
    const double mlp_flops = 2 * gemm_flops(t, sweep.mlp_hidden, cfg.embed_dim);
    add("mlp", "baseline", mlp_flops, sweep.mlp_hidden,
        [&](PackCounters& c) { (void)mlp_baseline(mlp, x.cview(), opt.params, c); });
    add("mlp", "lp", mlp_flops, sweep.mlp_hidden,
        [&](PackCounters& c) { (void)mlp_block(mlp, x.cview(), opt.params, c); });
    finish(first);
  }
  return records;
}

}  // namespace lpgemm::bench
