#pragma once

// Self-contained oracle/property suite behind `lpgemm verify`. Each check
// returns an empty string on success or a short failure description.

#include <cmath>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "lpgemm/attention.hpp"
#include "lpgemm/kernels.hpp"
#include "lpgemm/random.hpp"

namespace lpgemm::verify {

struct Check {
  std::string suite;
  std::string name;
  std::function<std::string()> run;
};

struct Outcome {
  std::string suite;
  std::string name;
  bool passed = false;
  std::string detail;
};

struct Options {
  std::string filter;          // run suites whose name contains this
  bool inject_fault = false;   // corrupt one kernel result (harness self-test)
  std::uint32_t seed = 2024;
};

/// Random valid tiling with small blocks so edge paths are exercised.
inline TileParams random_params(SeededRng& rng) {
  TileParams p;
  p.mr = rng.index(1, 8);
  p.nr = rng.index(1, 8);
  p.mc = p.mr * rng.index(1, 6);
  p.nc = p.nr * rng.index(1, 6);
  p.kc = rng.index(1, 40);
  return p;
}

namespace detail {

inline std::string fmt_err(const std::string& what, double err, double tol) {
  return err <= tol ? std::string() : what + ": error " + std::to_string(err) + " > " + std::to_string(tol);
}

inline std::string check_core() {
  for (std::size_t rows : {1u, 5u, 17u, 32u}) {
    for (std::size_t cols : {1u, 3u, 16u, 29u}) {
      for (const TileParams p : {TileParams{4, 4, 4, 2, 2}, TileParams{4, 8, 1, 4, 1}, TileParams{2, 2, 2, 1, 2}}) {
        const PropagatedLayout lay(rows, cols, p);
        std::vector<char> seen(lay.storage_size(), 0);
        for (std::size_t i = 0; i < rows; ++i) {
          for (std::size_t j = 0; j < cols; ++j) {
            const std::size_t o = lay.offset(i, j);
            if (o >= seen.size() || seen[o]) return "offset map not injective at " + std::to_string(rows) + "x" + std::to_string(cols);
            seen[o] = 1;
          }
        }
      }
    }
  }
  if (propagated_offset(0, 0, 1, 1, TileParams{1, 1, 1, 1, 1}) != 0) return "1x1 offset";
  return {};
}

inline std::string check_packing(std::uint32_t seed) {
  SeededRng rng(seed);
  for (int t = 0; t < 50; ++t) {
    const TileParams p = random_params(rng);
    const Matrix x = random_matrix(rng.index(1, 64), rng.index(1, 64), rng);
    const PropagatedMatrix packed = pack_to_propagated(x.cview(), p);
    if (!bit_equal(unpack_propagated(packed.cview()).cview(), x.cview())) return "round trip failed with " + p.to_string();
  }
  return {};
}

inline std::string check_microkernel(std::uint32_t seed) {
  SeededRng rng(seed);
  for (int t = 0; t < 200; ++t) {
    const std::size_t mr = rng.index(1, 16), nr = rng.index(1, 16), kc = rng.index(1, 64);
    std::vector<float> sa(mr * kc), sb(nr * kc), slot(mr * nr);
    for (float& v : sa) v = rng.uniform(-1, 1);
    for (float& v : sb) v = rng.uniform(-1, 1);
    Matrix c(mr, nr);
    microkernel_default(sa.data(), sb.data(), kc, mr, nr, c.view(), false);
    microkernel_propagate(sa.data(), sb.data(), kc, mr, nr, slot.data(), false);
    for (std::size_t r = 0; r < mr; ++r) {
      for (std::size_t q = 0; q < nr; ++q) {
        if (std::bit_cast<std::uint32_t>(c(r, q)) != std::bit_cast<std::uint32_t>(slot[q * mr + r])) {
          return "stores disagree for mr=" + std::to_string(mr) + " nr=" + std::to_string(nr);
        }
      }
    }
  }
  return {};
}

inline std::string check_kernels(std::uint32_t seed, bool inject_fault) {
  SeededRng rng(seed);
  for (int t = 0; t < 60; ++t) {
    const TileParams p = random_params(rng);
    const std::size_t m = rng.index(1, 70), n = rng.index(1, 70), k = rng.index(1, 70);
    const Matrix a = random_matrix(m, k, rng);
    const Matrix b = random_matrix(k, n, rng);
    const Matrix ref = gemm_naive(a.cview(), b.cview());
    PackCounters ctr;
    Matrix def = gemm_default(a.cview(), b.cview(), p, ctr);
    if (inject_fault && t == 0) def.view()(0, 0) += 1.0f;
    const PropagatedMatrix ap = pack_to_propagated(a.cview(), p);
    const Matrix ini = unpack_propagated(gemm_ini(a.cview(), b.cview(), p, ctr).cview());
    const Matrix mid = unpack_propagated(gemm_mid(ap.cview(), b.cview(), p, ctr).cview());
    const Matrix end = gemm_end(ap.cview(), b.cview(), p, ctr);
    const std::string where = " (" + std::to_string(m) + "x" + std::to_string(n) + "x" + std::to_string(k) + ", " +
                              p.to_string() + ")";
    for (const auto& [name, got] : {std::pair<const char*, const Matrix*>{"default", &def}, {"ini", &ini},
                                    {"mid", &mid}, {"end", &end}}) {
      if (auto e = fmt_err(std::string(name) + where, max_relative_error(got->cview(), ref.cview()), 1e-4); !e.empty()) {
        return e;
      }
    }
  }
  return {};
}

inline std::string check_packing_elimination(std::uint32_t seed) {
  SeededRng rng(seed);
  const TileParams p{16, 16, 8, 4, 4};
  const Matrix x = random_matrix(40, 40, rng);
  const Matrix w = random_matrix(40, 40, rng, -0.2f, 0.2f);
  const ChainSpec spec{x.cview(), {{w.cview(), {}}, {w.cview(), {}}, {w.cview(), {}}}};
  PackCounters lp, ini_only;
  (void)chain_gemm(spec, p, lp);
  (void)gemm_ini(x.cview(), w.cview(), p, ini_only);
  if (lp.multiplier_pack_elems != ini_only.multiplier_pack_elems) return "LP chain packs more than its ini stage";
  if (lp.ini_calls != 1 || lp.mid_calls != 1 || lp.end_calls != 1) return "LP chain kernel sequence";
  return {};
}

inline std::string check_layout_ops(std::uint32_t seed) {
  SeededRng rng(seed);
  const TileParams p{8, 8, 4, 4, 4};
  const Matrix x = random_matrix(13, 24, rng, -4, 4);
  std::vector<std::size_t> pos(13);
  for (std::size_t i = 0; i < pos.size(); ++i) pos[i] = i;

  const std::vector<std::pair<std::string, std::function<void(Matrix&, PropagatedMatrix&)>>> ops{
      {"softmax", [](Matrix& c, PropagatedMatrix& q) { softmax_rows(c.view(), CausalMask{}); softmax_rows(q.view(), CausalMask{}); }},
      {"scale", [](Matrix& c, PropagatedMatrix& q) { scale_inplace(c.view(), 0.37f); scale_inplace(q.view(), 0.37f); }},
      {"relu", [](Matrix& c, PropagatedMatrix& q) { relu_inplace(c.view()); relu_inplace(q.view()); }},
      {"rope", [&](Matrix& c, PropagatedMatrix& q) { rope_inplace(c.view(), 8, pos); rope_inplace(q.view(), 8, pos); }},
      {"rmsnorm", [](Matrix& c, PropagatedMatrix& q) {
         const std::vector<float> g(24, 1.5f);
         rmsnorm_rows(c.view(), g);
         rmsnorm_rows(q.view(), g);
       }},
  };
  for (const auto& [name, op] : ops) {
    Matrix c = Matrix::copy_of(x.cview());
    PropagatedMatrix q = pack_to_propagated(x.cview(), p);
    op(c, q);
    const Matrix back = unpack_propagated(q.cview());
    for (std::size_t i = 0; i < c.rows(); ++i) {
      for (std::size_t j = 0; j < c.cols(); ++j) {
        if (std::fabs(back(i, j) - c(i, j)) > 1e-6f) return name + " differs between layouts";
      }
    }
  }
  return {};
}

inline std::string check_attention() {
  for (const auto& [t, h, kv] : {std::tuple{4u, 1u, 1u}, {16u, 4u, 2u}, {33u, 4u, 1u}}) {
    AttentionConfig cfg;
    cfg.n_tokens = t;
    cfg.n_heads = h;
    cfg.n_kv_heads = kv;
    cfg.head_dim = 8;
    cfg.embed_dim = h * 8;
    const AttentionWeights w = AttentionWeights::generate(cfg);
    const Matrix x = attention_input(cfg);
    PackCounters ctr;
    const Matrix lp = attention_lp(cfg, w, x.cview(), TileParams{8, 16, 8, 4, 4}, ctr);
    const Matrix ref = attention_reference(cfg, w, x.cview());
    if (auto e = fmt_err("attention t=" + std::to_string(t), max_relative_error(lp.cview(), ref.cview(), 1e-5), 1e-3);
        !e.empty()) {
      return e;
    }
  }
  return {};
}

}  // namespace detail

inline std::vector<Check> all_checks(const Options& opt) {
  const std::uint32_t s = opt.seed;
  return {
      {"core", "propagated offset bijection", detail::check_core},
      {"packing", "pack/unpack round trip", [s] { return detail::check_packing(s); }},
      {"kernels", "micro-kernel store equivalence", [s] { return detail::check_microkernel(s + 1); }},
      {"kernels", "all paths match naive oracle", [s, f = opt.inject_fault] { return detail::check_kernels(s + 2, f); }},
      {"kernels", "chain packs multiplier once", [s] { return detail::check_packing_elimination(s + 3); }},
      {"layout_ops", "propagated ops match canonical", [s] { return detail::check_layout_ops(s + 4); }},
      {"attention", "LP attention matches reference", detail::check_attention},
  };
}

inline std::vector<Outcome> run(const Options& opt) {
  std::vector<Outcome> out;
  for (const Check& c : all_checks(opt)) {
    if (!opt.filter.empty() && c.suite.find(opt.filter) == std::string::npos) continue;
    Outcome o{c.suite, c.name, false, {}};
    try {
      o.detail = c.run();
      o.passed = o.detail.empty();
    } catch (const std::exception& e) {
      o.detail = std::string("exception: ") + e.what();
    }
    out.push_back(std::move(o));
  }
  return out;
}

/// Prints the table and returns the number of failures.
inline std::size_t report(std::ostream& os, const std::vector<Outcome>& outcomes) {
  std::size_t failures = 0;
  for (const Outcome& o : outcomes) {
    char line[160];
    std::snprintf(line, sizeof line, "%-11s %-34s %s", o.suite.c_str(), o.name.c_str(), o.passed ? "PASS" : "FAIL");
    os << line;
    if (!o.passed) os << "  " << o.detail;
    os << '\n';
    failures += o.passed ? 0 : 1;
  }
  os << outcomes.size() - failures << "/" << outcomes.size() << " checks passed\n";
  return failures;
}

}  // namespace lpgemm::verify
