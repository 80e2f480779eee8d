// lpgemm: verification and benchmark driver.
//
//   lpgemm verify [--filter SUITE]
//   lpgemm bench single    --sizes FILE [--reps N --warmup N --mc .. --nr ..] [--out CSV]
//   lpgemm bench chain     --sizes FILE --depth D ...
//   lpgemm bench attention --tokens A..B..S --embed E --heads H --kv-heads G --head-dim D ...
//
// Any option may also come from an INI/TOML file given with --config; flags on
// the command line win.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "lpgemm/bench.hpp"
#include "lpgemm/verify.hpp"

namespace {

struct TileFlags {
  lpgemm::TileParams params = lpgemm::TileParams::x86_avx512();

  void add(CLI::App* app) {
    app->add_option("--mc", params.mc, "rows per cache block")->capture_default_str();
    app->add_option("--nc", params.nc, "columns per cache block")->capture_default_str();
    app->add_option("--kc", params.kc, "depth per cache block")->capture_default_str();
    app->add_option("--mr", params.mr, "register tile rows")->capture_default_str();
    app->add_option("--nr", params.nr, "register tile columns")->capture_default_str();
  }
};

struct CommonFlags {
  std::size_t reps = 10;
  std::size_t warmup = 2;
  std::uint32_t seed = 1;
  std::string out = "-";
  TileFlags tile;

  void add(CLI::App* app) {
    app->add_option("--reps", reps, "timed repetitions")->capture_default_str()->check(CLI::PositiveNumber);
    app->add_option("--warmup", warmup, "untimed warmup runs")->capture_default_str();
    app->add_option("--seed", seed, "input seed")->capture_default_str();
    app->add_option("--out", out, "CSV output file ('-' for stdout)")->capture_default_str();
    tile.add(app);
  }

  lpgemm::bench::BenchOptions options() const {
    lpgemm::bench::BenchOptions o;
    o.reps = reps;
    o.warmup = warmup;
    o.seed = seed;
    o.params = tile.params;
    o.params.validate();
    return o;
  }
};

void emit(const std::string& out, const std::vector<lpgemm::bench::BenchRecord>& records) {
  if (out == "-") {
    lpgemm::bench::write_csv(std::cout, records);
    return;
  }
  std::ofstream os(out);
  if (!os) throw std::runtime_error("cannot open " + out + " for writing");
  lpgemm::bench::write_csv(os, records);
  std::cerr << "wrote " << records.size() << " rows to " << out << '\n';
}

std::ifstream open_sizes(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open sizes file " + path);
  return in;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Layout-propagating GEMM: verification and benchmarks"};
  app.set_config("--config", "", "read options from an INI/TOML file");
  app.require_subcommand(1);

  lpgemm::verify::Options vopt;
  auto* verify = app.add_subcommand("verify", "run the oracle/property suite");
  verify->add_option("--filter", vopt.filter, "only suites whose name contains this");
  verify->add_flag("--inject-fault", vopt.inject_fault, "corrupt one result to test the harness");
  verify->add_option("--seed", vopt.seed, "seed for randomized checks")->capture_default_str();

  auto* bench = app.add_subcommand("bench", "time kernels and write CSV");
  bench->require_subcommand(1);

  CommonFlags single_flags;
  std::string single_sizes;
  auto* single = bench->add_subcommand("single", "one GEMM per size: default, ini, mid, end");
  single->add_option("--sizes", single_sizes, "file of 'M N K' lines")->required();
  single_flags.add(single);

  CommonFlags chain_flags;
  std::string chain_sizes;
  std::size_t depth = 3;
  auto* chain = bench->add_subcommand("chain", "chained GEMMs: naive, default, LP");
  chain->add_option("--sizes", chain_sizes, "file of 'M N K' or 'M W0 .. Wd' lines")->required();
  chain->add_option("--depth", depth, "GEMMs per chain")->capture_default_str()->check(CLI::PositiveNumber);
  chain_flags.add(chain);

  CommonFlags attn_flags;
  lpgemm::bench::AttentionSweep sweep;
  std::string tokens = "16..512..16";
  bool causal = sweep.config.causal;
  auto* attention = bench->add_subcommand("attention", "attention and MLP sweep over token counts");
  attention->add_option("--tokens", tokens, "token range start..end..step")->capture_default_str();
  attention->add_option("--embed", sweep.config.embed_dim, "embedding dimension")->capture_default_str();
  attention->add_option("--heads", sweep.config.n_heads, "query heads")->capture_default_str();
  attention->add_option("--kv-heads", sweep.config.n_kv_heads, "key/value heads")->capture_default_str();
  attention->add_option("--head-dim", sweep.config.head_dim, "per-head dimension")->capture_default_str();
  attention->add_option("--hidden", sweep.mlp_hidden, "MLP hidden dimension")->capture_default_str();
  attention->add_option("--causal", causal, "apply a causal mask (true/false)")->capture_default_str();
  attn_flags.add(attention);

  CLI11_PARSE(app, argc, argv);

  try {
    if (verify->parsed()) {
      const auto outcomes = lpgemm::verify::run(vopt);
      if (outcomes.empty()) {
        std::cerr << "no suite matches filter '" << vopt.filter << "'\n";
        return 2;
      }
      return lpgemm::verify::report(std::cout, outcomes) == 0 ? 0 : 1;
    }
    if (single->parsed()) {
      auto in = open_sizes(single_sizes);
      emit(single_flags.out, lpgemm::bench::bench_single(lpgemm::bench::parse_sizes(in, single_sizes),
                                                         single_flags.options()));
    } else if (chain->parsed()) {
      auto in = open_sizes(chain_sizes);
      emit(chain_flags.out, lpgemm::bench::bench_chain(lpgemm::bench::parse_chain_sizes(in, depth, chain_sizes),
                                                       chain_flags.options()));
    } else if (attention->parsed()) {
      sweep.tokens = lpgemm::bench::parse_token_range(tokens);
      sweep.config.causal = causal;
      sweep.config.seed = attn_flags.seed;
      emit(attn_flags.out, lpgemm::bench::bench_attention(sweep, attn_flags.options()));
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
