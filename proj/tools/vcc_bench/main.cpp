#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

#include "bench.hpp"
#include "vcc/error.hpp"

namespace {

void print_costs(std::ostream& out, const vcc::bench::BenchConfig& c,
                 const std::vector<vcc::bench::BenchRecord>& records) {
  out << "# cost model (operation counts, l=" << c.layers << ")\n";
  for (const auto& rec : records) {
    if (rec.kind != vcc::bench::LayerKind::vcc) continue;
    const auto m = vcc::bench::predict_cost({c.layers, rec.r, rec.d, rec.n, rec.n_p, rec.k});
    char line[256];
    std::snprintf(line, sizeof line,
                  "# n=%zu r=%zu  rd2=%.3e r2d=%.3e rlogd=%.3e rnpd=%.3e nd=%.3e total=%.3e\n",
                  rec.n, rec.r, m.projection, m.attention, m.tree, m.selection, m.io,
                  m.total());
    out << line;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Times vanilla and compressed encoder layers over a sweep of lengths."};
  app.set_help_flag("--help", "Print this help message and exit");
  vcc::bench::BenchConfig flags;
  std::vector<std::size_t> seq_lens;
  std::string mode = "both";
  std::string precision = "64";
  std::string config_path;
  std::string out_path;
  std::size_t rows = 0;
  bool quiet = false;

  auto* o_len = app.add_option("--seq-len", seq_lens, "Sequence length (repeatable)");
  auto* o_dim = app.add_option("--dim", flags.dim, "Embedding width d");
  auto* o_heads = app.add_option("--heads", flags.heads, "Attention heads g");
  auto* o_ffn = app.add_option("--ffn-dim", flags.ffn_dim, "FFN hidden width (0: 4d)");
  auto* o_layers = app.add_option("--layers", flags.layers, "Layers l for the cost model");
  auto* o_init = app.add_option("--init-layers", flags.init_layers,
                                "Initial-stage layers; >0 also times one segmented layer");
  auto* o_vip = app.add_option("--vip-count", flags.vip_count, "VIP tokens n_p");
  auto* o_k = app.add_option("--k", flags.k, "Branching factor k");
  auto* o_h = app.add_option("--h", flags.h, "Two-resolution split count h");
  auto* o_rows = app.add_option("--rows", rows, "Target r; replaces the two-resolution budget");
  auto* o_mode = app.add_option("--mode", mode, "vanilla|vcc|both")
                     ->check(CLI::IsMember({"vanilla", "vcc", "both"}));
  auto* o_seed = app.add_option("--seed", flags.seed, "RNG seed");
  auto* o_trials = app.add_option("--trials", flags.trials, "Timed trials per point");
  auto* o_warm = app.add_option("--warmups", flags.warmups, "Untimed warmup runs");
  auto* o_cap = app.add_option("--vanilla-cap", flags.vanilla_cap, "Longest vanilla run");
  auto* o_batch = app.add_option("--batch", flags.batch, "Sequences per trial");
  auto* o_threads = app.add_option("--threads", flags.threads, "Workers for the batch");
  auto* o_prec = app.add_option("--precision", precision, "64|32")
                     ->check(CLI::IsMember({"64", "32"}));
  app.add_option("--config", config_path, "key = value file; flags override it");
  app.add_option("--out", out_path, "CSV path (default stdout)");
  app.add_flag("--quiet", quiet, "No progress lines");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    vcc::bench::BenchConfig c;
    if (!config_path.empty()) c = vcc::bench::apply_bench_config(vcc::load_config(config_path), c);
    if (o_len->count()) c.seq_lens = seq_lens;
    if (o_dim->count()) c.dim = flags.dim;
    if (o_heads->count()) c.heads = flags.heads;
    if (o_ffn->count()) c.ffn_dim = flags.ffn_dim;
    if (o_layers->count()) c.layers = flags.layers;
    if (o_init->count()) c.init_layers = flags.init_layers;
    if (o_vip->count()) c.vip_count = flags.vip_count;
    if (o_k->count()) c.k = flags.k;
    if (o_h->count()) c.h = flags.h;
    if (o_rows->count()) c.rows = rows;
    if (o_mode->count()) c.mode = vcc::bench::parse_mode(mode);
    if (o_seed->count()) c.seed = flags.seed;
    if (o_trials->count()) c.trials = flags.trials;
    if (o_warm->count()) c.warmups = flags.warmups;
    if (o_cap->count()) c.vanilla_cap = flags.vanilla_cap;
    if (o_batch->count()) c.batch = flags.batch;
    if (o_threads->count()) c.threads = flags.threads;
    if (o_prec->count()) c.precision = vcc::bench::parse_precision(precision);

    std::ostream& info = out_path.empty() ? std::cerr : std::cout;
    const auto records = vcc::bench::run_sweep(c, quiet ? nullptr : &info);
    if (out_path.empty()) {
      vcc::bench::write_csv(std::cout, records);
    } else {
      vcc::bench::emit_csv(records, out_path);
    }
    if (!quiet) print_costs(info, c, records);
  } catch (const vcc::Error& e) {
    std::cerr << "vcc-bench: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "vcc-bench: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
