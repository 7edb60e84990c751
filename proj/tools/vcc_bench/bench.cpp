#include "bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <thread>

#include "vcc/error.hpp"
#include "vcc/rng.hpp"
#include "vcc/selection.hpp"
#include "vcc/seq_tree.hpp"
#include "vcc/transformer.hpp"
#include "vcc/vcc_model.hpp"
#include "vcc/vip_layout.hpp"

namespace vcc::bench {

std::string to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::vanilla:
      return "vanilla";
    case LayerKind::vcc:
      return "vcc";
    case LayerKind::initial:
      return "initial";
  }
  return "unknown";
}

Mode parse_mode(const std::string& text) {
  if (text == "vanilla") return Mode::vanilla;
  if (text == "vcc") return Mode::vcc;
  if (text == "both") return Mode::both;
  throw InvalidArgument("mode must be vanilla, vcc or both, got '" + text + "'");
}

Precision parse_precision(const std::string& text) {
  if (text == "64" || text == "f64" || text == "double") return Precision::f64;
  if (text == "32" || text == "f32" || text == "float") return Precision::f32;
  throw InvalidArgument("precision must be 64 or 32, got '" + text + "'");
}

void BenchConfig::validate() const {
  if (seq_lens.empty()) throw InvalidArgument("at least one sequence length is required");
  for (std::size_t n : seq_lens) {
    if (n <= vip_count) {
      throw InvalidArgument("sequence length " + std::to_string(n) +
                            " leaves no non-VIP tokens with vip_count=" +
                            std::to_string(vip_count));
    }
  }
  if (vip_count == 0) throw InvalidArgument("vip_count must be positive");
  if (k < 2) throw InvalidArgument("k must be at least 2");
  if (trials == 0) throw InvalidArgument("trials must be positive");
  if (batch == 0 || threads == 0) throw InvalidArgument("batch and threads must be positive");
  if (segment_width == 0) throw InvalidArgument("segment_width must be positive");
  if (rows && *rows <= vip_count) {
    throw InvalidArgument("rows must exceed vip_count so at least one component remains");
  }
  LayerConfig{dim, heads, ffn_width()}.validate();
}

BenchConfig apply_bench_config(const std::vector<ConfigEntry>& entries, BenchConfig base) {
  for (const ConfigEntry& e : entries) {
    try {
      if (e.key == "seq_len") {
        base.seq_lens = config_counts(e);
      } else if (e.key == "dim") {
        base.dim = config_count(e);
      } else if (e.key == "heads") {
        base.heads = config_count(e);
      } else if (e.key == "ffn_dim") {
        base.ffn_dim = config_count(e);
      } else if (e.key == "layers") {
        base.layers = config_count(e);
      } else if (e.key == "init_layers") {
        base.init_layers = config_count(e);
      } else if (e.key == "segment_width") {
        base.segment_width = config_count(e);
      } else if (e.key == "vip_count") {
        base.vip_count = config_count(e);
      } else if (e.key == "k") {
        base.k = config_count(e);
      } else if (e.key == "h") {
        base.h = config_count(e);
      } else if (e.key == "rows") {
        base.rows = config_count(e);
      } else if (e.key == "mode") {
        base.mode = parse_mode(e.value);
      } else if (e.key == "seed") {
        base.seed = config_u64(e);
      } else if (e.key == "trials") {
        base.trials = config_count(e);
      } else if (e.key == "warmups") {
        base.warmups = config_count(e);
      } else if (e.key == "vanilla_cap") {
        base.vanilla_cap = config_count(e);
      } else if (e.key == "batch") {
        base.batch = config_count(e);
      } else if (e.key == "threads") {
        base.threads = config_count(e);
      } else if (e.key == "precision") {
        base.precision = parse_precision(e.value);
      } else {
        throw ConfigError("unknown key '" + e.key + "'", e.line);
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& err) {
      throw ConfigError(e.key + ": " + err.what(), e.line);
    }
  }
  return base;
}

CostModel predict_cost(const CostInputs& in) {
  const double l = static_cast<double>(in.layers);
  const double r = static_cast<double>(in.r);
  const double d = static_cast<double>(in.d);
  const std::size_t n_c = next_power_of(in.n > in.n_p ? in.n - in.n_p : 1, in.k);
  CostModel m;
  m.projection = l * r * d * d;
  m.attention = l * r * r * d;
  m.tree = l * r * static_cast<double>(exact_log(n_c, in.k)) * d;
  m.selection = l * r * static_cast<double>(in.n_p) * d;
  m.io = static_cast<double>(in.n) * d;
  return m;
}

Timing summarize(std::vector<double> samples) {
  if (samples.empty()) throw InvalidArgument("summarize: no samples");
  std::sort(samples.begin(), samples.end());
  const std::size_t mid = samples.size() / 2;
  const double median =
      samples.size() % 2 ? samples[mid] : 0.5 * (samples[mid - 1] + samples[mid]);
  return {median, samples.front()};
}

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

// fn(i) for i in [0, count) on up to `threads` workers.
template <typename F>
void for_each_parallel(std::size_t count, std::size_t threads, F&& fn) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t workers = std::min(threads, count);
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t t = 0; t < workers; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < count; i += workers) fn(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// Runs warmups + trials; `prepare` is untimed, `body` is timed. Reports time
// per sequence of the batch.
template <typename Prepare, typename Body>
Timing time_trials(const BenchConfig& c, Prepare&& prepare, Body&& body) {
  std::vector<double> samples;
  for (std::size_t t = 0; t < c.warmups + c.trials; ++t) {
    prepare();
    const auto start = Clock::now();
    for_each_parallel(c.batch, c.threads, body);
    const double ms = elapsed_ms(start) / static_cast<double>(c.batch);
    if (t >= c.warmups) samples.push_back(ms);
  }
  return summarize(std::move(samples));
}

template <std::floating_point T>
struct Workload {
  LayerWeights<T> weights;
  std::vector<BasicMatrix<T>> inputs;  // one per batch entry
  std::vector<bool> vip_mask;
};

template <std::floating_point T>
Workload<T> make_workload(const BenchConfig& c, std::size_t n) {
  Rng base(c.seed);
  Rng weight_rng = base.fork(2 * n);
  Rng input_rng = base.fork(2 * n + 1);
  Workload<T> w;
  w.weights = LayerWeights<T>::random(LayerConfig{c.dim, c.heads, c.ffn_width()}, weight_rng,
                                      T(1) / std::sqrt(static_cast<T>(c.dim)));
  for (std::size_t b = 0; b < c.batch; ++b) {
    Rng stream = input_rng.fork(b);
    w.inputs.push_back(stream.gaussian_matrix<T>(n, c.dim));
  }
  w.vip_mask.assign(n, false);
  for (std::size_t i = 0; i < c.vip_count; ++i) w.vip_mask[i * (n / c.vip_count)] = true;
  return w;
}

template <std::floating_point T>
void run_length(const BenchConfig& c, std::size_t n, std::vector<BenchRecord>& out,
                std::ostream* log) {
  const Workload<T> work = make_workload<T>(c, n);
  const std::size_t n_c = next_power_of(n - c.vip_count, c.k);
  const SelectionBudget budget =
      c.rows ? SelectionBudget::fixed_rows(*c.rows - c.vip_count)
             : SelectionBudget::two_resolution(c.h);
  const std::vector<std::size_t> schedule = budget.schedule(n_c, c.k);
  std::size_t total_splits = 0;
  for (std::size_t h : schedule) total_splits += h;

  BenchRecord base;
  base.n = n;
  base.n_p = c.vip_count;
  base.d = c.dim;
  base.k = c.k;
  base.h = c.rows ? total_splits : c.h;
  base.trials = c.trials;
  base.seed = c.seed;

  auto report = [&](const BenchRecord& rec) {
    out.push_back(rec);
    if (log) {
      char line[160];
      std::snprintf(line, sizeof line, "n=%zu kind=%s r=%zu median=%.3f ms min=%.3f ms\n",
                    rec.n, to_string(rec.kind).c_str(), rec.r, rec.ms_median, rec.ms_min);
      *log << line << std::flush;
    }
  };

  if (c.init_layers > 0) {
    Model<T> model;
    model.config.layers = 1;
    model.config.initial_layers = 1;
    model.config.segment_width = c.segment_width;
    model.config.k = c.k;
    model.config.layer = work.weights.config;
    model.weights = {work.weights};
    std::vector<BasicMatrix<T>> results(c.batch);
    const Timing t = time_trials(
        c, [] {}, [&](std::size_t b) { results[b] = initial_stage(work.inputs[b], model); });
    BenchRecord rec = base;
    rec.kind = LayerKind::initial;
    rec.r = n;
    rec.ms_median = t.median;
    rec.ms_min = t.min;
    report(rec);
  }

  if (c.mode != Mode::vcc && n <= c.vanilla_cap) {
    std::vector<BasicMatrix<T>> results(c.batch);
    const Timing t = time_trials(
        c, [] {}, [&](std::size_t b) { results[b] = layer_forward(work.inputs[b], work.weights); });
    BenchRecord rec = base;
    rec.kind = LayerKind::vanilla;
    rec.r = n;
    rec.ms_median = t.median;
    rec.ms_min = t.min;
    report(rec);
  }

  if (c.mode != Mode::vanilla) {
    std::vector<PartitionedSequence<T>> parts;
    std::vector<SeqTree<T>> built;
    for (const auto& x : work.inputs) {
      parts.push_back(reorder(x, work.vip_mask, c.k));
      built.push_back(SeqTree<T>::build(parts.back().rest, c.k));
    }
    const CompressedLayerOptions options{budget, ScoringMode::projected,
                                         AttentionNormalization::softmax,
                                         parts.front().layout.real_rows()};
    std::vector<SeqTree<T>> trees(c.batch);
    std::vector<LayerDiagnostics> diagnostics(c.batch);
    const Timing t = time_trials(
        c, [&] { trees = built; },
        [&](std::size_t b) {
          diagnostics[b] =
              compressed_layer_forward(parts[b].vip, trees[b], work.weights, options).diagnostics;
        });
    BenchRecord rec = base;
    rec.kind = LayerKind::vcc;
    rec.r = diagnostics.front().rows;
    rec.writes = diagnostics.front().writes;
    rec.retrievals = diagnostics.front().retrievals;
    rec.ms_median = t.median;
    rec.ms_min = t.min;
    report(rec);
  }
}

}  // namespace

std::vector<BenchRecord> run_sweep(const BenchConfig& config, std::ostream* log) {
  config.validate();
  std::vector<BenchRecord> records;
  for (std::size_t n : config.seq_lens) {
    if (config.precision == Precision::f64) {
      run_length<double>(config, n, records, log);
    } else {
      run_length<float>(config, n, records, log);
    }
  }
  return records;
}

std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"\r\n") == std::string::npos) return text;
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

void write_csv(std::ostream& out, const std::vector<BenchRecord>& records) {
  out << "n,n_p,r,d,k,h,kind,ms_median,ms_min,writes,retrievals,trials,seed\n";
  for (const BenchRecord& r : records) {
    char times[64];
    std::snprintf(times, sizeof times, "%.4f,%.4f", r.ms_median, r.ms_min);
    out << r.n << ',' << r.n_p << ',' << r.r << ',' << r.d << ',' << r.k << ',' << r.h << ','
        << csv_field(to_string(r.kind)) << ',' << times << ',' << r.writes << ','
        << r.retrievals << ',' << r.trials << ',' << r.seed << '\n';
  }
}

void emit_csv(const std::vector<BenchRecord>& records, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  write_csv(out, records);
  out.flush();
  if (!out) throw IoError("failed writing '" + path + "'");
}

}  // namespace vcc::bench
