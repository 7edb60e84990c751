#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "vcc/config.hpp"

namespace vcc::bench {

enum class LayerKind { vanilla, vcc, initial };
enum class Mode { vanilla, vcc, both };
enum class Precision { f64, f32 };

std::string to_string(LayerKind kind);
Mode parse_mode(const std::string& text);
Precision parse_precision(const std::string& text);

struct BenchRecord {
  std::size_t n = 0;
  std::size_t n_p = 0;
  std::size_t r = 0;
  std::size_t d = 0;
  std::size_t k = 0;
  std::size_t h = 0;
  LayerKind kind = LayerKind::vcc;
  double ms_median = 0;
  double ms_min = 0;
  std::size_t writes = 0;
  std::size_t retrievals = 0;
  std::size_t trials = 0;
  std::uint64_t seed = 0;
};

struct BenchConfig {
  std::vector<std::size_t> seq_lens{8192};
  std::size_t dim = 64;
  std::size_t heads = 4;
  /// 0 means 4·dim.
  std::size_t ffn_dim = 0;
  std::size_t layers = 1;
  std::size_t init_layers = 0;
  std::size_t segment_width = 512;
  std::size_t vip_count = 8;
  std::size_t k = 2;
  /// Two-resolution h, unless `rows` is set.
  std::size_t h = 8;
  /// Target r = n_p + |J|; replaces the two-resolution budget.
  std::optional<std::size_t> rows;
  Mode mode = Mode::both;
  std::uint64_t seed = 0;
  std::size_t trials = 5;
  std::size_t warmups = 2;
  /// Vanilla layers are only timed up to this length.
  std::size_t vanilla_cap = 16384;
  /// Independent sequences per trial, spread over `threads` workers.
  std::size_t batch = 1;
  std::size_t threads = 1;
  Precision precision = Precision::f64;

  std::size_t ffn_width() const noexcept { return ffn_dim ? ffn_dim : 4 * dim; }
  /// Throws InvalidArgument.
  void validate() const;
};

/// Keys: seq_len (list), dim, heads, ffn_dim, layers, init_layers,
/// segment_width, vip_count, k, h, rows, mode, seed, trials, warmups,
/// vanilla_cap, batch, threads, precision (64|32).
BenchConfig apply_bench_config(const std::vector<ConfigEntry>& entries, BenchConfig base);

struct CostInputs {
  std::size_t layers = 1;
  std::size_t r = 0;
  std::size_t d = 0;
  std::size_t n = 0;
  std::size_t n_p = 0;
  std::size_t k = 2;
};

/// Operation-count estimates, one per term of the per-sequence cost.
struct CostModel {
  double projection = 0;  ///< l·r·d²
  double attention = 0;   ///< l·r²·d
  double tree = 0;        ///< l·r·log_k(n_c)·d
  double selection = 0;   ///< l·r·n_p·d
  double io = 0;          ///< n·d

  double total() const noexcept { return projection + attention + tree + selection + io; }
};

/// n_c is n - n_p rounded up to a power of k.
CostModel predict_cost(const CostInputs& in);

struct Timing {
  double median = 0;
  double min = 0;
};

/// Median and minimum of `samples` (milliseconds). Throws on an empty input.
Timing summarize(std::vector<double> samples);

/// For each length: one initial-stage layer (when init_layers > 0), one
/// vanilla layer (up to vanilla_cap, per mode) and one compressed layer (per
/// mode). Progress lines go to `log` when non-null.
std::vector<BenchRecord> run_sweep(const BenchConfig& config, std::ostream* log = nullptr);

/// Header plus one line per record.
void write_csv(std::ostream& out, const std::vector<BenchRecord>& records);
/// Throws IoError naming `path`.
void emit_csv(const std::vector<BenchRecord>& records, const std::string& path);
/// RFC-4180 field quoting.
std::string csv_field(const std::string& text);

}  // namespace vcc::bench
