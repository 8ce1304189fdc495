#pragma once

// Per-decoded-word latency of the output layer under beam-search
// bookkeeping: the dot-product WT heads (copy + types + question words)
// against a plain full-vocabulary softmax.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace morphoqg {

struct OutputLayerSpec {
  std::string name;
  bool wt = false;               // WT heads instead of a full softmax
  std::size_t vocab = 30000;     // full-softmax size, or question-word vocab for WT
  std::size_t source_len = 128;  // copy support (WT only)

  std::size_t support() const;
  static OutputLayerSpec full_softmax(std::size_t vocab);
  static OutputLayerSpec wt_heads(std::size_t quest_vocab, std::size_t source_len);
};

struct BenchOptions {
  std::size_t hidden = 512;
  std::size_t beam = 12;
  std::size_t words = 200;   // timed decoded words per repetition
  std::size_t warmup = 20;   // untimed words per repetition
  std::size_t repetitions = 3;
  /// Share of WT words that are root + type, i.e. need a second output step.
  double trans_fraction = 0.25;
  std::uint64_t seed = 42;
};

struct LatencyReport {
  std::string name;
  std::size_t support = 0;
  std::size_t words = 0;
  double mean_s = 0.0;
  double p95_s = 0.0;
  double median_of_medians_s = 0.0;

  nlohmann::json to_json() const;
};

LatencyReport bench_layer(const OutputLayerSpec& spec, const BenchOptions& opts);

struct BenchComparison {
  LatencyReport a, b;
  double speedup = 0.0;  // b.mean / a.mean
  double saving = 0.0;   // 1 - a.mean / b.mean

  nlohmann::json to_json() const;
};

/// Runs both layers in this process with identical options.
BenchComparison bench_decode(const OutputLayerSpec& a, const OutputLayerSpec& b,
                             const BenchOptions& opts);

/// Reference per-word timings from a GPU setting, for a
/// directional comparison only.
inline constexpr double kReferenceFullSeconds = 0.0081;
inline constexpr double kReferenceWtSeconds = 0.0049;

}  // namespace morphoqg
