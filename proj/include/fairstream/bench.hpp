#pragma once

// Benchmark suites over generated streams. Each suite self-times with a
// monotonic clock, drops the first 10% of iterations as warm-up, and reports
// one CSV row per parameter point.

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "fairstream/core.hpp"

namespace fairstream::bench {

struct BenchParams {
  std::size_t window_size = 1000;
  std::size_t block_size = 25;
  std::size_t cardinality = 5;
  std::size_t landmark_size = 100;
  /// Timed operations per parameter point (slides, windows or reorders).
  std::size_t iterations = 20000;
  std::uint64_t seed = 7;
};

struct BenchRow {
  std::string suite;
  std::size_t window = 0;
  std::size_t block = 0;
  std::size_t cardinality = 0;
  std::size_t landmark = 0;
  double mean_us = 0.0;
  double p90_us = 0.0;
  double throughput_wps = 0.0;
  long peak_mem_kb = 0;
};

struct BenchReport {
  std::vector<BenchRow> rows;

  void write_csv(std::ostream& out) const;
};

struct TimingStats {
  double mean_us = 0.0;
  double p90_us = 0.0;
  /// Timed operations per second.
  double throughput = 0.0;
};

std::vector<std::string> suite_names();

/// Throws ValidationError for an unknown suite.
BenchReport run_bench(std::string_view suite, const BenchParams& params);

/// l values with equal proportions, labelled v0..v{l-1}.
FairnessConstraint uniform_constraint(std::size_t cardinality);

/// Stream of n items repeating the first valid block pattern; every window
/// over it is fair.
std::vector<Item> fair_stream(const FairnessConstraint& constraint, const WindowSpec& spec,
                              std::size_t n);

// Measurement kernels, shared with the acceptance checks.
TimingStats time_fsketch_slides(std::size_t window, std::size_t cardinality, std::size_t slides,
                                std::uint64_t seed);
TimingStats time_bsketch_rebuilds(std::size_t window, std::size_t cardinality, std::size_t slides,
                                  std::uint64_t seed);
/// Slide plus a full monitor pass per window over a fair stream.
TimingStats time_monitor(const WindowSpec& spec, std::size_t cardinality, std::size_t windows);
/// Records in, engine, JSON events out (to a discarding sink).
TimingStats time_end_to_end(const WindowSpec& spec, std::size_t cardinality, std::size_t windows);
TimingStats time_reorder(std::size_t n, const WindowSpec& spec, std::size_t cardinality,
                         std::size_t repetitions, std::uint64_t seed, bool parallel);
TimingStats time_count_fair_blocks(std::size_t n, const WindowSpec& spec, std::size_t cardinality,
                                   std::size_t repetitions, std::uint64_t seed, bool parallel);

/// Process peak resident set size in KiB.
long peak_rss_kb();

}  // namespace fairstream::bench
