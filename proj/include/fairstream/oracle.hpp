#pragma once

// Ground truth and baselines: direct recounting, exhaustive reordering, and
// the suffix-cumulative sketch that must be rebuilt on every slide. None of
// this is on the engine's path; tests and benchmarks compare against it.

#include <cstddef>
#include <span>
#include <vector>

#include "fairstream/core.hpp"
#include "fairstream/monitor.hpp"

namespace fairstream::oracle {

/// Largest segment brute_force_reorder accepts.
inline constexpr std::size_t kBruteForceLimit = 12;

/// Recounts every block of the window directly.
Verdict naive_monitor(std::span<const Item> window, const BlockRules& rules);

/// Counts of stored and inferred values over items [0, prefix_len).
CountVector naive_prefix_counts(std::span<const Item> items, std::size_t prefix_len,
                                std::size_t cardinality);

/// Fair windows of a plain value sequence.
Count naive_fair_blocks(std::span<const ValueId> values, const BlockRules& rules);

/// Maximum fair-block count over all distinct orderings of the multiset.
/// Throws DomainError above kBruteForceLimit items.
Count brute_force_reorder(std::span<const Item> items, const BlockRules& rules);

namespace serial {
Count brute_force_reorder(std::span<const Item> items, const BlockRules& rules);
}

/// Suffix-cumulative counts: entry i holds counts of the first l-1 values
/// over window positions i..|W|.
class BackwardSketch {
 public:
  static BackwardSketch build(std::span<const Item> window, std::size_t cardinality);

  CountVector block_counts(std::size_t block_index, std::size_t block_size) const;
  CountVector window_counts() const;
  /// Stored counts at 1-based position i; position |W|+1 is all zeros.
  std::span<const Count> entry(std::size_t i) const noexcept {
    return {entries_.data() + (i - 1) * stored_, stored_};
  }
  std::size_t window_length() const noexcept { return window_len_; }

 private:
  std::size_t window_len_ = 0;
  std::size_t stored_ = 0;
  std::vector<Count> entries_;  // (|W| + 1) rows
};

/// Monitor-BFair evaluated on a backward sketch.
Verdict monitor_backward(const BackwardSketch& sketch, const BlockRules& rules);

}  // namespace fairstream::oracle
