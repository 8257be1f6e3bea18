#pragma once

// Block-fair reordering of a buffered stream segment.
//
// A segment of n items is permuted to maximize the number of fair length-s
// windows ("unique blocks": one per start position). The construction repeats
// a fair block pattern (isomorphic blocks), extends it by a prefix of the
// pattern, and appends whatever cannot contribute to a fair block at the tail.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "fairstream/core.hpp"

namespace fairstream {

enum class ReorderStrategy {
  unchanged,           // no combination admits a single fair block
  isomorphic,          // ibc * s == n
  extended_isomorphic, // ibc blocks + extended prefix + leftovers
  multi_case,          // ibc primary blocks + ibc_r secondary blocks + EP_R + leftovers
  mixed_run,           // blocks drawn from several combinations, chained by substitution
};

const char* to_string(ReorderStrategy strategy) noexcept;

struct ExtendedPrefix {
  CountVector ep;
  Count epl = 0;
};

struct PatternPlan {
  /// Block value patterns in stream order of first use, each of length s.
  std::vector<std::vector<ValueId>> patterns;
  Count ibc = 0;
  std::optional<Count> ibc_r;
  /// EP for the single-case layout, EP_R for the multi-case layout, the
  /// partial trailing block for a mixed run.
  CountVector ep;
  Count epl = 0;
  CountVector leftovers;
};

struct ReorderResult {
  std::vector<Item> stream;
  Count fair_block_count = 0;
  CountCombination primary_combo;
  std::optional<CountCombination> secondary_combo;
  bool changed = false;
  ReorderStrategy strategy = ReorderStrategy::unchanged;
  PatternPlan plan;
};

/// Number of start positions i in [1, n-s+1] whose s-item block is fair.
/// Parallel over start positions when the stream is long enough.
Count count_fair_blocks(std::span<const Item> stream, const BlockRules& rules);
Count count_fair_blocks(std::span<const Item> stream, const FairnessConstraint& constraint,
                        const WindowSpec& spec);

/// min over values of floor(V_p / v_p); values with v_p == 0 do not bound it.
Count isomorphic_block_count(std::span<const Count> totals, std::span<const Count> combo);

/// EP_p = min(v_p, V_p - ibc * v_p).
ExtendedPrefix extended_prefix(std::span<const Count> totals, std::span<const Count> combo,
                               Count ibc);

/// Best layout for a single primary combination (with an optional secondary
/// combination for the remainder).
ReorderResult max_reorder(std::span<const Item> items, const CountCombination& combo,
                          const std::vector<CountCombination>& all_combos,
                          const BlockRules& rules);

/// Longest run of consecutive fair windows that the multiset admits when
/// blocks may use any mix of valid combinations. Empty when not even one
/// fair block can be formed.
std::optional<ReorderResult> mixed_run_reorder(std::span<const Item> items,
                                               const std::vector<CountCombination>& all_combos,
                                               const BlockRules& rules);

/// Runs max_reorder for every valid combination (in parallel) and keeps the
/// best; falls back to a mixed run when that is strictly better. Ties go to
/// the earlier combination. Never returns fewer fair blocks than the input.
ReorderResult bfair_reorder(std::span<const Item> items, const BlockRules& rules);
ReorderResult bfair_reorder(std::span<const Item> items, const FairnessConstraint& constraint,
                            const WindowSpec& spec);

/// Single-threaded reference versions of the parallel kernels above.
namespace serial {

Count count_fair_blocks(std::span<const Item> stream, const BlockRules& rules);
ReorderResult bfair_reorder(std::span<const Item> items, const BlockRules& rules);

}  // namespace serial

}  // namespace fairstream
