#include "fairstream/monitor.hpp"

#include <string>

namespace fairstream {

Verdict monitor_bfair(const ForwardSketch& sketch, const BlockRules& rules) {
  const std::size_t s = rules.block_size;
  const std::size_t k = rules.blocks;
  if (sketch.window_length() != k * s || sketch.cardinality() != rules.cardinality()) {
    throw ValidationError("sketch of length " + std::to_string(sketch.window_length()) +
                          " does not match " + std::to_string(k) + " blocks of " +
                          std::to_string(s));
  }
  const std::size_t stored = rules.cardinality() - 1;
  const auto block = static_cast<Count>(s);

  for (std::size_t b = 1; b <= k; ++b) {
    const auto curr = sketch.entry(b * s);
    const auto prev = b == 1 ? sketch.base() : sketch.entry((b - 1) * s);
    Count sum = 0;
    for (std::size_t j = 0; j < stored; ++j) {
      const Count c = curr[j] - prev[j];
      sum += c;
      if (!rules.ranges[j].contains(c)) {
        return Verdict::fail({b, static_cast<ValueId>(j), c, rules.ranges[j]});
      }
    }
    const Count last = block - sum;
    if (!rules.ranges[stored].contains(last)) {
      return Verdict::fail({b, static_cast<ValueId>(stored), last, rules.ranges[stored]});
    }
  }
  return Verdict::pass();
}

Verdict monitor_bfair(const ForwardSketch& sketch, const FairnessConstraint& constraint,
                      const WindowSpec& spec) {
  return monitor_bfair(sketch, BlockRules::make(constraint, spec));
}

bool feasible_within_window(std::span<const Count> totals, const BlockRules& rules) {
  const auto k = static_cast<Count>(rules.blocks);
  for (std::size_t p = 0; p < rules.cardinality(); ++p) {
    if (totals[p] < k * rules.ranges[p].lo || totals[p] > k * rules.ranges[p].hi) return false;
  }
  return true;
}

bool feasible_within_window(std::span<const Count> totals, const FairnessConstraint& constraint,
                            const WindowSpec& spec) {
  return feasible_within_window(totals, BlockRules::make(constraint, spec));
}

}  // namespace fairstream
