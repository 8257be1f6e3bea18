#pragma once

#include <cstddef>
#include <optional>

#include "fairstream/core.hpp"
#include "fairstream/sketch.hpp"

namespace fairstream {

struct Violation {
  std::size_t block = 0;  // 1-based
  ValueId value = 0;
  Count observed = 0;
  CountRange required;

  friend bool operator==(const Violation&, const Violation&) = default;
};

struct Verdict {
  bool fair = true;
  std::optional<Violation> violation;  // present iff !fair

  static Verdict pass() { return {}; }
  static Verdict fail(Violation v) { return {false, v}; }

  friend bool operator==(const Verdict&, const Verdict&) = default;
};

/// Checks blocks 1..k in order against the count ranges and stops at the
/// first (block, value) pair out of range. Values are checked in schema
/// order, so the reported violation is deterministic. O(k*l) worst case.
Verdict monitor_bfair(const ForwardSketch& sketch, const BlockRules& rules);
Verdict monitor_bfair(const ForwardSketch& sketch, const FairnessConstraint& constraint,
                      const WindowSpec& spec);

/// True iff some permutation of a window with these totals makes all k
/// disjoint blocks fair: every value has at least k*lo and at most k*hi items.
bool feasible_within_window(std::span<const Count> totals, const BlockRules& rules);
bool feasible_within_window(std::span<const Count> totals, const FairnessConstraint& constraint,
                            const WindowSpec& spec);

}  // namespace fairstream
