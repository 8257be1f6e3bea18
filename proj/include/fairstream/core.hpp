#pragma once

// Domain types shared by the sketch, monitor and reorder modules: the
// protected attribute schema, window geometry, proportion constraints and the
// per-block count ranges derived from them.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fairstream/errors.hpp"

namespace fairstream {

using ValueId = std::uint32_t;
using Count = std::int64_t;

/// Per-value counts, index-aligned with AttributeSchema::labels().
using CountVector = std::vector<Count>;

/// Required per-block counts; sums to the block size.
using CountCombination = std::vector<Count>;

struct Item {
  std::uint64_t seq = 0;
  ValueId value = 0;

  friend bool operator==(const Item&, const Item&) = default;
};

class AttributeSchema {
 public:
  AttributeSchema() = default;
  explicit AttributeSchema(std::vector<std::string> labels);

  std::size_t cardinality() const noexcept { return labels_.size(); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  const std::string& label(ValueId id) const;

  ValueId id_of(std::string_view label) const;
  std::optional<ValueId> find(std::string_view label) const noexcept;

  friend bool operator==(const AttributeSchema& a, const AttributeSchema& b) {
    return a.labels_ == b.labels_;
  }

 private:
  std::vector<std::string> labels_;
  std::map<std::string, ValueId, std::less<>> index_;
};

struct WindowSpec {
  std::size_t window_size = 0;
  std::size_t block_size = 0;
  std::size_t slide = 1;
  std::size_t landmark_size = 0;

  /// k, the number of disjoint blocks per window.
  std::size_t blocks() const noexcept { return block_size == 0 ? 0 : window_size / block_size; }

  /// 1-based block index of a 1-based window position.
  std::size_t block_of(std::size_t position) const noexcept {
    return (position + block_size - 1) / block_size;
  }

  void validate() const;

  static WindowSpec make(std::size_t window_size, std::size_t block_size,
                         std::size_t landmark_size = 0, std::size_t slide = 1);
};

/// A proportion f(p). Values given as a ratio (or parsed from decimal text)
/// keep an exact numerator/denominator so that floor/ceil of f(p)*s never
/// depends on binary rounding.
class Proportion {
 public:
  Proportion() = default;

  static Proportion ratio(std::int64_t numerator, std::int64_t denominator);
  static Proportion approximate(double value);
  /// Accepts "0.3", ".3", "3/10" or "1".
  static Proportion parse(std::string_view text);

  double value() const noexcept { return value_; }
  bool exact() const noexcept { return denominator_ != 0; }
  std::int64_t numerator() const noexcept { return numerator_; }
  std::int64_t denominator() const noexcept { return denominator_; }

 private:
  double value_ = 0.0;
  std::int64_t numerator_ = 0;
  std::int64_t denominator_ = 0;
};

class FairnessConstraint {
 public:
  FairnessConstraint() = default;
  /// proportions are index-aligned with the schema.
  FairnessConstraint(AttributeSchema schema, std::vector<Proportion> proportions,
                     double epsilon = 1.0);

  static FairnessConstraint from_map(AttributeSchema schema,
                                     const std::map<std::string, double>& proportions,
                                     double epsilon = 1.0);

  const AttributeSchema& schema() const noexcept { return schema_; }
  const Proportion& proportion(ValueId id) const { return proportions_.at(id); }
  const std::vector<Proportion>& proportions() const noexcept { return proportions_; }
  double epsilon() const noexcept { return epsilon_; }

 private:
  AttributeSchema schema_;
  std::vector<Proportion> proportions_;
  double epsilon_ = 1.0;
};

struct CountRange {
  Count lo = 0;
  Count hi = 0;

  bool contains(Count c) const noexcept { return c >= lo && c <= hi; }
  friend bool operator==(const CountRange&, const CountRange&) = default;
};

CountRange count_range(const FairnessConstraint& constraint, const WindowSpec& spec, ValueId value);
CountRange count_range(const FairnessConstraint& constraint, const WindowSpec& spec,
                       std::string_view label);

/// Window geometry plus the per-value count ranges, precomputed once and
/// shared by every hot-path check.
struct BlockRules {
  std::size_t window_size = 0;
  std::size_t block_size = 0;
  std::size_t blocks = 0;
  std::vector<CountRange> ranges;

  static BlockRules make(const FairnessConstraint& constraint, const WindowSpec& spec);

  std::size_t cardinality() const noexcept { return ranges.size(); }

  bool fair(std::span<const Count> counts) const noexcept {
    for (std::size_t p = 0; p < ranges.size(); ++p) {
      if (!ranges[p].contains(counts[p])) return false;
    }
    return true;
  }
};

/// All count combinations v with v[p] in range(p) and sum(v) == s, in
/// lexicographic order of the schema.
std::vector<CountCombination> valid_combinations(const BlockRules& rules);
std::vector<CountCombination> valid_combinations(const FairnessConstraint& constraint,
                                                 const WindowSpec& spec);

/// Per-value totals of a sequence of items.
CountVector tally(std::span<const Item> items, std::size_t cardinality);

}  // namespace fairstream
