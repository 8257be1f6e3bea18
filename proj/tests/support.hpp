#pragma once

// Fixtures from the worked example and small reference computations that do
// not go through the library's range or counting code.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fairstream/core.hpp"

namespace support {

using fairstream::AttributeSchema;
using fairstream::FairnessConstraint;
using fairstream::Item;
using fairstream::Proportion;
using fairstream::ValueId;

// The 15-item window (s = 5, k = 3) and the five landmark items after it.
inline const std::vector<std::string> kWindow = {"C", "C", "A", "H", "H", "C", "A", "C",
                                                 "H", "H", "A", "A", "C", "H", "H"};
inline const std::vector<std::string> kLandmarks = {"C", "A", "A", "A", "H"};

inline AttributeSchema cah() { return AttributeSchema({"C", "A", "H"}); }

// C 30%, A 30%, H 40%.
inline FairnessConstraint constraint1() {
  return FairnessConstraint(cah(), {Proportion::ratio(3, 10), Proportion::ratio(3, 10),
                                    Proportion::ratio(4, 10)});
}

// C 50%, A 20%, H 30%.
inline FairnessConstraint constraint2() {
  return FairnessConstraint(cah(), {Proportion::ratio(5, 10), Proportion::ratio(2, 10),
                                    Proportion::ratio(3, 10)});
}

inline std::vector<Item> items_of(const std::vector<std::string>& labels,
                                  const AttributeSchema& schema, std::uint64_t first_seq = 1) {
  std::vector<Item> out;
  for (std::size_t i = 0; i < labels.size(); ++i) out.push_back({first_seq + i, schema.id_of(labels[i])});
  return out;
}

inline std::vector<Item> window_and_landmarks() {
  auto labels = kWindow;
  labels.insert(labels.end(), kLandmarks.begin(), kLandmarks.end());
  return items_of(labels, cah());
}

inline std::string letters(const std::vector<Item>& items, const AttributeSchema& schema) {
  std::string out;
  for (const auto& item : items) out += schema.label(item.value);
  return out;
}

// Integer-only count bounds for a proportion num/den in blocks of s.
struct RefRange {
  std::int64_t lo;
  std::int64_t hi;
};

inline RefRange ref_range(std::int64_t num, std::int64_t den, std::int64_t s) {
  const std::int64_t x = num * s;
  return {x / den, (x + den - 1) / den};
}

inline std::vector<RefRange> ref_ranges(const std::vector<std::pair<std::int64_t, std::int64_t>>& f,
                                        std::int64_t s) {
  std::vector<RefRange> out;
  for (auto [num, den] : f) out.push_back(ref_range(num, den, s));
  return out;
}

inline bool ref_fair(const std::vector<ValueId>& values, std::size_t start, std::size_t s,
                     const std::vector<RefRange>& ranges) {
  std::vector<std::int64_t> counts(ranges.size(), 0);
  for (std::size_t j = start; j < start + s; ++j) ++counts[values[j]];
  for (std::size_t p = 0; p < ranges.size(); ++p) {
    if (counts[p] < ranges[p].lo || counts[p] > ranges[p].hi) return false;
  }
  return true;
}

inline std::int64_t ref_fair_windows(const std::vector<ValueId>& values, std::size_t s,
                                     const std::vector<RefRange>& ranges) {
  std::int64_t fair = 0;
  for (std::size_t i = 0; i + s <= values.size(); ++i) fair += ref_fair(values, i, s, ranges);
  return fair;
}

inline std::vector<ValueId> values_of(const std::vector<Item>& items) {
  std::vector<ValueId> out;
  for (const auto& item : items) out.push_back(item.value);
  return out;
}

}  // namespace support
