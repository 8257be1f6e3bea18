#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "fairstream/core.hpp"

namespace fairstream {

struct GeneratorParams {
  std::size_t cardinality = 2;
  std::size_t n = 0;
  /// Relative value weights; empty means uniform.
  std::vector<double> weights;
  /// Probability that an item repeats the previous item's value.
  double burstiness = 0.0;
  std::uint64_t seed = 1;
  std::uint64_t first_seq = 1;
};

/// Skewed, optionally bursty synthetic stream with consecutive seq ids.
std::vector<Item> generate_stream(const GeneratorParams& params);

/// n items repeating the block pattern of `combo` (values in schema order).
std::vector<Item> repeat_pattern(const CountCombination& combo, std::size_t n,
                                 std::uint64_t first_seq = 1);

}  // namespace fairstream
