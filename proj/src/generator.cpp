#include "fairstream/generator.hpp"

#include <random>

namespace fairstream {

std::vector<Item> generate_stream(const GeneratorParams& params) {
  if (params.cardinality < 2) throw ValidationError("generator needs at least two values");
  if (params.burstiness < 0.0 || params.burstiness > 1.0) {
    throw ValidationError("burstiness must lie in [0, 1]");
  }
  std::vector<double> weights = params.weights;
  if (weights.empty()) weights.assign(params.cardinality, 1.0);
  if (weights.size() != params.cardinality) {
    throw ValidationError("expected " + std::to_string(params.cardinality) + " weights");
  }
  for (double w : weights) {
    if (!(w >= 0.0)) throw ValidationError("weights must be non-negative");
  }

  std::mt19937_64 rng(params.seed);
  std::discrete_distribution<ValueId> pick(weights.begin(), weights.end());
  std::bernoulli_distribution repeat(params.burstiness);

  std::vector<Item> out;
  out.reserve(params.n);
  for (std::size_t i = 0; i < params.n; ++i) {
    ValueId v = (!out.empty() && repeat(rng)) ? out.back().value : pick(rng);
    out.push_back({params.first_seq + i, v});
  }
  return out;
}

std::vector<Item> repeat_pattern(const CountCombination& combo, std::size_t n,
                                 std::uint64_t first_seq) {
  std::vector<ValueId> pattern;
  for (std::size_t p = 0; p < combo.size(); ++p) {
    pattern.insert(pattern.end(), static_cast<std::size_t>(combo[p]), static_cast<ValueId>(p));
  }
  if (pattern.empty()) throw ValidationError("empty block pattern");
  std::vector<Item> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back({first_seq + i, pattern[i % pattern.size()]});
  return out;
}

}  // namespace fairstream
