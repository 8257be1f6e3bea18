#include "fairstream/core.hpp"

#include <charconv>
#include <cmath>
#include <numeric>

namespace fairstream {

namespace {

constexpr double kRoundingSlack = 1e-9;
constexpr double kSumTolerance = 1e-9;

}  // namespace

AttributeSchema::AttributeSchema(std::vector<std::string> labels) : labels_(std::move(labels)) {
  if (labels_.size() < 2) {
    throw ValidationError("attribute schema needs at least two values");
  }
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i].empty()) throw ValidationError("attribute labels must be non-empty");
    auto [it, inserted] = index_.emplace(labels_[i], static_cast<ValueId>(i));
    if (!inserted) throw ValidationError("duplicate attribute label '" + labels_[i] + "'");
  }
}

const std::string& AttributeSchema::label(ValueId id) const {
  if (id >= labels_.size()) throw SchemaError("value id " + std::to_string(id) + " out of range");
  return labels_[id];
}

ValueId AttributeSchema::id_of(std::string_view label) const {
  auto id = find(label);
  if (!id) throw SchemaError("unknown attribute value '" + std::string(label) + "'");
  return *id;
}

std::optional<ValueId> AttributeSchema::find(std::string_view label) const noexcept {
  auto it = index_.find(label);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void WindowSpec::validate() const {
  if (window_size == 0) throw ValidationError("window size must be positive");
  if (block_size == 0) throw ValidationError("block size must be positive");
  if (slide == 0) throw ValidationError("slide must be positive");
  if (window_size % block_size != 0) {
    throw ValidationError("block size " + std::to_string(block_size) +
                          " does not divide window size " + std::to_string(window_size));
  }
}

WindowSpec WindowSpec::make(std::size_t window_size, std::size_t block_size,
                            std::size_t landmark_size, std::size_t slide) {
  WindowSpec spec{window_size, block_size, slide, landmark_size};
  spec.validate();
  return spec;
}

Proportion Proportion::ratio(std::int64_t numerator, std::int64_t denominator) {
  if (denominator <= 0 || numerator < 0) {
    throw ValidationError("proportion ratio must be non-negative with a positive denominator");
  }
  auto g = std::gcd(numerator, denominator);
  if (g == 0) g = 1;
  Proportion p;
  p.numerator_ = numerator / g;
  p.denominator_ = denominator / g;
  p.value_ = static_cast<double>(p.numerator_) / static_cast<double>(p.denominator_);
  return p;
}

Proportion Proportion::approximate(double value) {
  if (!std::isfinite(value) || value < 0.0) {
    throw ValidationError("proportion must be a finite non-negative number");
  }
  Proportion p;
  p.value_ = value;
  return p;
}

Proportion Proportion::parse(std::string_view text) {
  auto fail = [&] { return ValidationError("malformed proportion '" + std::string(text) + "'"); };
  if (text.empty()) throw fail();

  auto parse_int = [&](std::string_view digits) {
    std::int64_t v = 0;
    if (digits.empty() || digits.front() < '0' || digits.front() > '9') throw fail();
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
    if (ec != std::errc{} || ptr != digits.data() + digits.size() || v < 0) throw fail();
    return v;
  };

  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    return ratio(parse_int(text.substr(0, slash)), parse_int(text.substr(slash + 1)));
  }

  auto dot = text.find('.');
  std::string_view whole = text.substr(0, dot);
  std::string_view frac = dot == std::string_view::npos ? std::string_view{} : text.substr(dot + 1);
  if (whole.empty() && frac.empty()) throw fail();
  // Up to 15 fractional digits stay exact in 64 bits.
  if (frac.size() > 15) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size()) throw fail();
    return approximate(v);
  }
  std::int64_t denominator = 1;
  for (std::size_t i = 0; i < frac.size(); ++i) denominator *= 10;
  std::int64_t w = whole.empty() ? 0 : parse_int(whole);
  std::int64_t f = frac.empty() ? 0 : parse_int(frac);
  return ratio(w * denominator + f, denominator);
}

FairnessConstraint::FairnessConstraint(AttributeSchema schema, std::vector<Proportion> proportions,
                                       double epsilon)
    : schema_(std::move(schema)), proportions_(std::move(proportions)), epsilon_(epsilon) {
  if (schema_.cardinality() < 2) throw ValidationError("constraint needs a schema of at least two values");
  if (proportions_.size() != schema_.cardinality()) {
    throw ValidationError("expected " + std::to_string(schema_.cardinality()) + " proportions, got " +
                          std::to_string(proportions_.size()));
  }
  if (!std::isfinite(epsilon_) || epsilon_ <= 0.0) throw ValidationError("epsilon must be positive");
  double sum = 0.0;
  for (const auto& p : proportions_) {
    if (p.value() > 1.0 + kSumTolerance) throw ValidationError("proportion exceeds 1");
    sum += p.value();
  }
  if (std::abs(sum - 1.0) > kSumTolerance) {
    throw ValidationError("proportions sum to " + std::to_string(sum) + ", expected 1");
  }
}

FairnessConstraint FairnessConstraint::from_map(AttributeSchema schema,
                                                const std::map<std::string, double>& proportions,
                                                double epsilon) {
  std::vector<Proportion> aligned;
  aligned.reserve(schema.cardinality());
  for (const auto& label : schema.labels()) {
    auto it = proportions.find(label);
    if (it == proportions.end()) throw ValidationError("no proportion for value '" + label + "'");
    aligned.push_back(Proportion::approximate(it->second));
  }
  if (proportions.size() != schema.cardinality()) {
    throw ValidationError("proportions name values outside the schema");
  }
  return FairnessConstraint(std::move(schema), std::move(aligned), epsilon);
}

CountRange count_range(const FairnessConstraint& constraint, const WindowSpec& spec, ValueId value) {
  if (value >= constraint.schema().cardinality()) {
    throw SchemaError("value id " + std::to_string(value) + " out of range");
  }
  const auto& f = constraint.proportion(value);
  const auto s = static_cast<Count>(spec.block_size);
  if (f.exact() && constraint.epsilon() == 1.0) {
    __int128 scaled = static_cast<__int128>(f.numerator()) * s;
    auto den = static_cast<__int128>(f.denominator());
    auto lo = static_cast<Count>(scaled / den);
    auto hi = static_cast<Count>((scaled + den - 1) / den);
    return {lo, hi};
  }
  double x = constraint.epsilon() * f.value() * static_cast<double>(s);
  auto lo = static_cast<Count>(std::floor(x + kRoundingSlack));
  auto hi = static_cast<Count>(std::ceil(x - kRoundingSlack));
  if (hi < lo) hi = lo;
  if (lo < 0) lo = 0;
  return {lo, hi};
}

CountRange count_range(const FairnessConstraint& constraint, const WindowSpec& spec,
                       std::string_view label) {
  return count_range(constraint, spec, constraint.schema().id_of(label));
}

BlockRules BlockRules::make(const FairnessConstraint& constraint, const WindowSpec& spec) {
  spec.validate();
  BlockRules rules;
  rules.window_size = spec.window_size;
  rules.block_size = spec.block_size;
  rules.blocks = spec.blocks();
  rules.ranges.reserve(constraint.schema().cardinality());
  for (ValueId p = 0; p < constraint.schema().cardinality(); ++p) {
    rules.ranges.push_back(count_range(constraint, spec, p));
  }
  return rules;
}

std::vector<CountCombination> valid_combinations(const BlockRules& rules) {
  const auto l = rules.ranges.size();
  const auto s = static_cast<Count>(rules.block_size);
  std::vector<CountCombination> out;
  if (l == 0) return out;

  // suffix_lo[i] / suffix_hi[i]: bounds on what values i..l-1 can still contribute.
  std::vector<Count> suffix_lo(l + 1, 0), suffix_hi(l + 1, 0);
  for (std::size_t i = l; i-- > 0;) {
    suffix_lo[i] = suffix_lo[i + 1] + rules.ranges[i].lo;
    suffix_hi[i] = suffix_hi[i + 1] + rules.ranges[i].hi;
  }

  CountCombination current(l, 0);
  auto recurse = [&](auto&& self, std::size_t i, Count remaining) -> void {
    if (i == l) {
      if (remaining == 0) out.push_back(current);
      return;
    }
    for (Count c = rules.ranges[i].lo; c <= rules.ranges[i].hi; ++c) {
      Count rest = remaining - c;
      if (rest < suffix_lo[i + 1] || rest > suffix_hi[i + 1]) continue;
      current[i] = c;
      self(self, i + 1, rest);
    }
  };
  recurse(recurse, 0, s);
  return out;
}

std::vector<CountCombination> valid_combinations(const FairnessConstraint& constraint,
                                                 const WindowSpec& spec) {
  return valid_combinations(BlockRules::make(constraint, spec));
}

CountVector tally(std::span<const Item> items, std::size_t cardinality) {
  CountVector totals(cardinality, 0);
  for (const auto& item : items) {
    if (item.value >= cardinality) {
      throw SchemaError("value id " + std::to_string(item.value) + " outside schema");
    }
    ++totals[item.value];
  }
  return totals;
}

}  // namespace fairstream
