#include "fairstream/oracle.hpp"

#include <algorithm>
#include <string>

namespace fairstream::oracle {

namespace {

void check_window(std::span<const Item> window, const BlockRules& rules) {
  if (window.size() != rules.blocks * rules.block_size) {
    throw ValidationError("window of " + std::to_string(window.size()) + " items does not match " +
                          std::to_string(rules.blocks) + " blocks of " +
                          std::to_string(rules.block_size));
  }
}

std::vector<ValueId> sorted_values(std::span<const Item> items, const BlockRules& rules) {
  if (items.size() > kBruteForceLimit) {
    throw DomainError("brute force refuses " + std::to_string(items.size()) + " items (limit " +
                      std::to_string(kBruteForceLimit) + ")");
  }
  if (items.size() < rules.block_size) {
    throw DomainError("stream shorter than block size");
  }
  std::vector<ValueId> values;
  values.reserve(items.size());
  for (const auto& item : items) values.push_back(item.value);
  std::sort(values.begin(), values.end());
  return values;
}

Count best_over_suffix(std::vector<ValueId> values, std::size_t fixed, const BlockRules& rules) {
  Count best = 0;
  do {
    best = std::max(best, naive_fair_blocks(values, rules));
  } while (std::next_permutation(values.begin() + static_cast<std::ptrdiff_t>(fixed), values.end()));
  return best;
}

}  // namespace

Verdict naive_monitor(std::span<const Item> window, const BlockRules& rules) {
  check_window(window, rules);
  const std::size_t s = rules.block_size;
  for (std::size_t b = 0; b < rules.blocks; ++b) {
    const CountVector counts = tally(window.subspan(b * s, s), rules.cardinality());
    for (std::size_t p = 0; p < counts.size(); ++p) {
      if (!rules.ranges[p].contains(counts[p])) {
        return Verdict::fail({b + 1, static_cast<ValueId>(p), counts[p], rules.ranges[p]});
      }
    }
  }
  return Verdict::pass();
}

CountVector naive_prefix_counts(std::span<const Item> items, std::size_t prefix_len,
                                std::size_t cardinality) {
  return tally(items.first(prefix_len), cardinality);
}

Count naive_fair_blocks(std::span<const ValueId> values, const BlockRules& rules) {
  const std::size_t s = rules.block_size;
  if (values.size() < s) throw DomainError("stream shorter than block size");
  Count fair = 0;
  std::vector<Count> counts(rules.cardinality());
  for (std::size_t i = 0; i + s <= values.size(); ++i) {
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t j = i; j < i + s; ++j) ++counts[values[j]];
    fair += rules.fair(counts);
  }
  return fair;
}

Count brute_force_reorder(std::span<const Item> items, const BlockRules& rules) {
  std::vector<ValueId> values = sorted_values(items, rules);
  if (values.size() < 3) return best_over_suffix(values, 0, rules);

  // Split the enumeration by its distinct first two values.
  std::vector<std::vector<ValueId>> heads;
  std::vector<ValueId> distinct = values;
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  for (ValueId x : distinct) {
    for (ValueId y : distinct) {
      std::vector<ValueId> rest = values;
      auto take = [&](ValueId v) {
        auto it = std::find(rest.begin(), rest.end(), v);
        if (it == rest.end()) return false;
        rest.erase(it);
        return true;
      };
      if (!take(x) || !take(y)) continue;
      std::vector<ValueId> head{x, y};
      head.insert(head.end(), rest.begin(), rest.end());
      heads.push_back(std::move(head));
    }
  }

  Count best = 0;
  const auto tasks = static_cast<std::int64_t>(heads.size());
#pragma omp parallel for schedule(dynamic) reduction(max : best)
  for (std::int64_t t = 0; t < tasks; ++t) {
    best = std::max(best, best_over_suffix(heads[static_cast<std::size_t>(t)], 2, rules));
  }
  return best;
}

namespace serial {

Count brute_force_reorder(std::span<const Item> items, const BlockRules& rules) {
  return best_over_suffix(sorted_values(items, rules), 0, rules);
}

}  // namespace serial

BackwardSketch BackwardSketch::build(std::span<const Item> window, std::size_t cardinality) {
  if (cardinality < 2) throw ValidationError("sketch needs a schema of at least two values");
  if (window.empty()) throw DomainError("cannot build a sketch over an empty window");
  BackwardSketch sketch;
  sketch.window_len_ = window.size();
  sketch.stored_ = cardinality - 1;
  const std::size_t stored = sketch.stored_;
  sketch.entries_.assign((window.size() + 1) * stored, 0);
  for (std::size_t i = window.size(); i-- > 0;) {
    const auto v = window[i].value;
    if (v >= cardinality) throw SchemaError("value id " + std::to_string(v) + " outside schema");
    Count* cur = sketch.entries_.data() + i * stored;
    const Count* next = cur + stored;
    std::copy(next, next + stored, cur);
    if (v < stored) ++cur[v];
  }
  return sketch;
}

CountVector BackwardSketch::block_counts(std::size_t block_index, std::size_t block_size) const {
  if (block_size == 0 || block_index == 0 || block_index * block_size > window_len_) {
    throw DomainError("block " + std::to_string(block_index) + " outside window");
  }
  const auto first = entry((block_index - 1) * block_size + 1);
  const auto after = entry(block_index * block_size + 1);
  CountVector out(stored_ + 1, 0);
  Count sum = 0;
  for (std::size_t j = 0; j < stored_; ++j) {
    out[j] = first[j] - after[j];
    sum += out[j];
  }
  out[stored_] = static_cast<Count>(block_size) - sum;
  return out;
}

CountVector BackwardSketch::window_counts() const {
  CountVector out(stored_ + 1, 0);
  const auto first = entry(1);
  Count sum = 0;
  for (std::size_t j = 0; j < stored_; ++j) {
    out[j] = first[j];
    sum += first[j];
  }
  out[stored_] = static_cast<Count>(window_len_) - sum;
  return out;
}

Verdict monitor_backward(const BackwardSketch& sketch, const BlockRules& rules) {
  if (sketch.window_length() != rules.blocks * rules.block_size) {
    throw ValidationError("backward sketch does not match window geometry");
  }
  const std::size_t stored = rules.cardinality() - 1;
  const std::size_t s = rules.block_size;
  for (std::size_t b = 1; b <= rules.blocks; ++b) {
    const auto first = sketch.entry((b - 1) * s + 1);
    const auto after = sketch.entry(b * s + 1);
    Count sum = 0;
    for (std::size_t j = 0; j < stored; ++j) {
      const Count c = first[j] - after[j];
      sum += c;
      if (!rules.ranges[j].contains(c)) {
        return Verdict::fail({b, static_cast<ValueId>(j), c, rules.ranges[j]});
      }
    }
    const Count last = static_cast<Count>(s) - sum;
    if (!rules.ranges[stored].contains(last)) {
      return Verdict::fail({b, static_cast<ValueId>(stored), last, rules.ranges[stored]});
    }
  }
  return Verdict::pass();
}

}  // namespace fairstream::oracle
