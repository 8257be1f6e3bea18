#include "fairstream/reorder.hpp"

#include <algorithm>
#include <limits>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fairstream {

namespace {

constexpr Count kUnbounded = std::numeric_limits<Count>::max();
// Below this many windows a single thread is faster than forking a team.
constexpr std::size_t kParallelWindowThreshold = 1 << 15;
constexpr std::size_t kChunkWindows = 1 << 13;

using Pattern = std::vector<ValueId>;

// Counts fair windows whose start lies in [first, last).
Count count_fair_range(std::span<const Item> stream, const BlockRules& rules, std::size_t first,
                       std::size_t last) {
  const std::size_t s = rules.block_size;
  const auto& ranges = rules.ranges;
  std::vector<Count> counts(ranges.size(), 0);
  for (std::size_t i = first; i < first + s; ++i) ++counts[stream[i].value];

  std::size_t out_of_range = 0;
  for (std::size_t p = 0; p < ranges.size(); ++p) out_of_range += !ranges[p].contains(counts[p]);

  auto bump = [&](ValueId v, Count delta) {
    const bool was = ranges[v].contains(counts[v]);
    counts[v] += delta;
    const bool now = ranges[v].contains(counts[v]);
    if (was && !now) ++out_of_range;
    if (!was && now) --out_of_range;
  };

  Count fair = 0;
  for (std::size_t i = first;; ++i) {
    fair += out_of_range == 0;
    if (i + 1 == last) break;
    bump(stream[i].value, -1);
    bump(stream[i + s].value, +1);
  }
  return fair;
}

void check_stream(std::span<const Item> stream, const BlockRules& rules) {
  if (rules.block_size == 0 || stream.size() < rules.block_size) {
    throw DomainError("stream of " + std::to_string(stream.size()) +
                      " items is shorter than block size " + std::to_string(rules.block_size));
  }
  for (const auto& item : stream) {
    if (item.value >= rules.cardinality()) {
      throw SchemaError("value id " + std::to_string(item.value) + " outside schema");
    }
  }
}

Count count_fair(std::span<const Item> stream, const BlockRules& rules, bool parallel) {
  check_stream(stream, rules);
  const std::size_t windows = stream.size() - rules.block_size + 1;
  if (!parallel || windows < kParallelWindowThreshold) {
    return count_fair_range(stream, rules, 0, windows);
  }
  const auto chunks = static_cast<std::int64_t>((windows + kChunkWindows - 1) / kChunkWindows);
  Count total = 0;
#pragma omp parallel for schedule(static) reduction(+ : total)
  for (std::int64_t c = 0; c < chunks; ++c) {
    const std::size_t first = static_cast<std::size_t>(c) * kChunkWindows;
    const std::size_t last = std::min(windows, first + kChunkWindows);
    total += count_fair_range(stream, rules, first, last);
  }
  return total;
}

void append_counts(Pattern& out, std::span<const Count> counts) {
  for (std::size_t p = 0; p < counts.size(); ++p) {
    out.insert(out.end(), static_cast<std::size_t>(counts[p]), static_cast<ValueId>(p));
  }
}

CountVector subtract(std::span<const Count> a, std::span<const Count> b, Count times = 1) {
  CountVector out(a.begin(), a.end());
  for (std::size_t p = 0; p < out.size(); ++p) out[p] -= times * b[p];
  return out;
}

// Turns a block pattern with composition `from` into one with composition
// `to` by overwriting single positions. Both compositions lie in the same
// ranges, so they differ by at most one per value; each value in surplus
// gives up its last occurrence and the freed positions receive the values in
// deficit, in schema order. Every window straddling a block with the old
// pattern and a block with the new one stays fair.
Pattern substitute(const Pattern& pattern, std::span<const Count> from, std::span<const Count> to) {
  std::vector<std::size_t> positions;
  std::vector<ValueId> incoming;
  for (std::size_t p = 0; p < from.size(); ++p) {
    for (Count d = from[p] - to[p]; d > 0; --d) {
      // the d-th occurrence from the end
      Count seen = 0;
      for (std::size_t i = pattern.size(); i-- > 0;) {
        if (pattern[i] == p && ++seen == d) {
          positions.push_back(i);
          break;
        }
      }
    }
    for (Count d = to[p] - from[p]; d > 0; --d) incoming.push_back(static_cast<ValueId>(p));
  }
  std::sort(positions.begin(), positions.end());
  Pattern out = pattern;
  for (std::size_t i = 0; i < positions.size() && i < incoming.size(); ++i) {
    out[positions[i]] = incoming[i];
  }
  return out;
}

// Fills a value sequence with the input items, taking each value's items in
// input order.
std::vector<Item> assemble(std::span<const Item> items, const Pattern& values,
                           std::size_t cardinality) {
  std::vector<std::vector<std::size_t>> by_value(cardinality);
  for (std::size_t i = 0; i < items.size(); ++i) by_value[items[i].value].push_back(i);
  std::vector<std::size_t> next(cardinality, 0);
  std::vector<Item> out;
  out.reserve(items.size());
  for (ValueId v : values) out.push_back(items[by_value[v][next[v]++]]);
  return out;
}

ReorderResult unchanged_result(std::span<const Item> items, const BlockRules& rules,
                               const CountCombination& combo, Count fair) {
  ReorderResult r;
  r.stream.assign(items.begin(), items.end());
  r.fair_block_count = fair;
  r.primary_combo = combo;
  r.changed = false;
  r.strategy = ReorderStrategy::unchanged;
  r.plan.leftovers = tally(items, rules.cardinality());
  return r;
}

void finish(ReorderResult& r, std::span<const Item> items, const Pattern& values,
            const BlockRules& rules, bool parallel) {
  r.stream = assemble(items, values, rules.cardinality());
  r.fair_block_count = count_fair(r.stream, rules, parallel);
  r.changed = !std::equal(r.stream.begin(), r.stream.end(), items.begin(), items.end());
}

ReorderResult max_reorder_impl(std::span<const Item> items, const CountCombination& combo,
                               const std::vector<CountCombination>& all_combos,
                               const BlockRules& rules, bool parallel) {
  const std::size_t l = rules.cardinality();
  if (combo.size() != l) {
    throw ValidationError("combination has " + std::to_string(combo.size()) +
                          " entries, schema has " + std::to_string(l));
  }
  check_stream(items, rules);
  const auto n = static_cast<Count>(items.size());
  const auto s = static_cast<Count>(rules.block_size);
  const CountVector totals = tally(items, l);

  const Count ibc = isomorphic_block_count(totals, combo);
  if (ibc < 1) return unchanged_result(items, rules, combo, count_fair(items, rules, parallel));

  ReorderResult r;
  r.primary_combo = combo;
  r.plan.ibc = ibc;

  if (ibc * s == n) {
    Pattern pattern;
    append_counts(pattern, combo);
    Pattern values;
    for (Count b = 0; b < ibc; ++b) values.insert(values.end(), pattern.begin(), pattern.end());
    r.strategy = ReorderStrategy::isomorphic;
    r.plan.patterns = {pattern};
    r.plan.ep.assign(l, 0);
    r.plan.leftovers.assign(l, 0);
    finish(r, items, values, rules, parallel);
    return r;
  }

  const CountVector remainder = subtract(totals, combo, ibc);

  // Multi-case: the remainder completes further blocks under another
  // combination. Both patterns open with EP_R so that the final partial
  // block extends the secondary blocks.
  std::optional<ReorderResult> best_multi;
  for (const auto& secondary : all_combos) {
    if (secondary == combo) continue;
    const Count ibc_r = isomorphic_block_count(remainder, secondary);
    if (ibc_r < 1) continue;
    const auto ep_r = extended_prefix(remainder, secondary, ibc_r);

    CountVector tail_share = subtract(secondary, ep_r.ep);
    CountVector surplus(l, 0);
    for (std::size_t p = 0; p < l; ++p) {
      if (secondary[p] > combo[p] && tail_share[p] > 0) surplus[p] = 1;
    }
    Pattern secondary_pattern;
    append_counts(secondary_pattern, ep_r.ep);
    append_counts(secondary_pattern, subtract(tail_share, surplus));
    append_counts(secondary_pattern, surplus);
    Pattern primary_pattern = substitute(secondary_pattern, secondary, combo);

    CountVector leftovers = subtract(subtract(remainder, secondary, ibc_r), ep_r.ep);
    Pattern values;
    for (Count b = 0; b < ibc; ++b) {
      values.insert(values.end(), primary_pattern.begin(), primary_pattern.end());
    }
    for (Count b = 0; b < ibc_r; ++b) {
      values.insert(values.end(), secondary_pattern.begin(), secondary_pattern.end());
    }
    append_counts(values, ep_r.ep);
    append_counts(values, leftovers);

    ReorderResult candidate;
    candidate.primary_combo = combo;
    candidate.secondary_combo = secondary;
    candidate.strategy = ReorderStrategy::multi_case;
    candidate.plan.patterns = {primary_pattern, secondary_pattern};
    candidate.plan.ibc = ibc;
    candidate.plan.ibc_r = ibc_r;
    candidate.plan.ep = ep_r.ep;
    candidate.plan.epl = ep_r.epl;
    candidate.plan.leftovers = std::move(leftovers);
    finish(candidate, items, values, rules, parallel);
    if (!best_multi || candidate.fair_block_count > best_multi->fair_block_count) {
      best_multi = std::move(candidate);
    }
  }
  if (best_multi) return std::move(*best_multi);

  // Single case: ibc copies of a pattern that opens with the extended
  // prefix, then the prefix itself, then leftovers.
  const auto ep = extended_prefix(totals, combo, ibc);
  Pattern pattern;
  append_counts(pattern, ep.ep);
  append_counts(pattern, subtract(combo, ep.ep));
  Pattern values;
  for (Count b = 0; b < ibc; ++b) values.insert(values.end(), pattern.begin(), pattern.end());
  append_counts(values, ep.ep);
  CountVector leftovers = subtract(remainder, ep.ep);
  append_counts(values, leftovers);

  r.strategy = ReorderStrategy::extended_isomorphic;
  r.plan.patterns = {pattern};
  r.plan.ep = ep.ep;
  r.plan.epl = ep.epl;
  r.plan.leftovers = std::move(leftovers);
  finish(r, items, values, rules, parallel);
  return r;
}

// m disjoint blocks of valid combinations fit into `totals` iff every value
// covers m*lo and the capped totals still fill m*s slots.
bool blocks_fit(std::span<const Count> totals, const BlockRules& rules, Count m) {
  Count capped = 0;
  for (std::size_t p = 0; p < totals.size(); ++p) {
    if (totals[p] < m * rules.ranges[p].lo) return false;
    capped += std::min(totals[p], m * rules.ranges[p].hi);
  }
  return capped >= m * static_cast<Count>(rules.block_size);
}

std::optional<ReorderResult> mixed_run_impl(std::span<const Item> items,
                                            const std::vector<CountCombination>& all_combos,
                                            const BlockRules& rules, bool parallel) {
  check_stream(items, rules);
  const std::size_t l = rules.cardinality();
  const auto s = static_cast<Count>(rules.block_size);
  const CountVector totals = tally(items, l);

  Count m = static_cast<Count>(items.size()) / s;
  while (m > 0 && !blocks_fit(totals, rules, m)) --m;
  if (m == 0 || all_combos.empty()) return std::nullopt;

  Count slack = -m * s;
  for (std::size_t p = 0; p < l; ++p) slack += std::min(totals[p], m * rules.ranges[p].hi);

  // Partial trailing block: a prefix of some valid combination w that can be
  // taken out without breaking the m blocks.
  CountVector tail(l, 0);
  std::size_t tail_combo = 0;
  Count tail_len = -1;
  for (std::size_t c = 0; c < all_combos.size(); ++c) {
    const auto& w = all_combos[c];
    CountVector t(l, 0);
    Count budget = slack;
    for (std::size_t p = 0; p < l; ++p) {
      const Count cap = std::min(w[p], totals[p] - m * rules.ranges[p].lo);
      const Count free = std::min(cap, std::max<Count>(0, totals[p] - m * rules.ranges[p].hi));
      t[p] = free;
    }
    for (std::size_t p = 0; p < l; ++p) {
      const Count cap = std::min(w[p], totals[p] - m * rules.ranges[p].lo);
      const Count extra = std::min(budget, cap - t[p]);
      t[p] += extra;
      budget -= extra;
    }
    Count len = 0;
    for (Count x : t) len += x;
    if (len > tail_len) {
      tail_len = len;
      tail = std::move(t);
      tail_combo = c;
    }
  }

  // Block compositions: as many items as the upper bounds allow, trimmed back
  // to m*s from the end of the schema.
  CountVector used(l, 0);
  Count excess = -m * s;
  for (std::size_t p = 0; p < l; ++p) {
    used[p] = std::min(totals[p] - tail[p], m * rules.ranges[p].hi);
    excess += used[p];
  }
  for (std::size_t p = l; p-- > 0 && excess > 0;) {
    const Count cut = std::min(excess, used[p] - m * rules.ranges[p].lo);
    used[p] -= cut;
    excess -= cut;
  }

  // Spread the above-minimum items round robin; no value exceeds m extras,
  // so no block receives two extras of the same value.
  std::vector<CountCombination> blocks(static_cast<std::size_t>(m), CountCombination(l, 0));
  for (auto& b : blocks) {
    for (std::size_t p = 0; p < l; ++p) b[p] = rules.ranges[p].lo;
  }
  std::size_t slot = 0;
  for (std::size_t p = 0; p < l; ++p) {
    for (Count e = used[p] - m * rules.ranges[p].lo; e > 0; --e) {
      ++blocks[slot % blocks.size()][p];
      ++slot;
    }
  }
  std::stable_sort(blocks.begin(), blocks.end(), std::greater<>());

  const auto& closing = all_combos[tail_combo];
  Pattern next;
  append_counts(next, tail);
  append_counts(next, subtract(closing, tail));
  std::vector<Pattern> patterns(blocks.size());
  const CountCombination* next_combo = &closing;
  for (std::size_t b = blocks.size(); b-- > 0;) {
    patterns[b] = substitute(next, *next_combo, blocks[b]);
    next = patterns[b];
    next_combo = &blocks[b];
  }

  Pattern values;
  for (const auto& p : patterns) values.insert(values.end(), p.begin(), p.end());
  append_counts(values, tail);
  CountVector leftovers = subtract(subtract(totals, used), tail);
  append_counts(values, leftovers);

  ReorderResult r;
  r.strategy = ReorderStrategy::mixed_run;
  r.primary_combo = blocks.front();
  for (const auto& b : blocks) {
    if (b != blocks.front()) {
      r.secondary_combo = b;
      break;
    }
  }
  for (const auto& p : patterns) {
    if (std::find(r.plan.patterns.begin(), r.plan.patterns.end(), p) == r.plan.patterns.end()) {
      r.plan.patterns.push_back(p);
    }
  }
  r.plan.ibc = m;
  r.plan.ep = tail;
  r.plan.epl = tail_len;
  r.plan.leftovers = std::move(leftovers);
  finish(r, items, values, rules, parallel);
  return r;
}

Count predicted_mixed_run(std::span<const Item> items, const std::vector<CountCombination>& combos,
                          const BlockRules& rules) {
  const CountVector totals = tally(items, rules.cardinality());
  const auto s = static_cast<Count>(rules.block_size);
  Count m = static_cast<Count>(items.size()) / s;
  while (m > 0 && !blocks_fit(totals, rules, m)) --m;
  if (m == 0 || combos.empty()) return 0;
  Count slack = -m * s;
  for (std::size_t p = 0; p < totals.size(); ++p) {
    slack += std::min(totals[p], m * rules.ranges[p].hi);
  }
  Count best = 0;
  for (const auto& w : combos) {
    Count free = 0, extra = 0;
    for (std::size_t p = 0; p < totals.size(); ++p) {
      const Count cap = std::min(w[p], totals[p] - m * rules.ranges[p].lo);
      const Count f = std::min(cap, std::max<Count>(0, totals[p] - m * rules.ranges[p].hi));
      free += f;
      extra += cap - f;
    }
    best = std::max(best, free + std::min(slack, extra));
  }
  return (m - 1) * s + best + 1;
}

ReorderResult bfair_reorder_impl(std::span<const Item> items, const BlockRules& rules,
                                 bool parallel) {
  check_stream(items, rules);
  const auto combos = valid_combinations(rules);
  const Count input_fair = count_fair(items, rules, parallel);
  if (combos.empty()) return unchanged_result(items, rules, {}, input_fair);

  std::vector<ReorderResult> results(combos.size());
  const auto count = static_cast<std::int64_t>(combos.size());
  const bool fork = parallel && items.size() * combos.size() >= kParallelWindowThreshold;
#pragma omp parallel for schedule(dynamic) if (fork)
  for (std::int64_t c = 0; c < count; ++c) {
    // Inner kernels stay serial; the combination loop owns the team.
    results[static_cast<std::size_t>(c)] =
        max_reorder_impl(items, combos[static_cast<std::size_t>(c)], combos, rules, false);
  }

  std::size_t best = 0;
  for (std::size_t c = 1; c < results.size(); ++c) {
    if (results[c].fair_block_count > results[best].fair_block_count) best = c;
  }
  ReorderResult result = std::move(results[best]);

  if (predicted_mixed_run(items, combos, rules) > result.fair_block_count) {
    if (auto mixed = mixed_run_impl(items, combos, rules, parallel);
        mixed && mixed->fair_block_count > result.fair_block_count) {
      result = std::move(*mixed);
    }
  }

  bool any_block = result.strategy != ReorderStrategy::unchanged;
  if (!any_block || result.fair_block_count < input_fair) {
    return unchanged_result(items, rules, result.primary_combo, input_fair);
  }
  return result;
}

}  // namespace

const char* to_string(ReorderStrategy strategy) noexcept {
  switch (strategy) {
    case ReorderStrategy::unchanged: return "unchanged";
    case ReorderStrategy::isomorphic: return "isomorphic";
    case ReorderStrategy::extended_isomorphic: return "extended_isomorphic";
    case ReorderStrategy::multi_case: return "multi_case";
    case ReorderStrategy::mixed_run: return "mixed_run";
  }
  return "unknown";
}

Count count_fair_blocks(std::span<const Item> stream, const BlockRules& rules) {
  return count_fair(stream, rules, true);
}

Count count_fair_blocks(std::span<const Item> stream, const FairnessConstraint& constraint,
                        const WindowSpec& spec) {
  return count_fair_blocks(stream, BlockRules::make(constraint, spec));
}

Count isomorphic_block_count(std::span<const Count> totals, std::span<const Count> combo) {
  Count ibc = kUnbounded;
  for (std::size_t p = 0; p < combo.size(); ++p) {
    if (combo[p] == 0) continue;
    ibc = std::min(ibc, totals[p] / combo[p]);
  }
  return ibc == kUnbounded ? 0 : ibc;
}

ExtendedPrefix extended_prefix(std::span<const Count> totals, std::span<const Count> combo,
                               Count ibc) {
  ExtendedPrefix out;
  out.ep.resize(combo.size());
  for (std::size_t p = 0; p < combo.size(); ++p) {
    out.ep[p] = std::max<Count>(0, std::min(combo[p], totals[p] - ibc * combo[p]));
    out.epl += out.ep[p];
  }
  return out;
}

ReorderResult max_reorder(std::span<const Item> items, const CountCombination& combo,
                          const std::vector<CountCombination>& all_combos,
                          const BlockRules& rules) {
  return max_reorder_impl(items, combo, all_combos, rules, true);
}

std::optional<ReorderResult> mixed_run_reorder(std::span<const Item> items,
                                               const std::vector<CountCombination>& all_combos,
                                               const BlockRules& rules) {
  return mixed_run_impl(items, all_combos, rules, true);
}

ReorderResult bfair_reorder(std::span<const Item> items, const BlockRules& rules) {
  return bfair_reorder_impl(items, rules, true);
}

ReorderResult bfair_reorder(std::span<const Item> items, const FairnessConstraint& constraint,
                            const WindowSpec& spec) {
  return bfair_reorder(items, BlockRules::make(constraint, spec));
}

namespace serial {

Count count_fair_blocks(std::span<const Item> stream, const BlockRules& rules) {
  return count_fair(stream, rules, false);
}

ReorderResult bfair_reorder(std::span<const Item> items, const BlockRules& rules) {
  return bfair_reorder_impl(items, rules, false);
}

}  // namespace serial

}  // namespace fairstream
