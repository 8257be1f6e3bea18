#include "fairstream/engine.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace fairstream {

namespace {

// Nearest-rank percentile over a latency histogram.
std::int64_t percentile(const std::map<std::int64_t, std::uint64_t>& histogram, std::uint64_t total,
                        double q) {
  if (total == 0) return 0;
  auto rank = static_cast<std::uint64_t>(std::ceil(q * static_cast<double>(total)));
  rank = std::clamp<std::uint64_t>(rank, 1, total);
  std::uint64_t seen = 0;
  for (const auto& [latency, count] : histogram) {
    seen += count;
    if (seen >= rank) return latency;
  }
  return histogram.rbegin()->first;
}

}  // namespace

const char* to_string(ReorderScope scope) noexcept {
  return scope == ReorderScope::in_window ? "in_window" : "with_landmarks";
}

Engine::Engine(FairnessConstraint constraint, WindowSpec spec, EngineOptions options)
    : constraint_(std::move(constraint)),
      spec_(spec),
      rules_(BlockRules::make(constraint_, spec_)),
      options_(options) {
  buffer_.reserve(spec_.window_size + spec_.landmark_size + 1);
}

std::span<const Item> Engine::window() const noexcept {
  if (phase_ == Phase::warming || phase_ == Phase::draining) return {};
  return {buffer_.data() + start_, spec_.window_size};
}

std::vector<EngineEvent> Engine::process_item(const Item& item) {
  std::vector<EngineEvent> out;
  process_item(item, out);
  return out;
}

void Engine::process_item(const Item& item, std::vector<EngineEvent>& out) {
  if (phase_ == Phase::draining) throw Error("engine already finalized");
  if (item.value >= rules_.cardinality()) {
    throw SchemaError("value id " + std::to_string(item.value) + " outside schema");
  }
  if (last_seq_ && item.seq <= *last_seq_) {
    throw SequenceError("seq " + std::to_string(item.seq) + " does not follow " +
                        std::to_string(*last_seq_));
  }
  last_seq_ = item.seq;
  const auto now = Clock::now();
  if (!first_arrival_) first_arrival_ = now;

  buffer_.push_back(item);
  switch (phase_) {
    case Phase::warming:
      if (buffer_.size() - start_ == spec_.window_size) {
        rebuild_sketch();
        phase_ = Phase::monitoring;
        evaluate(now, out);
      }
      break;
    case Phase::monitoring:
      advance_one(false, now, out);
      break;
    case Phase::collecting_landmarks:
      landmark_arrivals_.push_back(now);
      if (landmark_arrivals_.size() == spec_.landmark_size) apply_landmarks(out);
      break;
    case Phase::draining:
      break;
  }
  maybe_snapshot(out);
}

void Engine::advance_one(bool replay, Clock::time_point arrival, std::vector<EngineEvent>& out) {
  ++start_;
  const Item& incoming = buffer_[start_ + spec_.window_size - 1];
  if (replay) {
    sketch_.slide_unordered(incoming);
  } else {
    sketch_.slide(incoming);
  }
  if (++since_verdict_ < spec_.slide) return;
  since_verdict_ = 0;
  if (replay) {
    ++window_id_;
    emit_verdict(window_id_, monitor_bfair(sketch_, rules_), arrival, false, out);
  } else {
    evaluate(arrival, out);
    compact();
  }
}

void Engine::evaluate(Clock::time_point arrival, std::vector<EngineEvent>& out) {
  ++window_id_;
  const Verdict verdict = monitor_bfair(sketch_, rules_);
  emit_verdict(window_id_, verdict, arrival, false, out);
  if (verdict.fair) return;

  const CountVector totals = sketch_.window_counts();
  if (spec_.landmark_size == 0 || feasible_within_window(totals, rules_)) {
    reorder_in_window(out);
    // The reordered window keeps its id; latency covers the reorder.
    emit_verdict(window_id_, monitor_bfair(sketch_, rules_), arrival, true, out);
    return;
  }
  phase_ = Phase::collecting_landmarks;
  paused_arrival_ = arrival;
  landmark_arrivals_.clear();
}

void Engine::emit_verdict(std::uint64_t id, const Verdict& verdict, Clock::time_point arrival,
                          bool same_window, std::vector<EngineEvent>& out) {
  const auto latency =
      std::chrono::duration_cast<std::chrono::microseconds>(Clock::now() - arrival).count();
  ++latency_histogram_[latency];
  ++latency_samples_;
  if (same_window && current_fair_) --fair_windows_;
  if (verdict.fair) ++fair_windows_;
  current_fair_ = verdict.fair;
  if (observer_) observer_(id, window(), verdict);
  out.push_back(WindowVerdict{id, verdict, latency});
}

void Engine::reorder_in_window(std::vector<EngineEvent>& out) {
  std::span<Item> scope(buffer_.data() + start_, spec_.window_size);
  const Count before = count_fair_blocks(scope, rules_);
  ReorderResult result = bfair_reorder(scope, rules_);
  std::copy(result.stream.begin(), result.stream.end(), scope.begin());

  ++reorders_;
  scope_blocks_ += static_cast<Count>(scope.size() - rules_.block_size + 1);
  scope_fair_before_ += before;
  scope_fair_after_ += result.fair_block_count;
  out.push_back(ReorderApplied{window_id_, ReorderScope::in_window, result.primary_combo,
                               result.secondary_combo, before, result.fair_block_count, 0});
  if (result.changed) rebuild_sketch();
}

void Engine::apply_landmarks(std::vector<EngineEvent>& out) {
  const std::size_t collected = buffer_.size() - start_ - spec_.window_size;
  std::span<Item> scope(buffer_.data() + start_, spec_.window_size + collected);
  const Count before = count_fair_blocks(scope, rules_);
  ReorderResult result = bfair_reorder(scope, rules_);
  std::copy(result.stream.begin(), result.stream.end(), scope.begin());

  ++reorders_;
  scope_blocks_ += static_cast<Count>(scope.size() - rules_.block_size + 1);
  scope_fair_before_ += before;
  scope_fair_after_ += result.fair_block_count;
  out.push_back(ReorderApplied{window_id_, ReorderScope::with_landmarks, result.primary_combo,
                               result.secondary_combo, before, result.fair_block_count,
                               spec_.landmark_size - collected});

  rebuild_sketch();
  phase_ = Phase::monitoring;
  emit_verdict(window_id_, monitor_bfair(sketch_, rules_), paused_arrival_, true, out);
  // The slid windows over the landmarks are part of the reorder scope and
  // are reported as they stand; they do not trigger another reorder.
  for (std::size_t j = 0; j < collected; ++j) advance_one(true, landmark_arrivals_[j], out);
  landmark_arrivals_.clear();
  compact();
}

void Engine::rebuild_sketch() {
  sketch_ = ForwardSketch::build(std::span<const Item>(buffer_.data() + start_, spec_.window_size),
                                 rules_.cardinality());
  ++rebuilds_;
}

void Engine::compact() {
  if (start_ < std::max<std::size_t>(spec_.window_size, 1024)) return;
  const auto cut = static_cast<std::ptrdiff_t>(start_);
  if (options_.record_output) emitted_.insert(emitted_.end(), buffer_.begin(), buffer_.begin() + cut);
  buffer_.erase(buffer_.begin(), buffer_.begin() + cut);
  start_ = 0;
}

void Engine::maybe_snapshot(std::vector<EngineEvent>& out) {
  if (options_.metrics_every == 0) return;
  const std::uint64_t due = window_id_ / options_.metrics_every;
  if (due > snapshots_) {
    snapshots_ = due;
    out.push_back(metrics());
  }
}

std::vector<EngineEvent> Engine::finalize() {
  std::vector<EngineEvent> out;
  finalize(out);
  return out;
}

void Engine::finalize(std::vector<EngineEvent>& out) {
  if (phase_ == Phase::draining) return;
  if (phase_ == Phase::collecting_landmarks) apply_landmarks(out);
  MetricsSnapshot snapshot = metrics();
  if (options_.record_output) emitted_.insert(emitted_.end(), buffer_.begin(), buffer_.end());
  buffer_.clear();
  start_ = 0;
  phase_ = Phase::draining;
  out.push_back(snapshot);
}

MetricsSnapshot Engine::metrics() const {
  MetricsSnapshot m;
  m.windows = window_id_;
  m.fair_pct = window_id_ == 0 ? 0.0
                               : 100.0 * static_cast<double>(fair_windows_) /
                                     static_cast<double>(window_id_);
  if (first_arrival_ && window_id_ > 0) {
    const double secs = std::chrono::duration<double>(Clock::now() - *first_arrival_).count();
    m.throughput_wps = secs > 0.0 ? static_cast<double>(window_id_) / secs : 0.0;
  }
  m.p50_us = percentile(latency_histogram_, latency_samples_, 0.5);
  m.p90_us = percentile(latency_histogram_, latency_samples_, 0.9);
  m.reorders = reorders_;
  if (scope_blocks_ > 0) {
    m.fair_block_pct_before =
        100.0 * static_cast<double>(scope_fair_before_) / static_cast<double>(scope_blocks_);
    m.fair_block_pct_after =
        100.0 * static_cast<double>(scope_fair_after_) / static_cast<double>(scope_blocks_);
  }
  m.warmed = rebuilds_ > 0;
  return m;
}

}  // namespace fairstream
