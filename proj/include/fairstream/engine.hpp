#pragma once

// The streaming loop: warm up a window, keep a forward sketch in sync with it,
// check every window, and on a violation reorder either the window alone or
// the window together with the next |X| landmark items.

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "fairstream/core.hpp"
#include "fairstream/monitor.hpp"
#include "fairstream/reorder.hpp"
#include "fairstream/sketch.hpp"

namespace fairstream {

enum class Phase { warming, monitoring, collecting_landmarks, draining };
enum class ReorderScope { in_window, with_landmarks };

const char* to_string(ReorderScope scope) noexcept;

struct WindowVerdict {
  std::uint64_t window_id = 0;
  Verdict verdict;
  std::int64_t latency_us = 0;
};

struct ReorderApplied {
  std::uint64_t window_id = 0;
  ReorderScope scope = ReorderScope::in_window;
  CountCombination combo;
  std::optional<CountCombination> secondary_combo;
  Count fair_blocks_before = 0;
  Count fair_blocks_after = 0;
  /// Landmarks that never arrived because the stream ended first.
  std::size_t landmark_shortfall = 0;
};

struct MetricsSnapshot {
  std::uint64_t windows = 0;
  double fair_pct = 0.0;
  double throughput_wps = 0.0;
  std::int64_t p50_us = 0;
  std::int64_t p90_us = 0;
  std::uint64_t reorders = 0;
  /// Fair-block share inside reorder scopes, before and after reordering.
  double fair_block_pct_before = 0.0;
  double fair_block_pct_after = 0.0;
  bool warmed = false;
};

using EngineEvent = std::variant<WindowVerdict, ReorderApplied, MetricsSnapshot>;

struct EngineOptions {
  /// Emit a metrics snapshot every N windows; 0 disables periodic snapshots.
  std::size_t metrics_every = 1000;
  /// Keep the post-reorder output stream for inspection via emitted().
  bool record_output = false;
};

class Engine {
 public:
  using Clock = std::chrono::steady_clock;
  using WindowObserver =
      std::function<void(std::uint64_t window_id, std::span<const Item> window, const Verdict&)>;

  Engine(FairnessConstraint constraint, WindowSpec spec, EngineOptions options = {});

  std::vector<EngineEvent> process_item(const Item& item);
  void process_item(const Item& item, std::vector<EngineEvent>& out);

  std::vector<EngineEvent> finalize();
  void finalize(std::vector<EngineEvent>& out);

  /// Called with the exact window contents behind every emitted verdict.
  void set_window_observer(WindowObserver observer) { observer_ = std::move(observer); }

  Phase phase() const noexcept { return phase_; }
  std::uint64_t rebuilds() const noexcept { return rebuilds_; }
  std::uint64_t windows() const noexcept { return window_id_; }
  const ForwardSketch& sketch() const noexcept { return sketch_; }
  const BlockRules& rules() const noexcept { return rules_; }
  const FairnessConstraint& constraint() const noexcept { return constraint_; }
  const WindowSpec& spec() const noexcept { return spec_; }

  /// Current window; empty while warming.
  std::span<const Item> window() const noexcept;
  /// Items that left the window, in output order (record_output only).
  const std::vector<Item>& emitted() const noexcept { return emitted_; }

  MetricsSnapshot metrics() const;

 private:
  void evaluate(Clock::time_point arrival, std::vector<EngineEvent>& out);
  void emit_verdict(std::uint64_t id, const Verdict& verdict, Clock::time_point arrival,
                    bool same_window, std::vector<EngineEvent>& out);
  void reorder_in_window(std::vector<EngineEvent>& out);
  void apply_landmarks(std::vector<EngineEvent>& out);
  void rebuild_sketch();
  void advance_one(bool replay, Clock::time_point arrival, std::vector<EngineEvent>& out);
  void compact();
  void maybe_snapshot(std::vector<EngineEvent>& out);

  FairnessConstraint constraint_;
  WindowSpec spec_;
  BlockRules rules_;
  EngineOptions options_;
  WindowObserver observer_;

  Phase phase_ = Phase::warming;
  ForwardSketch sketch_;
  // buffer_[start_, start_ + |W|) is the window; landmarks follow it.
  std::vector<Item> buffer_;
  std::size_t start_ = 0;
  std::vector<Item> emitted_;
  std::vector<Clock::time_point> landmark_arrivals_;
  Clock::time_point paused_arrival_{};

  std::optional<std::uint64_t> last_seq_;
  std::uint64_t window_id_ = 0;
  std::size_t since_verdict_ = 0;
  std::uint64_t rebuilds_ = 0;

  // metrics
  std::optional<Clock::time_point> first_arrival_;
  std::map<std::int64_t, std::uint64_t> latency_histogram_;
  std::uint64_t latency_samples_ = 0;
  std::uint64_t fair_windows_ = 0;
  bool current_fair_ = false;
  std::uint64_t reorders_ = 0;
  Count scope_blocks_ = 0;
  Count scope_fair_before_ = 0;
  Count scope_fair_after_ = 0;
  std::uint64_t snapshots_ = 0;
};

}  // namespace fairstream
