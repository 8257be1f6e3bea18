#pragma once

// Ingestion on its own thread, processing on the caller's, joined by a
// bounded queue. A full queue blocks the source; nothing is dropped.

#include <condition_variable>
#include <cstddef>
#include <deque>
#include <functional>
#include <mutex>
#include <optional>

#include "fairstream/engine.hpp"

namespace fairstream {

template <class T>
class BoundedQueue {
 public:
  explicit BoundedQueue(std::size_t capacity) : capacity_(capacity == 0 ? 1 : capacity) {}

  /// Blocks while full. Returns false if the queue was closed.
  bool push(T value) {
    std::unique_lock lock(mutex_);
    not_full_.wait(lock, [&] { return closed_ || items_.size() < capacity_; });
    if (closed_) return false;
    items_.push_back(std::move(value));
    not_empty_.notify_one();
    return true;
  }

  /// Blocks while empty; nullopt once closed and drained.
  std::optional<T> pop() {
    std::unique_lock lock(mutex_);
    not_empty_.wait(lock, [&] { return closed_ || !items_.empty(); });
    if (items_.empty()) return std::nullopt;
    T value = std::move(items_.front());
    items_.pop_front();
    not_full_.notify_one();
    return value;
  }

  void close() {
    std::lock_guard lock(mutex_);
    closed_ = true;
    not_empty_.notify_all();
    not_full_.notify_all();
  }

  std::size_t capacity() const noexcept { return capacity_; }

 private:
  std::size_t capacity_;
  std::deque<T> items_;
  bool closed_ = false;
  std::mutex mutex_;
  std::condition_variable not_empty_;
  std::condition_variable not_full_;
};

/// Returns the next item, or nullopt at end of input.
using ItemSource = std::function<std::optional<Item>()>;
using EventSink = std::function<void(const EngineEvent&)>;

struct PipelineOptions {
  /// Batches in flight between ingestion and processing.
  std::size_t queue_capacity = 64;
  /// Items per batch. Use 1 for live sources so items are not held back.
  std::size_t batch_size = 256;
};

/// Drains `source` through `engine`, finalizes it, and hands every event to
/// `sink` in order. Exceptions from either side are rethrown here after the
/// ingestion thread has stopped. Returns the final metrics snapshot.
MetricsSnapshot run_pipeline(Engine& engine, const ItemSource& source, const EventSink& sink,
                             PipelineOptions options = {});

}  // namespace fairstream
