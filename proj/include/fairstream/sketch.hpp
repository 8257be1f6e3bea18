#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fairstream/core.hpp"

namespace fairstream {

/// Forward sketch over a count-based window.
///
/// Entry i (1-based, window relative) holds the cumulative counts of the first
/// l-1 schema values over the items seen since the last rebuild, up to and
/// including window position i. The l-th value is never stored; it is
/// inferred from the position.
///
/// Sliding is a ring-buffer head increment: the evicted entry becomes the
/// base (the cumulative counts of everything that already left the window),
/// and every query subtracts it. Entries are therefore absolute, matching
/// what a physically shifted array would hold, while block 1 stays queryable.
class ForwardSketch {
 public:
  ForwardSketch() = default;

  static ForwardSketch build(std::span<const Item> window, std::size_t cardinality);

  /// Evicts the oldest item and appends `incoming`. O(l).
  /// `incoming.seq` must exceed every seq the sketch has seen.
  void slide(const Item& incoming);

  /// Same as slide() without the sequencing check; used when replaying a
  /// reordered buffer whose seq ids are permuted.
  void slide_unordered(const Item& incoming);

  /// Exact per-value counts of block `block_index` (1-based).
  CountVector block_counts(std::size_t block_index, std::size_t block_size) const;
  void block_counts(std::size_t block_index, std::size_t block_size, std::span<Count> out) const;

  /// Exact per-value totals of the whole window.
  CountVector window_counts() const;

  /// Raw stored counts at window position i in [1, window_length()].
  std::span<const Count> entry(std::size_t i) const noexcept {
    return {ring_.data() + physical(i) * stored_, stored_};
  }
  /// Cumulative stored counts of items evicted since the last rebuild.
  std::span<const Count> base() const noexcept { return {base_.data(), stored_}; }

  std::size_t window_length() const noexcept { return window_len_; }
  std::size_t cardinality() const noexcept { return stored_ + 1; }
  std::uint64_t slides() const noexcept { return slides_; }
  std::uint64_t last_seq() const noexcept { return last_seq_; }

 private:
  std::size_t physical(std::size_t i) const noexcept {
    std::size_t p = head_ + i - 1;
    return p >= window_len_ ? p - window_len_ : p;
  }

  std::size_t window_len_ = 0;
  std::size_t stored_ = 0;
  std::size_t head_ = 0;
  std::vector<Count> ring_;
  std::vector<Count> base_;
  std::uint64_t last_seq_ = 0;
  std::uint64_t slides_ = 0;
};

}  // namespace fairstream
