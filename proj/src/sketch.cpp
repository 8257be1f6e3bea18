#include "fairstream/sketch.hpp"

#include <algorithm>
#include <string>

namespace fairstream {

ForwardSketch ForwardSketch::build(std::span<const Item> window, std::size_t cardinality) {
  if (cardinality < 2) throw ValidationError("sketch needs a schema of at least two values");
  if (window.empty()) throw DomainError("cannot build a sketch over an empty window");

  ForwardSketch sketch;
  sketch.window_len_ = window.size();
  sketch.stored_ = cardinality - 1;
  sketch.ring_.assign(window.size() * sketch.stored_, 0);
  sketch.base_.assign(sketch.stored_, 0);

  const std::size_t stored = sketch.stored_;
  Count* prev = nullptr;
  for (std::size_t i = 0; i < window.size(); ++i) {
    const auto v = window[i].value;
    if (v >= cardinality) {
      throw SchemaError("value id " + std::to_string(v) + " outside schema");
    }
    Count* cur = sketch.ring_.data() + i * stored;
    if (prev) std::copy(prev, prev + stored, cur);
    if (v < stored) ++cur[v];
    prev = cur;
    sketch.last_seq_ = std::max(sketch.last_seq_, window[i].seq);
  }
  return sketch;
}

void ForwardSketch::slide(const Item& incoming) {
  if (incoming.seq <= last_seq_) {
    throw SequenceError("sketch slide out of order: seq " + std::to_string(incoming.seq) +
                        " after " + std::to_string(last_seq_));
  }
  slide_unordered(incoming);
}

void ForwardSketch::slide_unordered(const Item& incoming) {
  if (incoming.value > stored_) {
    throw SchemaError("value id " + std::to_string(incoming.value) + " outside schema");
  }
  Count* oldest = ring_.data() + head_ * stored_;
  const Count* newest = ring_.data() + physical(window_len_) * stored_;
  for (std::size_t j = 0; j < stored_; ++j) {
    const Count last = newest[j];
    base_[j] = oldest[j];
    oldest[j] = last + (incoming.value == j ? 1 : 0);
  }
  head_ = head_ + 1 == window_len_ ? 0 : head_ + 1;
  last_seq_ = std::max(last_seq_, incoming.seq);
  ++slides_;
}

void ForwardSketch::block_counts(std::size_t block_index, std::size_t block_size,
                                 std::span<Count> out) const {
  if (block_size == 0 || block_index == 0 || block_index * block_size > window_len_) {
    throw DomainError("block " + std::to_string(block_index) + " outside window");
  }
  const auto curr = entry(block_index * block_size);
  const auto prev = block_index == 1 ? base() : entry((block_index - 1) * block_size);
  Count sum = 0;
  for (std::size_t j = 0; j < stored_; ++j) {
    out[j] = curr[j] - prev[j];
    sum += out[j];
  }
  out[stored_] = static_cast<Count>(block_size) - sum;
}

CountVector ForwardSketch::block_counts(std::size_t block_index, std::size_t block_size) const {
  CountVector out(stored_ + 1, 0);
  block_counts(block_index, block_size, out);
  return out;
}

CountVector ForwardSketch::window_counts() const {
  CountVector out(stored_ + 1, 0);
  const auto last = entry(window_len_);
  Count sum = 0;
  for (std::size_t j = 0; j < stored_; ++j) {
    out[j] = last[j] - base_[j];
    sum += out[j];
  }
  out[stored_] = static_cast<Count>(window_len_) - sum;
  return out;
}

}  // namespace fairstream
