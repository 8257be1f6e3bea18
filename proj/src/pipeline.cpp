#include "fairstream/pipeline.hpp"

#include <exception>
#include <thread>
#include <vector>

namespace fairstream {

MetricsSnapshot run_pipeline(Engine& engine, const ItemSource& source, const EventSink& sink,
                             PipelineOptions options) {
  BoundedQueue<std::vector<Item>> queue(options.queue_capacity);
  const std::size_t batch_size = options.batch_size == 0 ? 1 : options.batch_size;
  std::exception_ptr ingest_error;

  std::thread ingest([&] {
    try {
      std::vector<Item> batch;
      batch.reserve(batch_size);
      while (auto item = source()) {
        batch.push_back(*item);
        if (batch.size() == batch_size) {
          if (!queue.push(std::move(batch))) return;
          batch = {};
          batch.reserve(batch_size);
        }
      }
      if (!batch.empty()) queue.push(std::move(batch));
    } catch (...) {
      ingest_error = std::current_exception();
    }
    queue.close();
  });

  std::vector<EngineEvent> events;
  auto flush = [&] {
    for (const auto& event : events) sink(event);
    events.clear();
  };

  try {
    while (auto batch = queue.pop()) {
      for (const auto& item : *batch) engine.process_item(item, events);
      flush();
    }
  } catch (...) {
    queue.close();
    ingest.join();
    throw;
  }
  ingest.join();
  // Items consumed before a source failure have been processed; the failure
  // still ends the run.
  if (ingest_error) std::rethrow_exception(ingest_error);

  engine.finalize(events);
  MetricsSnapshot last = std::get<MetricsSnapshot>(events.back());
  flush();
  return last;
}

}  // namespace fairstream
