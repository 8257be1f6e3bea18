#include "fairstream/bench.hpp"

#include <sys/resource.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <sstream>
#include <streambuf>

#include "fairstream/engine.hpp"
#include "fairstream/generator.hpp"
#include "fairstream/io.hpp"
#include "fairstream/monitor.hpp"
#include "fairstream/oracle.hpp"
#include "fairstream/pipeline.hpp"
#include "fairstream/reorder.hpp"
#include "fairstream/sketch.hpp"

namespace fairstream::bench {

namespace {

using Clock = std::chrono::steady_clock;

class NullBuf : public std::streambuf {
 protected:
  int_type overflow(int_type c) override { return traits_type::not_eof(c); }
  std::streamsize xsputn(const char*, std::streamsize n) override { return n; }
};

double p90(std::vector<double> samples) {
  if (samples.empty()) return 0.0;
  auto rank = static_cast<std::size_t>(std::ceil(0.9 * static_cast<double>(samples.size())));
  rank = std::clamp<std::size_t>(rank, 1, samples.size());
  std::nth_element(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(rank - 1),
                   samples.end());
  return samples[rank - 1];
}

// Runs op(i) for i in [0, warmup + ops), timing the last `ops` calls in
// batches of `batch`. Each sample is the per-op average of one batch.
TimingStats measure(std::size_t ops, std::size_t batch, const std::function<void(std::size_t)>& op) {
  if (ops == 0) return {};
  batch = std::max<std::size_t>(1, std::min(batch, ops));
  const std::size_t warmup = ops / 10;
  for (std::size_t i = 0; i < warmup; ++i) op(i);

  std::vector<double> samples;
  samples.reserve(ops / batch + 1);
  const auto start = Clock::now();
  std::size_t i = 0;
  while (i < ops) {
    const std::size_t n = std::min(batch, ops - i);
    const auto t0 = Clock::now();
    for (std::size_t j = 0; j < n; ++j) op(warmup + i + j);
    const auto t1 = Clock::now();
    samples.push_back(std::chrono::duration<double, std::micro>(t1 - t0).count() /
                      static_cast<double>(n));
    i += n;
  }
  const double total_us = std::chrono::duration<double, std::micro>(Clock::now() - start).count();

  TimingStats stats;
  stats.mean_us = total_us / static_cast<double>(ops);
  stats.p90_us = p90(std::move(samples));
  stats.throughput = total_us > 0.0 ? 1e6 * static_cast<double>(ops) / total_us : 0.0;
  return stats;
}

std::vector<Item> random_stream(std::size_t cardinality, std::size_t n, std::uint64_t seed) {
  GeneratorParams g;
  g.cardinality = cardinality;
  g.n = n;
  g.seed = seed;
  return generate_stream(g);
}

// Skewed multiset for reorder runs: weight of value p is p + 1.
std::vector<Item> skewed_stream(std::size_t cardinality, std::size_t n, std::uint64_t seed) {
  GeneratorParams g;
  g.cardinality = cardinality;
  g.n = n;
  g.seed = seed;
  for (std::size_t p = 0; p < cardinality; ++p) g.weights.push_back(static_cast<double>(p + 1));
  return generate_stream(g);
}

BenchRow row(std::string suite, std::size_t window, std::size_t block, std::size_t cardinality,
             std::size_t landmark, const TimingStats& t) {
  return {std::move(suite), window, block, cardinality, landmark, t.mean_us, t.p90_us,
          t.throughput, peak_rss_kb()};
}

void monitor_throughput(const BenchParams& p, BenchReport& report) {
  auto run = [&](std::size_t w, std::size_t s, std::size_t l) {
    const auto spec = WindowSpec::make(w, s, p.landmark_size);
    report.rows.push_back(row("monitor-throughput", w, s, l, p.landmark_size,
                              time_monitor(spec, l, p.iterations)));
  };
  for (std::size_t w : {500, 1000, 2000, 4000, 8000}) run(w, p.block_size, p.cardinality);
  for (std::size_t s : {25, 50, 100, 250}) {
    if (p.window_size % s == 0) run(p.window_size, s, p.cardinality);
  }
  for (std::size_t l : {2, 3, 5, 8}) run(p.window_size, p.block_size, l);
}

void slide_cost(const BenchParams& p, BenchReport& report) {
  for (std::size_t w : {1000, 2000, 4000, 8000}) {
    report.rows.push_back(row("slide-cost", w, p.block_size, p.cardinality, p.landmark_size,
                              time_fsketch_slides(w, p.cardinality, p.iterations, p.seed)));
  }
}

void fsketch_vs_bsketch(const BenchParams& p, BenchReport& report) {
  const std::size_t rebuilds = std::max<std::size_t>(1, p.iterations / 10);
  for (std::size_t w : {250, 500, 1000, 2000, 4000, 8000}) {
    report.rows.push_back(row("fsketch-vs-bsketch:fsketch", w, p.block_size, p.cardinality,
                              p.landmark_size,
                              time_fsketch_slides(w, p.cardinality, p.iterations, p.seed)));
    report.rows.push_back(row("fsketch-vs-bsketch:bsketch", w, p.block_size, p.cardinality,
                              p.landmark_size,
                              time_bsketch_rebuilds(w, p.cardinality, rebuilds, p.seed)));
  }
}

void reorder_runtime(const BenchParams& p, BenchReport& report) {
  const std::size_t reps = std::max<std::size_t>(3, p.iterations / 1000);
  for (std::size_t n : {1100, 2000, 4000, 8000}) {
    // Scope = window plus landmarks; the landmark column carries n - |W|.
    const auto spec = WindowSpec::make(p.window_size, p.block_size, 0);
    const std::size_t landmark = n > p.window_size ? n - p.window_size : 0;
    report.rows.push_back(row("reorder-runtime", p.window_size, p.block_size, p.cardinality,
                              landmark, time_reorder(n, spec, p.cardinality, reps, p.seed, true)));
  }
}

void engine_suite(const BenchParams& p, BenchReport& report) {
  const auto spec = WindowSpec::make(p.window_size, p.block_size, p.landmark_size);
  report.rows.push_back(row("engine", p.window_size, p.block_size, p.cardinality, p.landmark_size,
                            time_end_to_end(spec, p.cardinality, p.iterations)));
}

void parallel_vs_serial(const BenchParams& p, BenchReport& report) {
  const auto spec = WindowSpec::make(p.window_size, p.block_size, 0);
  const std::size_t n = std::max<std::size_t>(p.iterations * 10, 1 << 18);
  for (bool parallel : {true, false}) {
    const std::string mode = parallel ? "parallel" : "serial";
    report.rows.push_back(row("parallel-vs-serial:count_fair_blocks:" + mode, p.window_size,
                              p.block_size, p.cardinality, 0,
                              time_count_fair_blocks(n, spec, p.cardinality, 5, p.seed, parallel)));
    report.rows.push_back(row("parallel-vs-serial:bfair_reorder:" + mode, p.window_size,
                              p.block_size, p.cardinality, p.landmark_size,
                              time_reorder(p.window_size + p.landmark_size, spec, p.cardinality, 20,
                                           p.seed, parallel)));

    // Brute force on a small block so the enumeration stays short.
    const auto small = WindowSpec::make(4, 4, 0);
    const auto constraint = uniform_constraint(3);
    const auto rules = BlockRules::make(constraint, small);
    const auto items = random_stream(3, 10, p.seed);
    TimingStats t = measure(3, 1, [&](std::size_t) {
      parallel ? oracle::brute_force_reorder(items, rules)
               : oracle::serial::brute_force_reorder(items, rules);
    });
    report.rows.push_back(row("parallel-vs-serial:brute_force:" + mode, 4, 4, 3, 6, t));
  }
}

}  // namespace

void BenchReport::write_csv(std::ostream& out) const {
  out << "suite,window,block,cardinality,landmark,mean_us,p90_us,throughput_wps,peak_mem_kb\n";
  for (const auto& r : rows) {
    out << r.suite << ',' << r.window << ',' << r.block << ',' << r.cardinality << ','
        << r.landmark << ',' << r.mean_us << ',' << r.p90_us << ',' << r.throughput_wps << ','
        << r.peak_mem_kb << '\n';
  }
}

std::vector<std::string> suite_names() {
  return {"monitor-throughput", "slide-cost",        "fsketch-vs-bsketch", "reorder-runtime",
          "engine",             "parallel-vs-serial", "all"};
}

BenchReport run_bench(std::string_view suite, const BenchParams& params) {
  WindowSpec::make(params.window_size, params.block_size, params.landmark_size);
  if (params.cardinality < 2) throw ValidationError("cardinality must be at least 2");
  BenchReport report;
  const bool all = suite == "all";
  bool known = all;
  auto maybe = [&](std::string_view name, void (*fn)(const BenchParams&, BenchReport&)) {
    if (all || suite == name) {
      fn(params, report);
      known = true;
    }
  };
  maybe("monitor-throughput", monitor_throughput);
  maybe("slide-cost", slide_cost);
  maybe("fsketch-vs-bsketch", fsketch_vs_bsketch);
  maybe("reorder-runtime", reorder_runtime);
  maybe("engine", engine_suite);
  maybe("parallel-vs-serial", parallel_vs_serial);
  if (!known) throw ValidationError("unknown bench suite '" + std::string(suite) + "'");
  return report;
}

FairnessConstraint uniform_constraint(std::size_t cardinality) {
  std::vector<std::string> labels;
  std::vector<Proportion> proportions;
  for (std::size_t p = 0; p < cardinality; ++p) {
    labels.push_back("v" + std::to_string(p));
    proportions.push_back(Proportion::ratio(1, static_cast<std::int64_t>(cardinality)));
  }
  return FairnessConstraint(AttributeSchema(std::move(labels)), std::move(proportions));
}

std::vector<Item> fair_stream(const FairnessConstraint& constraint, const WindowSpec& spec,
                              std::size_t n) {
  const auto combos = valid_combinations(constraint, spec);
  if (combos.empty()) throw DomainError("constraint admits no fair block");
  return repeat_pattern(combos.front(), n);
}

TimingStats time_fsketch_slides(std::size_t window, std::size_t cardinality, std::size_t slides,
                                std::uint64_t seed) {
  const auto items = random_stream(cardinality, window + slides + slides / 10, seed);
  auto sketch = ForwardSketch::build(std::span(items).first(window), cardinality);
  return measure(slides, 64, [&](std::size_t i) { sketch.slide(items[window + i]); });
}

TimingStats time_bsketch_rebuilds(std::size_t window, std::size_t cardinality, std::size_t slides,
                                  std::uint64_t seed) {
  const auto items = random_stream(cardinality, window + slides + slides / 10, seed);
  Count sink = 0;
  TimingStats t = measure(slides, 1, [&](std::size_t i) {
    // A slide on a backward sketch means rebuilding it over the new window.
    auto sketch = oracle::BackwardSketch::build(std::span(items).subspan(i + 1, window), cardinality);
    sink += sketch.entry(1)[0];
  });
  if (sink < 0) t.mean_us = -1.0;  // keeps the rebuilds observable
  return t;
}

TimingStats time_monitor(const WindowSpec& spec, std::size_t cardinality, std::size_t windows) {
  const auto constraint = uniform_constraint(cardinality);
  const auto rules = BlockRules::make(constraint, spec);
  const auto items = fair_stream(constraint, spec, spec.window_size + windows + windows / 10);
  auto sketch = ForwardSketch::build(std::span(items).first(spec.window_size), cardinality);
  std::size_t unfair = 0;
  TimingStats t = measure(windows, 1, [&](std::size_t i) {
    sketch.slide(items[spec.window_size + i]);
    unfair += !monitor_bfair(sketch, rules).fair;
  });
  if (unfair != 0) throw Error("fair benchmark stream produced an unfair window");
  return t;
}

TimingStats time_end_to_end(const WindowSpec& spec, std::size_t cardinality, std::size_t windows) {
  const auto constraint = uniform_constraint(cardinality);
  const auto items = fair_stream(constraint, spec, spec.window_size - 1 + windows);
  std::stringstream input;
  write_records(input, items, constraint.schema(), RecordFormat::csv);

  NullBuf null_buf;
  std::ostream null_out(&null_buf);
  EventWriter writer(null_out, constraint.schema());
  Engine engine(constraint, spec);
  RecordReader reader(input, constraint.schema());

  const auto start = Clock::now();
  const MetricsSnapshot m = run_pipeline(
      engine, [&] { return reader.next(); }, [&](const EngineEvent& e) { writer.write(e); });
  const double secs = std::chrono::duration<double>(Clock::now() - start).count();

  TimingStats t;
  t.throughput = secs > 0.0 ? static_cast<double>(m.windows) / secs : 0.0;
  t.mean_us = m.windows > 0 ? 1e6 * secs / static_cast<double>(m.windows) : 0.0;
  t.p90_us = static_cast<double>(m.p90_us);
  return t;
}

TimingStats time_reorder(std::size_t n, const WindowSpec& spec, std::size_t cardinality,
                         std::size_t repetitions, std::uint64_t seed, bool parallel) {
  const auto constraint = uniform_constraint(cardinality);
  const auto rules = BlockRules::make(constraint, spec);
  const auto items = skewed_stream(cardinality, n, seed);
  Count sink = 0;
  return measure(repetitions, 1, [&](std::size_t) {
    sink += parallel ? bfair_reorder(items, rules).fair_block_count
                     : serial::bfair_reorder(items, rules).fair_block_count;
  });
}

TimingStats time_count_fair_blocks(std::size_t n, const WindowSpec& spec, std::size_t cardinality,
                                   std::size_t repetitions, std::uint64_t seed, bool parallel) {
  const auto constraint = uniform_constraint(cardinality);
  const auto rules = BlockRules::make(constraint, spec);
  const auto items = random_stream(cardinality, n, seed);
  Count sink = 0;
  return measure(repetitions, 1, [&](std::size_t) {
    sink += parallel ? count_fair_blocks(items, rules) : serial::count_fair_blocks(items, rules);
  });
}

long peak_rss_kb() {
  rusage usage{};
  if (getrusage(RUSAGE_SELF, &usage) != 0) return 0;
  return usage.ru_maxrss;
}

}  // namespace fairstream::bench
