#include "fairstream/cli.hpp"

#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fairstream/bench.hpp"
#include "fairstream/engine.hpp"
#include "fairstream/generator.hpp"
#include "fairstream/io.hpp"
#include "fairstream/pipeline.hpp"
#include "fairstream/reorder.hpp"
#include "fairstream/sketch.hpp"

namespace fairstream {

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

// Writes to `fallback` for "-", otherwise to a file that must open.
class OutputTarget {
 public:
  OutputTarget(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
    if (path != "-") {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw Error("cannot open output " + path);
      stream_ = file_.get();
    }
  }
  std::ostream& stream() { return *stream_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_;
};

std::vector<Proportion> to_proportions(const std::string& text) {
  std::vector<Proportion> out;
  for (const auto& part : split_list(text)) out.push_back(Proportion::parse(part));
  return out;
}

struct MonitorArgs {
  std::optional<std::string> config;
  ConfigOverrides o;
};

int run_monitor(const MonitorArgs& args, std::ostream& out) {
  const Config config = load_config(args.config, args.o);
  const FairnessConstraint constraint = config.constraint();
  const WindowSpec spec = config.spec();
  log(LogLevel::info, "monitor: window " + std::to_string(spec.window_size) + ", block " +
                          std::to_string(spec.block_size) + ", landmarks " +
                          std::to_string(spec.landmark_size) + ", source " + config.source);

  auto input = open_source(config.source);
  RecordReader reader(*input, constraint.schema(), RecordReader::Options{config.rate});
  OutputTarget target(config.output, out);
  EventWriter writer(target.stream(), constraint.schema());

  EngineOptions options;
  options.metrics_every = config.metrics_every;
  Engine engine(constraint, spec, options);

  PipelineOptions pipeline;
  const bool live = config.source == "-" || config.source.rfind("tcp:", 0) == 0 || config.rate;
  if (live) pipeline.batch_size = 1;

  const MetricsSnapshot m = run_pipeline(
      engine, [&] { return reader.next(); }, [&](const EngineEvent& e) { writer.write(e); },
      pipeline);
  writer.flush();
  log(LogLevel::info, "monitor: " + std::to_string(m.windows) + " windows, " +
                          std::to_string(m.reorders) + " reorders, " +
                          std::to_string(engine.rebuilds()) + " sketch builds");
  return 0;
}

struct ReorderArgs {
  std::string input;
  std::string output = "-";
  std::string schema;
  std::string proportions;
  std::int64_t block = 0;
  std::optional<std::int64_t> window;
  double epsilon = 1.0;
  std::optional<std::string> format;
};

int run_reorder(const ReorderArgs& args, std::ostream& out, std::ostream& err) {
  if (args.block <= 0) throw ValidationError("--block must be positive");
  if (args.window && *args.window <= 0) throw ValidationError("--window must be positive");
  std::optional<RecordFormat> format;
  if (args.format) {
    format = parse_record_format(*args.format);
    if (!format) throw ValidationError("unknown format '" + *args.format + "'");
  }
  const FairnessConstraint constraint(AttributeSchema(split_list(args.schema)),
                                      to_proportions(args.proportions), args.epsilon);
  const auto block = static_cast<std::size_t>(args.block);
  const auto spec = WindowSpec::make(args.window ? static_cast<std::size_t>(*args.window) : block, block);
  const BlockRules rules = BlockRules::make(constraint, spec);

  std::ifstream in(args.input);
  if (!in) throw Error("cannot open input " + args.input);
  RecordReader reader(in, constraint.schema());
  std::vector<Item> items;
  while (auto item = reader.next()) items.push_back(*item);
  if (items.size() < block) {
    throw DomainError("input holds " + std::to_string(items.size()) + " items, fewer than the block size");
  }

  const Count before = count_fair_blocks(items, rules);
  const ReorderResult result = bfair_reorder(items, rules);

  OutputTarget target(args.output, out);
  write_records(target.stream(), result.stream, constraint.schema(),
                format.value_or(reader.format().value_or(RecordFormat::csv)));
  target.stream().flush();

  nlohmann::ordered_json summary;
  summary["type"] = "reorder_summary";
  summary["items"] = items.size();
  summary["strategy"] = to_string(result.strategy);
  summary["combo"] = result.primary_combo;
  if (result.secondary_combo) summary["secondary_combo"] = *result.secondary_combo;
  summary["fair_blocks_before"] = before;
  summary["fair_blocks_after"] = result.fair_block_count;
  summary["unique_blocks"] = items.size() - block + 1;
  err << summary.dump() << '\n';
  return 0;
}

struct SketchDumpArgs {
  std::string source;
  std::int64_t window = 0;
  std::string schema;
  std::optional<std::string> proportions;
  std::int64_t slides = 0;
  bool show_base = false;
};

std::string format_entry(std::span<const Count> entry) {
  std::string s = "[";
  for (std::size_t j = 0; j < entry.size(); ++j) {
    if (j > 0) s += ',';
    s += std::to_string(entry[j]);
  }
  return s + "]";
}

int run_sketch_dump(const SketchDumpArgs& args, std::ostream& out) {
  if (args.window <= 0) throw ValidationError("--window must be positive");
  if (args.slides < 0) throw ValidationError("--slides must be non-negative");
  const AttributeSchema schema(split_list(args.schema));
  if (schema.cardinality() < 2) throw ValidationError("schema needs at least two values");
  if (args.proportions) {
    // Only checked for consistency; the sketch itself does not use them.
    FairnessConstraint(schema, to_proportions(*args.proportions));
  }

  auto input = open_source(args.source);
  RecordReader reader(*input, schema);
  const auto window = static_cast<std::size_t>(args.window);
  std::vector<Item> items;
  while (items.size() < window) {
    auto item = reader.next();
    if (!item) {
      throw DomainError("source holds " + std::to_string(items.size()) + " items, window needs " +
                        std::to_string(window));
    }
    items.push_back(*item);
  }
  ForwardSketch sketch = ForwardSketch::build(items, schema.cardinality());
  for (std::int64_t i = 0; i < args.slides; ++i) {
    auto item = reader.next();
    if (!item) throw DomainError("source ended after " + std::to_string(i) + " slides");
    sketch.slide(*item);
  }

  if (args.show_base) out << "base " << format_entry(sketch.base()) << '\n';
  for (std::size_t i = 1; i <= sketch.window_length(); ++i) out << format_entry(sketch.entry(i)) << '\n';
  return 0;
}

struct BenchArgs {
  std::string suite = "all";
  bench::BenchParams params;
  std::string output = "-";
};

int run_bench_command(const BenchArgs& args, std::ostream& out) {
  const auto report = bench::run_bench(args.suite, args.params);
  OutputTarget target(args.output, out);
  report.write_csv(target.stream());
  return 0;
}

struct GenArgs {
  std::int64_t n = 0;
  std::string schema;
  std::optional<std::string> weights;
  double burstiness = 0.0;
  std::uint64_t seed = 1;
  std::string output = "-";
  std::string format = "csv";
};

int run_gen(const GenArgs& args, std::ostream& out) {
  if (args.n < 0) throw ValidationError("--n must be non-negative");
  const AttributeSchema schema(split_list(args.schema));
  const auto format = parse_record_format(args.format);
  if (!format) throw ValidationError("unknown format '" + args.format + "'");

  GeneratorParams g;
  g.cardinality = schema.cardinality();
  g.n = static_cast<std::size_t>(args.n);
  g.burstiness = args.burstiness;
  g.seed = args.seed;
  if (args.weights) {
    for (const auto& w : split_list(*args.weights)) {
      try {
        std::size_t used = 0;
        g.weights.push_back(std::stod(w, &used));
        if (used != w.size()) throw std::invalid_argument(w);
      } catch (const std::logic_error&) {
        throw ValidationError("malformed weight '" + w + "'");
      }
    }
  }
  const auto items = generate_stream(g);
  OutputTarget target(args.output, out);
  write_records(target.stream(), items, schema, *format);
  target.stream().flush();
  return 0;
}

void add_config_flags(CLI::App* cmd, MonitorArgs& a) {
  cmd->add_option("--config", a.config, "JSON config file; flags override its values");
  cmd->add_option("--window", a.o.window_size, "Window size |W| (default 1000)");
  cmd->add_option("--block", a.o.block_size, "Block size s (default 25)");
  cmd->add_option("--landmark", a.o.landmark_size, "Landmark count |X| (default 100)");
  cmd->add_option("--slide", a.o.slide, "Items per slide (default 1)");
  cmd->add_option("--epsilon", a.o.epsilon, "Range scaling (default 1)");
  cmd->add_option("--schema", a.o.schema, "Comma-separated attribute values");
  cmd->add_option("--proportions", a.o.proportions, "Comma-separated proportions, schema order");
  cmd->add_option("--source", a.o.source, "File, - for stdin, or tcp:host:port");
  cmd->add_option("--rate", a.o.rate, "Items per second");
  cmd->add_option("--output", a.o.output, "Event log path, - for stdout");
  cmd->add_option("--metrics-every", a.o.metrics_every, "Metrics line every N windows (0 = final only)");
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app("Block-level fairness monitoring and reordering for count-based sliding windows",
               "fairstream");
  app.require_subcommand(1);

  MonitorArgs monitor;
  auto* monitor_cmd = app.add_subcommand("monitor", "Run the streaming engine over a source");
  add_config_flags(monitor_cmd, monitor);

  ReorderArgs reorder;
  auto* reorder_cmd = app.add_subcommand("reorder", "Reorder a whole file offline");
  reorder_cmd->add_option("--input", reorder.input, "Input records")->required();
  reorder_cmd->add_option("--output", reorder.output, "Reordered records, - for stdout");
  reorder_cmd->add_option("--schema", reorder.schema, "Comma-separated attribute values")->required();
  reorder_cmd->add_option("--proportions", reorder.proportions, "Comma-separated proportions")->required();
  reorder_cmd->add_option("--block", reorder.block, "Block size s")->required();
  reorder_cmd->add_option("--window", reorder.window, "Window size (defaults to the block size)");
  reorder_cmd->add_option("--epsilon", reorder.epsilon, "Range scaling");
  reorder_cmd->add_option("--format", reorder.format, "csv or json (defaults to the input format)");

  SketchDumpArgs dump;
  auto* dump_cmd = app.add_subcommand("sketch-dump", "Print forward sketch entries for a window");
  dump_cmd->add_option("--source", dump.source, "Input records")->required();
  dump_cmd->add_option("--window", dump.window, "Window size")->required();
  dump_cmd->add_option("--schema", dump.schema, "Comma-separated attribute values")->required();
  dump_cmd->add_option("--proportions", dump.proportions, "Optional; validated only");
  dump_cmd->add_option("--slides", dump.slides, "Slide this many items before dumping");
  dump_cmd->add_flag("--show-base", dump.show_base, "Also print the eviction base");

  BenchArgs bench_args;
  auto* bench_cmd = app.add_subcommand("bench", "Run benchmark suites and print CSV");
  bench_cmd->add_option("--suite", bench_args.suite, "Suite name or all")
      ->check(CLI::IsMember(bench::suite_names()));
  bench_cmd->add_option("--window", bench_args.params.window_size, "Window size");
  bench_cmd->add_option("--block", bench_args.params.block_size, "Block size");
  bench_cmd->add_option("--cardinality", bench_args.params.cardinality, "Attribute cardinality");
  bench_cmd->add_option("--landmark", bench_args.params.landmark_size, "Landmark count");
  bench_cmd->add_option("--iterations", bench_args.params.iterations, "Timed operations per point");
  bench_cmd->add_option("--seed", bench_args.params.seed, "Generator seed");
  bench_cmd->add_option("--output", bench_args.output, "CSV path, - for stdout");

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a synthetic skewed stream");
  gen_cmd->add_option("--n", gen.n, "Number of items")->required();
  gen_cmd->add_option("--schema", gen.schema, "Comma-separated attribute values")->required();
  gen_cmd->add_option("--weights", gen.weights, "Comma-separated relative weights");
  gen_cmd->add_option("--burstiness", gen.burstiness, "Probability of repeating the previous value");
  gen_cmd->add_option("--seed", gen.seed, "Generator seed");
  gen_cmd->add_option("--output", gen.output, "Output path, - for stdout");
  gen_cmd->add_option("--format", gen.format, "csv or json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (*monitor_cmd) return run_monitor(monitor, out);
    if (*reorder_cmd) return run_reorder(reorder, out, err);
    if (*dump_cmd) return run_sketch_dump(dump, out);
    if (*bench_cmd) return run_bench_command(bench_args, out);
    if (*gen_cmd) return run_gen(gen, out);
  } catch (const ValidationError& e) {
    err << "fairstream: invalid configuration: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "fairstream: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitValidation;
}

}  // namespace fairstream
