#pragma once

// Record formats, sources, event output and run configuration.

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "fairstream/core.hpp"
#include "fairstream/engine.hpp"

namespace fairstream {

// ---- configuration ---------------------------------------------------------

struct Config {
  std::vector<std::string> schema;
  std::vector<Proportion> proportions;
  std::size_t window_size = 1000;
  std::size_t block_size = 25;
  std::size_t landmark_size = 100;
  std::size_t slide = 1;
  double epsilon = 1.0;
  /// File path, "-" for stdin, or "tcp:host:port".
  std::string source = "-";
  /// Items per second; unset means as fast as the source delivers.
  std::optional<double> rate;
  /// File path or "-" for stdout.
  std::string output = "-";
  std::size_t metrics_every = 1000;

  WindowSpec spec() const;
  FairnessConstraint constraint() const;
  /// Throws ValidationError on any inconsistency.
  void validate() const;
};

/// Flag values as given on the command line. Sizes are signed so that
/// negative input reaches validation instead of wrapping.
struct ConfigOverrides {
  std::optional<std::int64_t> window_size;
  std::optional<std::int64_t> block_size;
  std::optional<std::int64_t> landmark_size;
  std::optional<std::int64_t> slide;
  std::optional<double> epsilon;
  std::optional<std::string> schema;       // comma list
  std::optional<std::string> proportions;  // comma list
  std::optional<std::string> source;
  std::optional<double> rate;
  std::optional<std::string> output;
  std::optional<std::int64_t> metrics_every;
};

/// Reads an optional JSON config file, applies the overrides on top and
/// validates the result.
Config load_config(const std::optional<std::string>& path, const ConfigOverrides& overrides);
Config config_from_json(const nlohmann::json& doc);

std::vector<std::string> split_list(std::string_view text);

// ---- records ---------------------------------------------------------------

enum class RecordFormat { csv, json_lines };

std::optional<RecordFormat> parse_record_format(std::string_view name) noexcept;

class RecordReader {
 public:
  struct Options {
    std::optional<double> rate;
  };

  RecordReader(std::istream& in, const AttributeSchema& schema);
  RecordReader(std::istream& in, const AttributeSchema& schema, Options options);

  /// Next item, or nullopt at end of input. Blank lines are skipped.
  std::optional<Item> next();

  /// Set after the first record has been read.
  std::optional<RecordFormat> format() const noexcept { return format_; }
  std::size_t line() const noexcept { return line_; }

 private:
  Item parse_csv(std::string_view text) const;
  Item parse_json(std::string_view text) const;

  std::istream* in_;
  const AttributeSchema* schema_;
  Options options_;
  std::optional<RecordFormat> format_;
  std::size_t line_ = 0;
  std::optional<std::uint64_t> last_seq_;
  std::uint64_t delivered_ = 0;
  std::chrono::steady_clock::time_point started_;
};

std::vector<Item> read_records(std::istream& in, const AttributeSchema& schema);

void write_records(std::ostream& out, std::span<const Item> items, const AttributeSchema& schema,
                   RecordFormat format);

// ---- sources -----------------------------------------------------------------

/// Opens a file, "-" (stdin) or "tcp:host:port" (connects as a client and
/// reads lines until the peer closes).
std::unique_ptr<std::istream> open_source(const std::string& spec);

// ---- events ----------------------------------------------------------------

nlohmann::ordered_json event_json(const EngineEvent& event, const AttributeSchema& schema);

class EventWriter {
 public:
  EventWriter(std::ostream& out, const AttributeSchema& schema) : out_(&out), schema_(&schema) {}

  /// One line per event. Throws Error if the sink fails.
  void write(const EngineEvent& event);
  void flush();

 private:
  std::ostream* out_;
  const AttributeSchema* schema_;
};

// ---- diagnostics -------------------------------------------------------------

enum class LogLevel { off, info, debug };

/// Level from FAIRSTREAM_LOG, read once.
LogLevel log_level() noexcept;
void log(LogLevel level, std::string_view message);

}  // namespace fairstream
