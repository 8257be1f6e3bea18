#include "fairstream/io.hpp"

#include <netdb.h>
#include <sys/socket.h>
#include <unistd.h>

#include <array>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iostream>
#include <mutex>
#include <streambuf>
#include <thread>

namespace fairstream {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::size_t non_negative(std::int64_t v, const char* name) {
  if (v < 0) throw ValidationError(std::string(name) + " must be non-negative, got " + std::to_string(v));
  return static_cast<std::size_t>(v);
}

// Shortest round-trip text of a JSON number, so 0.3 parses as exactly 3/10.
Proportion proportion_from_json(const nlohmann::json& v) {
  if (v.is_string()) return Proportion::parse(trim(v.get<std::string>()));
  if (!v.is_number()) throw ValidationError("proportions must be numbers or strings");
  const double d = v.get<double>();
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), d);
  if (ec != std::errc{}) return Proportion::approximate(d);
  std::string_view text(buf.data(), static_cast<std::size_t>(ptr - buf.data()));
  if (text.find_first_of("eE") != std::string_view::npos) return Proportion::approximate(d);
  return Proportion::parse(text);
}

std::vector<Proportion> parse_proportions(std::string_view text) {
  std::vector<Proportion> out;
  for (const auto& part : split_list(text)) out.push_back(Proportion::parse(part));
  return out;
}

std::int64_t json_int(const nlohmann::json& v, const char* key) {
  if (!v.is_number_integer()) throw ValidationError(std::string("config '") + key + "' must be an integer");
  return v.get<std::int64_t>();
}

// ---- tcp -------------------------------------------------------------------

class SocketBuf : public std::streambuf {
 public:
  explicit SocketBuf(int fd) : fd_(fd) {}
  ~SocketBuf() override { ::close(fd_); }

 protected:
  int_type underflow() override {
    if (gptr() < egptr()) return traits_type::to_int_type(*gptr());
    ssize_t n;
    do {
      n = ::recv(fd_, buffer_.data(), buffer_.size(), 0);
    } while (n < 0 && errno == EINTR);
    if (n <= 0) return traits_type::eof();
    setg(buffer_.data(), buffer_.data(), buffer_.data() + n);
    return traits_type::to_int_type(*gptr());
  }

 private:
  int fd_;
  std::array<char, 8192> buffer_{};
};

class SocketStream : public std::istream {
 public:
  explicit SocketStream(int fd) : std::istream(nullptr), buf_(fd) { rdbuf(&buf_); }

 private:
  SocketBuf buf_;
};

int connect_tcp(const std::string& host, const std::string& port) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* found = nullptr;
  if (int rc = ::getaddrinfo(host.c_str(), port.c_str(), &hints, &found); rc != 0) {
    throw Error("cannot resolve " + host + ":" + port + ": " + ::gai_strerror(rc));
  }
  int fd = -1;
  for (addrinfo* a = found; a != nullptr; a = a->ai_next) {
    fd = ::socket(a->ai_family, a->ai_socktype, a->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, a->ai_addr, a->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(found);
  if (fd < 0) throw Error("cannot connect to " + host + ":" + port);
  return fd;
}

// Wraps std::cin without taking ownership.
class BorrowedStream : public std::istream {
 public:
  explicit BorrowedStream(std::istream& in) : std::istream(in.rdbuf()) {}
};

}  // namespace

// ---- configuration -----------------------------------------------------------

std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const auto comma = text.find(',', pos);
    auto part = trim(text.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
    if (part.empty()) throw ValidationError("empty entry in list '" + std::string(text) + "'");
    out.emplace_back(part);
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

WindowSpec Config::spec() const {
  WindowSpec s;
  s.window_size = window_size;
  s.block_size = block_size;
  s.landmark_size = landmark_size;
  s.slide = slide;
  return s;
}

FairnessConstraint Config::constraint() const {
  return FairnessConstraint(AttributeSchema(schema), proportions, epsilon);
}

void Config::validate() const {
  if (schema.empty()) throw ValidationError("missing schema");
  if (proportions.empty()) throw ValidationError("missing proportions");
  spec().validate();
  if (rate && !(std::isfinite(*rate) && *rate > 0.0)) throw ValidationError("rate must be positive");
  if (source.empty()) throw ValidationError("empty source");
  // Builds the constraint and its ranges, which checks the schema, the
  // proportion count and sum, epsilon, and the geometry.
  BlockRules::make(constraint(), spec());
}

Config config_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ValidationError("config must be a JSON object");
  Config c;
  for (const auto& [key, v] : doc.items()) {
    if (key == "window") {
      c.window_size = non_negative(json_int(v, "window"), "window");
    } else if (key == "block") {
      c.block_size = non_negative(json_int(v, "block"), "block");
    } else if (key == "landmark") {
      c.landmark_size = non_negative(json_int(v, "landmark"), "landmark");
    } else if (key == "slide") {
      c.slide = non_negative(json_int(v, "slide"), "slide");
    } else if (key == "metrics_every") {
      c.metrics_every = non_negative(json_int(v, "metrics_every"), "metrics_every");
    } else if (key == "epsilon") {
      if (!v.is_number()) throw ValidationError("config 'epsilon' must be a number");
      c.epsilon = v.get<double>();
    } else if (key == "rate") {
      if (!v.is_number()) throw ValidationError("config 'rate' must be a number");
      c.rate = v.get<double>();
    } else if (key == "schema") {
      if (v.is_string()) {
        c.schema = split_list(v.get<std::string>());
      } else if (v.is_array()) {
        c.schema.clear();
        for (const auto& e : v) {
          if (!e.is_string()) throw ValidationError("schema entries must be strings");
          c.schema.push_back(e.get<std::string>());
        }
      } else {
        throw ValidationError("config 'schema' must be a list");
      }
    } else if (key == "proportions") {
      if (v.is_string()) {
        c.proportions = parse_proportions(v.get<std::string>());
      } else if (v.is_array()) {
        c.proportions.clear();
        for (const auto& e : v) c.proportions.push_back(proportion_from_json(e));
      } else {
        throw ValidationError("config 'proportions' must be a list");
      }
    } else if (key == "source" || key == "output") {
      if (!v.is_string()) throw ValidationError("config '" + key + "' must be a string");
      (key == "source" ? c.source : c.output) = v.get<std::string>();
    } else {
      throw ValidationError("unknown config key '" + key + "'");
    }
  }
  return c;
}

Config load_config(const std::optional<std::string>& path, const ConfigOverrides& o) {
  Config c;
  if (path) {
    std::ifstream in(*path);
    if (!in) throw ValidationError("cannot read config file " + *path);
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw ValidationError("config file " + *path + ": " + e.what());
    }
    c = config_from_json(doc);
  }
  if (o.window_size) c.window_size = non_negative(*o.window_size, "--window");
  if (o.block_size) c.block_size = non_negative(*o.block_size, "--block");
  if (o.landmark_size) c.landmark_size = non_negative(*o.landmark_size, "--landmark");
  if (o.slide) c.slide = non_negative(*o.slide, "--slide");
  if (o.metrics_every) c.metrics_every = non_negative(*o.metrics_every, "--metrics-every");
  if (o.epsilon) c.epsilon = *o.epsilon;
  if (o.schema) c.schema = split_list(*o.schema);
  if (o.proportions) c.proportions = parse_proportions(*o.proportions);
  if (o.source) c.source = *o.source;
  if (o.rate) c.rate = *o.rate;
  if (o.output) c.output = *o.output;
  c.validate();
  return c;
}

// ---- records -----------------------------------------------------------------

std::optional<RecordFormat> parse_record_format(std::string_view name) noexcept {
  if (name == "csv") return RecordFormat::csv;
  if (name == "json" || name == "jsonl" || name == "json-lines") return RecordFormat::json_lines;
  return std::nullopt;
}

RecordReader::RecordReader(std::istream& in, const AttributeSchema& schema)
    : RecordReader(in, schema, Options{}) {}

RecordReader::RecordReader(std::istream& in, const AttributeSchema& schema, Options options)
    : in_(&in), schema_(&schema), options_(options) {
  if (options_.rate && !(*options_.rate > 0.0)) throw ValidationError("rate must be positive");
}

Item RecordReader::parse_csv(std::string_view text) const {
  const auto comma = text.find(',');
  if (comma == std::string_view::npos) throw ParseError(line_, "expected 'seq,value'");
  const auto seq_text = trim(text.substr(0, comma));
  const auto value_text = trim(text.substr(comma + 1));
  Item item;
  auto [ptr, ec] = std::from_chars(seq_text.data(), seq_text.data() + seq_text.size(), item.seq);
  if (seq_text.empty() || ec != std::errc{} || ptr != seq_text.data() + seq_text.size()) {
    throw ParseError(line_, "bad seq '" + std::string(seq_text) + "'");
  }
  if (value_text.empty() || value_text.find(',') != std::string_view::npos) {
    throw ParseError(line_, "bad value '" + std::string(value_text) + "'");
  }
  auto id = schema_->find(value_text);
  if (!id) throw SchemaError("line " + std::to_string(line_) + ": unknown value '" + std::string(value_text) + "'");
  item.value = *id;
  return item;
}

Item RecordReader::parse_json(std::string_view text) const {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(line_, std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError(line_, "expected a JSON object");
  auto seq = doc.find("seq");
  auto value = doc.find("value");
  if (seq == doc.end() || !seq->is_number_unsigned()) {
    throw ParseError(line_, "'seq' must be a non-negative integer");
  }
  if (value == doc.end() || !value->is_string()) throw ParseError(line_, "'value' must be a string");
  const auto& label = value->get_ref<const std::string&>();
  auto id = schema_->find(label);
  if (!id) throw SchemaError("line " + std::to_string(line_) + ": unknown value '" + label + "'");
  return Item{seq->get<std::uint64_t>(), *id};
}

std::optional<Item> RecordReader::next() {
  std::string raw;
  while (std::getline(*in_, raw)) {
    ++line_;
    const auto text = trim(raw);
    if (text.empty()) continue;
    if (!format_) {
      format_ = text.front() == '{' ? RecordFormat::json_lines : RecordFormat::csv;
      if (*format_ == RecordFormat::csv && text == "seq,value") continue;  // header
    }
    const Item item = *format_ == RecordFormat::csv ? parse_csv(text) : parse_json(text);
    if (last_seq_ && item.seq <= *last_seq_) {
      throw SequenceError("line " + std::to_string(line_) + ": seq " + std::to_string(item.seq) +
                          " does not follow " + std::to_string(*last_seq_));
    }
    last_seq_ = item.seq;

    if (options_.rate) {
      if (delivered_ == 0) started_ = std::chrono::steady_clock::now();
      const auto due = started_ + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                      std::chrono::duration<double>(static_cast<double>(delivered_) /
                                                                    *options_.rate));
      std::this_thread::sleep_until(due);
    }
    ++delivered_;
    return item;
  }
  if (in_->bad()) throw Error("read failure after line " + std::to_string(line_));
  return std::nullopt;
}

std::vector<Item> read_records(std::istream& in, const AttributeSchema& schema) {
  RecordReader reader(in, schema);
  std::vector<Item> out;
  while (auto item = reader.next()) out.push_back(*item);
  return out;
}

void write_records(std::ostream& out, std::span<const Item> items, const AttributeSchema& schema,
                   RecordFormat format) {
  for (const auto& item : items) {
    if (format == RecordFormat::csv) {
      out << item.seq << ',' << schema.label(item.value) << '\n';
    } else {
      nlohmann::ordered_json j;
      j["seq"] = item.seq;
      j["value"] = schema.label(item.value);
      out << j.dump() << '\n';
    }
  }
  if (!out) throw Error("failed to write records");
}

// ---- sources -----------------------------------------------------------------

std::unique_ptr<std::istream> open_source(const std::string& spec) {
  if (spec == "-") return std::make_unique<BorrowedStream>(std::cin);
  if (spec.rfind("tcp:", 0) == 0) {
    const std::string rest = spec.substr(4);
    const auto colon = rest.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == rest.size()) {
      throw ValidationError("tcp source must look like tcp:host:port, got '" + spec + "'");
    }
    return std::make_unique<SocketStream>(connect_tcp(rest.substr(0, colon), rest.substr(colon + 1)));
  }
  auto file = std::make_unique<std::ifstream>(spec);
  if (!*file) throw Error("cannot open source " + spec);
  return file;
}

// ---- events ------------------------------------------------------------------

nlohmann::ordered_json event_json(const EngineEvent& event, const AttributeSchema& schema) {
  nlohmann::ordered_json j;
  if (const auto* v = std::get_if<WindowVerdict>(&event)) {
    j["type"] = "verdict";
    j["window_id"] = v->window_id;
    j["fair"] = v->verdict.fair;
    if (v->verdict.violation) {
      const auto& x = *v->verdict.violation;
      nlohmann::ordered_json violation;
      violation["block"] = x.block;
      violation["value"] = schema.label(x.value);
      violation["observed"] = x.observed;
      violation["lo"] = x.required.lo;
      violation["hi"] = x.required.hi;
      j["violation"] = std::move(violation);
    }
    j["latency_us"] = v->latency_us;
  } else if (const auto* r = std::get_if<ReorderApplied>(&event)) {
    j["type"] = "reorder";
    j["window_id"] = r->window_id;
    j["scope"] = to_string(r->scope);
    j["combo"] = r->combo;
    if (r->secondary_combo) j["secondary_combo"] = *r->secondary_combo;
    j["fair_blocks_before"] = r->fair_blocks_before;
    j["fair_blocks_after"] = r->fair_blocks_after;
    if (r->landmark_shortfall > 0) j["landmark_shortfall"] = r->landmark_shortfall;
  } else {
    const auto& m = std::get<MetricsSnapshot>(event);
    j["type"] = "metrics";
    j["windows"] = m.windows;
    j["fair_pct"] = m.fair_pct;
    j["throughput_wps"] = m.throughput_wps;
    j["p50_us"] = m.p50_us;
    j["p90_us"] = m.p90_us;
    j["reorders"] = m.reorders;
    j["fair_block_pct_before"] = m.fair_block_pct_before;
    j["fair_block_pct_after"] = m.fair_block_pct_after;
    if (!m.warmed) j["warmed"] = false;
  }
  return j;
}

void EventWriter::write(const EngineEvent& event) {
  *out_ << event_json(event, *schema_).dump() << '\n';
  if (!*out_) throw Error("failed to write event");
}

void EventWriter::flush() {
  out_->flush();
  if (!*out_) throw Error("failed to flush events");
}

// ---- diagnostics ---------------------------------------------------------------

LogLevel log_level() noexcept {
  static const LogLevel level = [] {
    const char* env = std::getenv("FAIRSTREAM_LOG");
    if (env == nullptr) return LogLevel::off;
    if (std::strcmp(env, "debug") == 0) return LogLevel::debug;
    if (std::strcmp(env, "info") == 0) return LogLevel::info;
    return LogLevel::off;
  }();
  return level;
}

void log(LogLevel level, std::string_view message) {
  if (level == LogLevel::off || level > log_level()) return;
  static std::mutex mutex;
  std::lock_guard lock(mutex);
  std::cerr << "fairstream " << (level == LogLevel::debug ? "debug" : "info") << ": " << message << '\n';
}

}  // namespace fairstream
