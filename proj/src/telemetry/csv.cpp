#include "edgetag/telemetry/csv.hpp"

#include "edgetag/error.hpp"
#include "edgetag/time_util.hpp"

#include <fmt/format.h>

#include <charconv>
#include <fstream>
#include <ostream>
#include <sstream>

namespace edgetag::telemetry {

namespace {

std::string opt_number(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

[[noreturn]] void bad(std::size_t row, const std::string& message) {
  throw Error(Errc::io, fmt::format("CSV row {}: {}", row, message));
}

double parse_number(const std::string& text, std::size_t row) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size())
    bad(row, fmt::format("'{}' is not a number", text));
  return v;
}

std::optional<double> parse_opt_number(const std::string& text, std::size_t row) {
  if (text.empty()) return std::nullopt;
  return parse_number(text, row);
}

std::int64_t parse_time(const std::string& text, std::size_t row) {
  const auto ns = parse_iso8601(text);
  if (!ns) bad(row, fmt::format("'{}' is not an ISO 8601 timestamp", text));
  return *ns;
}

Scenario parse_scenario_field(const std::string& text, std::size_t row) {
  try {
    return parse_scenario(text);
  } catch (const Error& e) {
    bad(row, e.what());
  }
}

void append_stats(std::string& line, const std::optional<Stats>& s) {
  for (auto member : {&Stats::mean, &Stats::min, &Stats::max, &Stats::p95}) {
    line += ',';
    if (s) line += format_double((*s).*member);
  }
}

std::optional<Stats> parse_stats(const std::vector<std::string>& f, std::size_t first, std::size_t row) {
  std::size_t filled = 0;
  for (std::size_t i = first; i < first + 4; ++i) filled += f[i].empty() ? 0 : 1;
  if (filled == 0) return std::nullopt;
  if (filled != 4) bad(row, "partially filled statistics");
  return Stats{parse_number(f[first], row), parse_number(f[first + 1], row), parse_number(f[first + 2], row),
               parse_number(f[first + 3], row)};
}

std::vector<std::vector<std::string>> checked_rows(const std::string& text, const char* header, std::size_t width) {
  auto rows = parse_csv(text);
  if (rows.empty()) bad(0, "missing header");
  std::string got;
  for (std::size_t i = 0; i < rows[0].size(); ++i) got += (i ? "," : "") + rows[0][i];
  if (got != header) bad(0, fmt::format("unexpected header '{}'", got));
  for (std::size_t r = 1; r < rows.size(); ++r)
    if (rows[r].size() != width) bad(r, fmt::format("{} fields, expected {}", rows[r].size(), width));
  return rows;
}

}  // namespace

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, field_started = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"' && field.empty()) {
      quoted = true;
      field_started = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      field_started = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      row.push_back(std::move(field));
      field.clear();
      rows.push_back(std::move(row));
      row.clear();
      field_started = false;
    } else {
      field += c;
      field_started = true;
    }
  }
  if (quoted) throw Error(Errc::io, "CSV ends inside a quoted field");
  if (field_started || !field.empty() || !row.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string raw_csv_row(const TelemetryRecord& r) {
  return fmt::format("{},{},{},{},{},{}", format_iso8601(r.wall_time_ns), csv_escape(r.model_id),
                     to_string(r.scenario), opt_number(r.cpu_temp_c), opt_number(r.inference_ms),
                     opt_number(r.total_ms));
}

std::string agg_csv_row(const AggBucket& b) {
  std::string line = fmt::format("{},{},{},{}", format_iso8601(b.bucket_start_ns), csv_escape(b.model_id),
                                 to_string(b.scenario), b.count);
  append_stats(line, b.temp);
  append_stats(line, b.latency);
  return line;
}

void write_raw_csv(std::ostream& out, std::span<const TelemetryRecord> records) {
  out << kRawCsvHeader << '\n';
  for (const auto& r : records) out << raw_csv_row(r) << '\n';
}

void write_agg_csv(std::ostream& out, std::span<const AggBucket> buckets) {
  out << kAggCsvHeader << '\n';
  for (const auto& b : buckets) out << agg_csv_row(b) << '\n';
}

std::string raw_csv(std::span<const TelemetryRecord> records) {
  std::ostringstream out;
  write_raw_csv(out, records);
  return out.str();
}

std::string agg_csv(std::span<const AggBucket> buckets) {
  std::ostringstream out;
  write_agg_csv(out, buckets);
  return out.str();
}

std::vector<TelemetryRecord> parse_raw_csv(const std::string& text) {
  const auto rows = checked_rows(text, kRawCsvHeader, 6);
  std::vector<TelemetryRecord> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& f = rows[r];
    TelemetryRecord rec;
    rec.wall_time_ns = parse_time(f[0], r);
    rec.model_id = f[1];
    rec.scenario = parse_scenario_field(f[2], r);
    rec.cpu_temp_c = parse_opt_number(f[3], r);
    rec.inference_ms = parse_opt_number(f[4], r);
    rec.total_ms = parse_opt_number(f[5], r);
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<AggBucket> parse_agg_csv(const std::string& text) {
  const auto rows = checked_rows(text, kAggCsvHeader, 12);
  std::vector<AggBucket> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& f = rows[r];
    AggBucket b;
    b.bucket_start_ns = parse_time(f[0], r);
    b.model_id = f[1];
    b.scenario = parse_scenario_field(f[2], r);
    std::size_t count = 0;
    const auto [ptr, ec] = std::from_chars(f[3].data(), f[3].data() + f[3].size(), count);
    if (f[3].empty() || ec != std::errc() || ptr != f[3].data() + f[3].size()) bad(r, "count is not an integer");
    b.count = count;
    b.temp = parse_stats(f, 4, r);
    b.latency = parse_stats(f, 8, r);
    out.push_back(std::move(b));
  }
  return out;
}

std::vector<TelemetryRecord> read_raw_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::file_missing, fmt::format("raw telemetry CSV not found: {}", path.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_raw_csv(buf.str());
}

}  // namespace edgetag::telemetry
