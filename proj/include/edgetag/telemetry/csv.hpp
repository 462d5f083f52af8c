#pragma once

#include "edgetag/telemetry/aggregate.hpp"
#include "edgetag/telemetry/record.hpp"

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace edgetag::telemetry {

inline constexpr const char* kRawCsvHeader = "wall_time_iso,model_id,scenario,cpu_temp_c,inference_ms,total_ms";
inline constexpr const char* kAggCsvHeader =
    "bucket_start_iso,model_id,scenario,count,temp_mean,temp_min,temp_max,temp_p95,lat_mean_ms,lat_min_ms,"
    "lat_max_ms,lat_p95_ms";

// RFC 4180: quotes fields containing comma, quote, CR or LF.
std::string csv_escape(const std::string& field);
// Splits RFC 4180 text into rows of fields; throws Error(Errc::io) on an
// unterminated quote.
std::vector<std::vector<std::string>> parse_csv(const std::string& text);

std::string raw_csv_row(const TelemetryRecord& record);
std::string agg_csv_row(const AggBucket& bucket);

void write_raw_csv(std::ostream& out, std::span<const TelemetryRecord> records);
void write_agg_csv(std::ostream& out, std::span<const AggBucket> buckets);
std::string raw_csv(std::span<const TelemetryRecord> records);
std::string agg_csv(std::span<const AggBucket> buckets);

// Throws Error(Errc::io) on a header or field that does not match the schema.
std::vector<TelemetryRecord> parse_raw_csv(const std::string& text);
std::vector<AggBucket> parse_agg_csv(const std::string& text);
std::vector<TelemetryRecord> read_raw_csv(const std::filesystem::path& path);

}  // namespace edgetag::telemetry
