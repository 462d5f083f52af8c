#include "edgetag/telemetry/temperature.hpp"

#include "edgetag/error.hpp"
#include "edgetag/telemetry/record.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <charconv>
#include <fstream>
#include <sstream>

namespace edgetag::telemetry {

SysfsTemperature::SysfsTemperature(std::filesystem::path path) : path_(std::move(path)) {}

std::optional<double> SysfsTemperature::read() {
  std::ifstream in(path_);
  if (!in) return std::nullopt;
  std::string text;
  std::getline(in, text);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\r')) text.pop_back();
  long long milli = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), milli);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) return std::nullopt;
  return static_cast<double>(milli) / 1000.0;
}

std::string SysfsTemperature::describe() const { return "sysfs:" + path_.string(); }

MockTemperature::MockTemperature(std::vector<double> series) : series_(std::move(series)) {
  if (series_.empty()) throw Error(Errc::config, "mock temperature series is empty");
}

std::optional<double> MockTemperature::read() {
  std::lock_guard lock(mutex_);
  const double v = series_[std::min(next_, series_.size() - 1)];
  if (next_ < series_.size()) ++next_;
  return v;
}

std::string MockTemperature::describe() const { return fmt::format("mock ({} values)", series_.size()); }

namespace {

class NoTemperature : public TemperatureSource {
 public:
  std::optional<double> read() override { return std::nullopt; }
  std::string describe() const override { return "none"; }
};

}  // namespace

TemperatureMonitor::TemperatureMonitor(std::unique_ptr<TemperatureSource> source) : source_(std::move(source)) {}

std::optional<double> TemperatureMonitor::sample() {
  std::lock_guard lock(mutex_);
  const auto raw = source_ ? source_->read() : std::nullopt;
  if (!raw) {
    ++unavailable_;
    if (!warned_) {
      spdlog::warn("temperature interface {} unavailable; continuing with latency-only telemetry",
                   source_ ? source_->describe() : "none");
      warned_ = true;
    }
    return std::nullopt;
  }
  if (!(*raw >= kMinPlausibleTempC && *raw <= kMaxPlausibleTempC)) {
    ++rejected_;
    spdlog::debug("temperature reading {} C outside the sanity band, rejected", *raw);
    return std::nullopt;
  }
  last_ = raw;
  return raw;
}

std::optional<double> TemperatureMonitor::last() const {
  std::lock_guard lock(mutex_);
  return last_;
}

std::string TemperatureMonitor::describe() const { return source_ ? source_->describe() : "none"; }

std::unique_ptr<TemperatureSource> make_temperature_source(const std::string& spec) {
  if (spec == "none") return std::make_unique<NoTemperature>();
  if (spec == "sysfs") return std::make_unique<SysfsTemperature>();
  if (spec.starts_with("sysfs:")) return std::make_unique<SysfsTemperature>(spec.substr(6));
  if (spec.starts_with("mock:")) {
    std::vector<double> values;
    std::stringstream ss(spec.substr(5));
    std::string item;
    while (std::getline(ss, item, ',')) {
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
      if (ec != std::errc() || ptr != item.data() + item.size())
        throw Error(Errc::config, fmt::format("bad mock temperature value '{}'", item));
      values.push_back(v);
    }
    return std::make_unique<MockTemperature>(std::move(values));
  }
  throw Error(Errc::config, fmt::format("unknown temperature source '{}' (sysfs[:path], mock:v1,v2,..., none)", spec));
}

}  // namespace edgetag::telemetry
