#pragma once

#include <atomic>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace edgetag::telemetry {

inline constexpr const char* kDefaultThermalPath = "/sys/class/thermal/thermal_zone0/temp";

/// Raw temperature provider. read() returns nullopt when the interface
/// cannot be read; values are not range-checked here.
class TemperatureSource {
 public:
  virtual ~TemperatureSource() = default;
  virtual std::optional<double> read() = 0;
  virtual std::string describe() const = 0;
};

/// Linux thermal zone file holding millidegrees Celsius ("54321").
class SysfsTemperature : public TemperatureSource {
 public:
  explicit SysfsTemperature(std::filesystem::path path = kDefaultThermalPath);
  std::optional<double> read() override;
  std::string describe() const override;

 private:
  std::filesystem::path path_;
};

/// Scripted series; repeats the last value once exhausted.
class MockTemperature : public TemperatureSource {
 public:
  explicit MockTemperature(std::vector<double> series);
  std::optional<double> read() override;
  std::string describe() const override;

 private:
  std::mutex mutex_;
  std::vector<double> series_;
  std::size_t next_ = 0;
};

/// Thread-safe front end: applies the sanity band, counts rejections and
/// warns once when the interface is unavailable (the run continues
/// latency-only).
class TemperatureMonitor {
 public:
  explicit TemperatureMonitor(std::unique_ptr<TemperatureSource> source);

  std::optional<double> sample();
  std::optional<double> last() const;
  std::uint64_t rejected() const { return rejected_; }
  std::uint64_t unavailable() const { return unavailable_; }
  std::string describe() const;

 private:
  mutable std::mutex mutex_;
  std::unique_ptr<TemperatureSource> source_;
  std::optional<double> last_;
  std::atomic<std::uint64_t> rejected_{0};
  std::atomic<std::uint64_t> unavailable_{0};
  bool warned_ = false;
};

// "sysfs" (optionally "sysfs:<path>"), "mock:<v1>,<v2>,...", or "none".
// Throws Error(Errc::config) for an unknown spec.
std::unique_ptr<TemperatureSource> make_temperature_source(const std::string& spec);

}  // namespace edgetag::telemetry
