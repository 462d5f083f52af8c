#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>

namespace edgetag {

// Reads a TOML (.toml) or JSON (any other extension) document into a JSON
// value so every config surface shares one representation.
nlohmann::json load_structured_file(const std::filesystem::path& path);
nlohmann::json parse_toml(std::string_view text, std::string_view source_name = "<string>");

// Throws Error(Errc::config) naming the first key of `object` not in `allowed`.
void reject_unknown_keys(const nlohmann::json& object, std::initializer_list<std::string_view> allowed,
                         std::string_view context);

// Renders a flat-or-nested JSON object as TOML.
std::string to_toml(const nlohmann::json& object);

// Writes `contents` to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

/// Typed access to the fields of one config table; every error is
/// Error(Errc::config) naming the context and the key.
class ConfigReader {
 public:
  ConfigReader(const nlohmann::json& object, std::string context);

  bool has(const std::string& key) const { return object_.contains(key); }
  void allow(std::initializer_list<std::string_view> keys) const;
  std::optional<std::string> string(const std::string& key) const;
  std::string string(const std::string& key, const std::string& fallback) const;
  std::string required_string(const std::string& key) const;
  std::optional<double> number(const std::string& key) const;
  double number(const std::string& key, double fallback) const;
  std::int64_t integer(const std::string& key, std::int64_t fallback) const;
  bool boolean(const std::string& key, bool fallback) const;
  const nlohmann::json& at(const std::string& key) const;
  const std::string& context() const { return context_; }

 private:
  [[noreturn]] void fail(const std::string& key, const std::string& expected) const;

  const nlohmann::json& object_;
  std::string context_;
};

}  // namespace edgetag
