#include "edgetag/structured_file.hpp"

#include "edgetag/error.hpp"
#include "edgetag/time_util.hpp"

#include <toml.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <fcntl.h>
#include <unistd.h>

namespace edgetag {
namespace {

nlohmann::json node_to_json(const toml::node& node) {
  if (const auto* table = node.as_table()) {
    nlohmann::json obj = nlohmann::json::object();
    for (const auto& [key, value] : *table) obj[std::string(key.str())] = node_to_json(value);
    return obj;
  }
  if (const auto* array = node.as_array()) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& value : *array) arr.push_back(node_to_json(value));
    return arr;
  }
  if (const auto* v = node.as_string()) return v->get();
  if (const auto* v = node.as_integer()) return v->get();
  if (const auto* v = node.as_floating_point()) return v->get();
  if (const auto* v = node.as_boolean()) return v->get();
  throw Error(Errc::config, "TOML date/time values are not supported");
}

std::string toml_key(const std::string& key) {
  const bool bare = !key.empty() && std::all_of(key.begin(), key.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
           c == '-';
  });
  return bare ? key : nlohmann::json(key).dump();
}

std::string toml_value(const nlohmann::json& value) {
  if (value.is_string()) return nlohmann::json(value.get<std::string>()).dump();
  if (value.is_boolean()) return value.get<bool>() ? "true" : "false";
  if (value.is_number_integer()) return std::to_string(value.get<std::int64_t>());
  if (value.is_number_float()) {
    std::string text = format_double(value.get<double>());
    if (text.find_first_of(".eEn") == std::string::npos) text += ".0";
    return text;
  }
  if (value.is_array()) {
    std::string out = "[";
    for (std::size_t i = 0; i < value.size(); ++i) {
      if (i) out += ", ";
      out += toml_value(value[i]);
    }
    return out + "]";
  }
  if (value.is_object()) {
    std::string out = "{ ";
    bool first = true;
    for (const auto& [k, v] : value.items()) {
      if (!first) out += ", ";
      first = false;
      out += toml_key(k) + " = " + toml_value(v);
    }
    return out + " }";
  }
  throw Error(Errc::config, "cannot render null as TOML");
}

void render_table(const nlohmann::json& object, const std::string& prefix, std::string& out) {
  for (const auto& [key, value] : object.items()) {
    if (value.is_null() || value.is_object()) continue;
    if (value.is_array() && !value.empty() && value.front().is_object()) continue;
    out += toml_key(key) + " = " + toml_value(value) + "\n";
  }
  for (const auto& [key, value] : object.items()) {
    const std::string name = prefix.empty() ? toml_key(key) : prefix + "." + toml_key(key);
    if (value.is_object()) {
      out += "\n[" + name + "]\n";
      render_table(value, name, out);
    } else if (value.is_array() && !value.empty() && value.front().is_object()) {
      for (const auto& item : value) {
        out += "\n[[" + name + "]]\n";
        render_table(item, name, out);
      }
    }
  }
}

}  // namespace

nlohmann::json parse_toml(std::string_view text, std::string_view source_name) {
  try {
    toml::table table = toml::parse(text, source_name);
    return node_to_json(table);
  } catch (const toml::parse_error& err) {
    std::ostringstream msg;
    msg << source_name << ": " << err.description() << " (line " << err.source().begin.line << ")";
    throw Error(Errc::config, msg.str());
  }
}

nlohmann::json load_structured_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::file_missing, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  if (path.extension() == ".toml") return parse_toml(text, path.string());
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& err) {
    throw Error(Errc::config, path.string() + ": " + err.what());
  }
}

void reject_unknown_keys(const nlohmann::json& object, std::initializer_list<std::string_view> allowed,
                         std::string_view context) {
  if (!object.is_object()) throw Error(Errc::config, std::string(context) + ": expected a table");
  for (const auto& [key, value] : object.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw Error(Errc::config, std::string(context) + ": unknown key '" + key + "'");
  }
}

std::string to_toml(const nlohmann::json& object) {
  if (!object.is_object()) throw Error(Errc::config, "TOML root must be a table");
  std::string out;
  render_table(object, "", out);
  return out;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  const auto tmp = path.string() + ".tmp";
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  if (fd < 0) throw Error(Errc::io, "cannot write " + tmp);
  std::size_t written = 0;
  while (written < contents.size()) {
    const ssize_t n = ::write(fd, contents.data() + written, contents.size() - written);
    if (n <= 0) {
      ::close(fd);
      throw Error(Errc::io, "short write to " + tmp);
    }
    written += static_cast<std::size_t>(n);
  }
  ::fsync(fd);
  ::close(fd);
  if (std::rename(tmp.c_str(), path.c_str()) != 0) throw Error(Errc::io, "cannot rename " + tmp);
}

ConfigReader::ConfigReader(const nlohmann::json& object, std::string context)
    : object_(object), context_(std::move(context)) {
  if (!object_.is_object()) throw Error(Errc::config, context_ + ": expected a table");
}

void ConfigReader::allow(std::initializer_list<std::string_view> keys) const {
  reject_unknown_keys(object_, keys, context_);
}

void ConfigReader::fail(const std::string& key, const std::string& expected) const {
  throw Error(Errc::config, context_ + ": '" + key + "' must be " + expected);
}

std::optional<std::string> ConfigReader::string(const std::string& key) const {
  if (!object_.contains(key)) return std::nullopt;
  if (!object_[key].is_string()) fail(key, "a string");
  return object_[key].get<std::string>();
}

std::string ConfigReader::string(const std::string& key, const std::string& fallback) const {
  return string(key).value_or(fallback);
}

std::string ConfigReader::required_string(const std::string& key) const {
  auto v = string(key);
  if (!v) throw Error(Errc::config, context_ + ": missing required key '" + key + "'");
  return *v;
}

std::optional<double> ConfigReader::number(const std::string& key) const {
  if (!object_.contains(key)) return std::nullopt;
  if (!object_[key].is_number()) fail(key, "a number");
  return object_[key].get<double>();
}

double ConfigReader::number(const std::string& key, double fallback) const { return number(key).value_or(fallback); }

std::int64_t ConfigReader::integer(const std::string& key, std::int64_t fallback) const {
  if (!object_.contains(key)) return fallback;
  if (!object_[key].is_number_integer()) fail(key, "an integer");
  return object_[key].get<std::int64_t>();
}

bool ConfigReader::boolean(const std::string& key, bool fallback) const {
  if (!object_.contains(key)) return fallback;
  if (!object_[key].is_boolean()) fail(key, "true or false");
  return object_[key].get<bool>();
}

const nlohmann::json& ConfigReader::at(const std::string& key) const {
  if (!object_.contains(key)) throw Error(Errc::config, context_ + ": missing required key '" + key + "'");
  return object_[key];
}

}  // namespace edgetag
