#include "edgetag/bench/journal.hpp"

#include "edgetag/error.hpp"

#include <fmt/format.h>

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace edgetag::bench {

nlohmann::json to_json(const JournalEntry& entry) {
  return {{"index", entry.index},
          {"model_id", entry.model_id},
          {"scenario", telemetry::to_string(entry.scenario)},
          {"status", entry.status},
          {"error", entry.error},
          {"run_dir", entry.run_dir},
          {"summary", entry.run_summary}};
}

JournalEntry journal_entry_from_json(const nlohmann::json& doc) {
  try {
    JournalEntry e;
    e.index = doc.at("index").get<std::size_t>();
    e.model_id = doc.at("model_id").get<std::string>();
    e.scenario = telemetry::parse_scenario(doc.at("scenario").get<std::string>());
    e.status = doc.at("status").get<std::string>();
    if (e.status != "completed" && e.status != "failed")
      throw Error(Errc::io, fmt::format("unknown journal status '{}'", e.status));
    e.error = doc.value("error", "");
    e.run_dir = doc.value("run_dir", "");
    e.run_summary = doc.value("summary", nlohmann::json());
    return e;
  } catch (const nlohmann::json::exception& ex) {
    throw Error(Errc::io, fmt::format("malformed journal line: {}", ex.what()));
  } catch (const Error& ex) {
    throw Error(Errc::io, fmt::format("malformed journal line: {}", ex.what()));
  }
}

std::vector<JournalEntry> read_journal(const std::filesystem::path& path) {
  std::vector<JournalEntry> entries;
  std::ifstream in(path, std::ios::binary);
  if (!in) return entries;
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();

  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    const bool terminated = nl != std::string::npos;
    const std::string line = text.substr(pos, terminated ? nl - pos : std::string::npos);
    pos = terminated ? nl + 1 : text.size();
    ++line_no;
    if (line.empty()) continue;
    // an unterminated last line is an append that never completed
    if (!terminated) break;
    const auto doc = nlohmann::json::parse(line, nullptr, false);
    if (doc.is_discarded())
      throw Error(Errc::io, fmt::format("{}:{}: journal line is not valid JSON", path.string(), line_no));
    entries.push_back(journal_entry_from_json(doc));
  }
  return entries;
}

namespace {

// Drops a torn trailing fragment so the next line starts cleanly.
void trim_torn_tail(const std::filesystem::path& path) {
  std::error_code ec;
  const auto size = std::filesystem::file_size(path, ec);
  if (ec || size == 0) return;
  std::ifstream in(path, std::ios::binary);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (text.empty() || text.back() == '\n') return;
  const auto nl = text.rfind('\n');
  std::filesystem::resize_file(path, nl == std::string::npos ? 0 : nl + 1, ec);
  if (ec) throw Error(Errc::io, fmt::format("cannot repair journal {}: {}", path.string(), ec.message()));
}

}  // namespace

void append_journal(const std::filesystem::path& path, const JournalEntry& entry) {
  trim_torn_tail(path);
  const std::string line = to_json(entry).dump() + "\n";
  const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd < 0) throw Error(Errc::io, fmt::format("cannot open journal {}: {}", path.string(), std::strerror(errno)));
  std::size_t written = 0;
  while (written < line.size()) {
    const auto n = ::write(fd, line.data() + written, line.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      const int err = errno;
      ::close(fd);
      throw Error(Errc::io, fmt::format("cannot append to journal {}: {}", path.string(), std::strerror(err)));
    }
    written += static_cast<std::size_t>(n);
  }
  ::fsync(fd);
  ::close(fd);
}

}  // namespace edgetag::bench
