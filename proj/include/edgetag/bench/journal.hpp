#pragma once

#include "edgetag/telemetry/record.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace edgetag::bench {

/// One finished plan entry, appended to journal.jsonl as a single JSON line
/// once its outputs are on disk. Paths are relative to the campaign directory.
struct JournalEntry {
  std::size_t index = 0;
  std::string model_id;
  telemetry::Scenario scenario = telemetry::Scenario::headless;
  std::string status;  // "completed" or "failed"
  std::string error;
  std::string run_dir;
  nlohmann::json run_summary;  // engine summary; null for entries that never started

  bool operator==(const JournalEntry&) const = default;
};

nlohmann::json to_json(const JournalEntry& entry);
JournalEntry journal_entry_from_json(const nlohmann::json& doc);

// Missing file -> empty journal. A torn final line (crash mid-append) is
// ignored; any other malformed line throws Error(Errc::io).
std::vector<JournalEntry> read_journal(const std::filesystem::path& path);
// Appends one line and syncs it to disk.
void append_journal(const std::filesystem::path& path, const JournalEntry& entry);

}  // namespace edgetag::bench
