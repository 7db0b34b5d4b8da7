#pragma once

#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace cellbench {

/// Append-only JSON Lines file. Appends are serialized and flushed line by line, so a
/// crash loses at most the line being written.
class JsonlJournal {
 public:
  explicit JsonlJournal(std::filesystem::path path);

  /// Existing complete records. A torn final line is discarded and cut from the file.
  std::vector<nlohmann::json> recover();

  void append(const nlohmann::json& record);
  void close();

  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
  std::mutex mutex_;
  std::ofstream out_;
};

/// Strict reader: every non-blank line must parse. Throws Io / Parse with the line number.
std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);

/// Writes records through a temp file and rename.
void write_jsonl_atomic(const std::filesystem::path& path, const std::vector<nlohmann::json>& records);
void write_text_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace cellbench
