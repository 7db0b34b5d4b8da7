#pragma once

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

namespace cellbench {

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);

struct CacheStats {
  std::size_t lookups = 0;
  std::size_t hits = 0;
};

/// Content-addressed store of raw responses: one JSON document per key under
/// <dir>/<first two hex chars>/<key>.json. Writes go through a temp file and rename.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir);

  /// SHA-256 of the source name and whitespace-collapsed query.
  static std::string make_key(std::string_view source, std::string_view query);

  /// Throws Cache on unreadable or corrupt entries.
  std::optional<std::string> get(const std::string& key) const;
  /// Stores `payload` unless the key already exists. Returns true when newly written.
  /// Existing entries are never modified. Throws Cache on disk failure.
  bool put(const std::string& key, std::string_view payload);

  std::size_t entry_count() const;
  CacheStats stats() const noexcept;
  const std::filesystem::path& dir() const noexcept { return dir_; }

 private:
  std::filesystem::path path_for(const std::string& key) const;

  std::filesystem::path dir_;
  mutable std::atomic<std::size_t> lookups_{0};
  mutable std::atomic<std::size_t> hits_{0};
};

}  // namespace cellbench
