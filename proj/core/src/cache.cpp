#include "cellbench/cache.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <fstream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cellbench/error.hpp"
#include "cellbench/text.hpp"

namespace cellbench {

namespace fs = std::filesystem;

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error(ErrorKind::Cache, "SHA-256 failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

ResponseCache::ResponseCache(fs::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw Error(ErrorKind::Cache, "cannot create cache dir " + dir_.string() + ": " + ec.message());
}

std::string ResponseCache::make_key(std::string_view source, std::string_view query) {
  std::string material(source);
  material.push_back('\x1f');
  material += text::collapse_whitespace(query);
  return sha256_hex(material);
}

fs::path ResponseCache::path_for(const std::string& key) const {
  if (key.size() < 3) throw Error(ErrorKind::Cache, "cache key too short");
  return dir_ / key.substr(0, 2) / (key + ".json");
}

std::optional<std::string> ResponseCache::get(const std::string& key) const {
  ++lookups_;
  const auto path = path_for(key);
  std::error_code ec;
  if (!fs::exists(path, ec)) return std::nullopt;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Cache, "cannot read " + path.string());
  try {
    const auto doc = nlohmann::json::parse(in);
    if (doc.at("key").get<std::string>() != key) throw Error(ErrorKind::Cache, "key mismatch in " + path.string());
    ++hits_;
    return doc.at("payload").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Cache, "corrupt cache entry " + path.string() + ": " + e.what());
  }
}

bool ResponseCache::put(const std::string& key, std::string_view payload) {
  const auto path = path_for(key);
  std::error_code ec;
  if (fs::exists(path, ec)) return false;
  fs::create_directories(path.parent_path(), ec);
  if (ec) throw Error(ErrorKind::Cache, "cannot create " + path.parent_path().string() + ": " + ec.message());

  const auto now = std::chrono::system_clock::now();
  const nlohmann::json doc{
      {"key", key},
      {"payload", std::string(payload)},
      {"fetched_at", std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count()}};

  thread_local std::mt19937_64 rng{std::random_device{}()};
  auto tmp = path;
  tmp += ".tmp." + std::to_string(rng());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Cache, "cannot write " + tmp.string());
    out << doc.dump();
    if (!out) throw Error(ErrorKind::Cache, "failed writing " + tmp.string());
  }
  // Hard-linking fails when the target exists, so the first writer stays authoritative.
  fs::create_hard_link(tmp, path, ec);
  const bool published = !ec;
  const bool lost_race = ec == std::errc::file_exists;
  std::error_code ignore;
  fs::remove(tmp, ignore);
  if (lost_race) return false;
  if (!published) throw Error(ErrorKind::Cache, "cannot publish " + path.string() + ": " + ec.message());
  return true;
}

std::size_t ResponseCache::entry_count() const {
  std::size_t n = 0;
  std::error_code ec;
  for (auto it = fs::recursive_directory_iterator(dir_, ec); !ec && it != fs::recursive_directory_iterator();
       it.increment(ec)) {
    if (it->is_regular_file() && it->path().extension() == ".json") ++n;
  }
  return n;
}

CacheStats ResponseCache::stats() const noexcept { return CacheStats{lookups_.load(), hits_.load()}; }

}  // namespace cellbench
