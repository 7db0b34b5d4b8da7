#include "cellbench/journal.hpp"

#include <sstream>

#include <spdlog/spdlog.h>

#include "cellbench/error.hpp"
#include "cellbench/text.hpp"

namespace cellbench {

namespace fs = std::filesystem;
using nlohmann::json;

JsonlJournal::JsonlJournal(fs::path path) : path_(std::move(path)) {
  if (path_.has_parent_path()) fs::create_directories(path_.parent_path());
}

std::vector<json> JsonlJournal::recover() {
  std::lock_guard lock(mutex_);
  std::vector<json> records;
  if (!fs::exists(path_)) return records;
  std::ifstream in(path_, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot read journal " + path_.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  const auto content = buffer.str();
  in.close();

  std::size_t good_end = 0;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < content.size()) {
    const auto nl = content.find('\n', pos);
    ++line_no;
    if (nl == std::string::npos) {
      spdlog::warn("{}: dropping unterminated final line", path_.string());
      break;
    }
    const auto line = std::string_view(content).substr(pos, nl - pos);
    if (!text::trim(line).empty()) {
      auto record = json::parse(line, nullptr, false);
      if (record.is_discarded()) {
        const bool last = nl + 1 >= content.size();
        if (!last) throw Error(ErrorKind::Parse, path_.string() + ":" + std::to_string(line_no) + ": corrupt record");
        spdlog::warn("{}: dropping corrupt final line", path_.string());
        break;
      }
      records.push_back(std::move(record));
    }
    pos = nl + 1;
    good_end = pos;
  }
  if (good_end < content.size()) fs::resize_file(path_, good_end);
  return records;
}

void JsonlJournal::append(const json& record) {
  const auto line = record.dump();
  std::lock_guard lock(mutex_);
  if (!out_.is_open()) {
    out_.open(path_, std::ios::app | std::ios::binary);
    if (!out_) throw Error(ErrorKind::Io, "cannot open journal " + path_.string());
  }
  out_ << line << '\n';
  out_.flush();
  if (!out_) throw Error(ErrorKind::Io, "write failed on " + path_.string());
}

void JsonlJournal::close() {
  std::lock_guard lock(mutex_);
  if (out_.is_open()) out_.close();
}

std::vector<json> read_jsonl(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::vector<json> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    auto record = json::parse(line, nullptr, false);
    if (record.is_discarded())
      throw Error(ErrorKind::Parse, path.string() + ":" + std::to_string(line_no) + ": invalid JSON");
    records.push_back(std::move(record));
  }
  return records;
}

void write_text_atomic(const fs::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create " + path.parent_path().string() + ": " + ec.message());
  const auto tmp = fs::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw Error(ErrorKind::Io, "write failed on " + tmp.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot replace " + path.string() + ": " + ec.message());
}

void write_jsonl_atomic(const fs::path& path, const std::vector<json>& records) {
  std::string content;
  for (const auto& r : records) content += r.dump() + '\n';
  write_text_atomic(path, content);
}

}  // namespace cellbench
