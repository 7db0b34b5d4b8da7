#include <charconv>
#include <fstream>
#include <istream>
#include <unordered_map>

#include "cellbench/corpus.hpp"
#include "cellbench/error.hpp"
#include "cellbench/text.hpp"

namespace cellbench {

namespace {

// Minimal CSV field splitter: handles double-quoted fields without embedded newlines.
std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

double parse_value(std::string_view s, std::size_t line_no) {
  s = text::trim(s);
  if (s.empty()) return 0.0;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": bad expression value '" + std::string(s) + "'");
  if (v < 0.0) throw Error(ErrorKind::Domain, "line " + std::to_string(line_no) + ": negative expression value");
  return v;
}

bool getline_stripped(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

}  // namespace

std::vector<ExpressionProfile> read_dense_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!getline_stripped(in, line)) return {};
  ++line_no;
  const auto header = split_csv_line(line);
  if (header.size() < 2) throw Error(ErrorKind::Parse, "line 1: header needs at least one cell id");

  std::vector<ExpressionProfile> cells(header.size() - 1);
  for (std::size_t c = 1; c < header.size(); ++c) cells[c - 1].cell_id = std::string(text::trim(header[c]));

  while (getline_stripped(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": expected " +
                                        std::to_string(header.size()) + " fields, got " +
                                        std::to_string(fields.size()));
    const auto gene = canonical_gene(fields[0]);
    if (gene.empty()) throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": empty gene symbol");
    for (std::size_t c = 1; c < fields.size(); ++c) {
      const double v = parse_value(fields[c], line_no);
      auto& slot = cells[c - 1].values[gene];
      slot += v;  // duplicate symbols after canonicalisation are summed
    }
  }
  return cells;
}

std::vector<ExpressionProfile> read_triplets(std::istream& in) {
  std::vector<ExpressionProfile> cells;
  std::unordered_map<std::string, std::size_t> index;
  std::string line;
  std::size_t line_no = 0;
  while (getline_stripped(in, line)) {
    ++line_no;
    const auto trimmed = text::trim(line);
    if (trimmed.empty() || trimmed.front() == '#') continue;
    const auto fields = split_csv_line(trimmed);
    if (fields.size() != 3)
      throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": expected gene,cell,value");
    if (line_no == 1 && text::to_lower(text::trim(fields[0])) == "gene" &&
        text::to_lower(text::trim(fields[2])) == "value")
      continue;
    const auto gene = canonical_gene(fields[0]);
    const std::string cell(text::trim(fields[1]));
    if (gene.empty() || cell.empty())
      throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": empty gene or cell id");
    const double v = parse_value(fields[2], line_no);
    auto [it, inserted] = index.emplace(cell, cells.size());
    if (inserted) cells.push_back(ExpressionProfile{cell, {}});
    cells[it->second].values[gene] += v;
  }
  return cells;
}

std::vector<ExpressionProfile> read_expression_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::string first;
  std::getline(in, first);
  in.clear();
  in.seekg(0);
  const auto ext = text::to_lower(path.extension().string());
  const auto head = text::to_lower(text::trim(first));
  if (head == "gene,cell,value" || ext == ".triplets" || ext == ".txt") return read_triplets(in);
  return read_dense_csv(in);
}

std::map<std::string, std::string> read_cell_conditions(std::istream& in) {
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t line_no = 0;
  while (getline_stripped(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() < 2) throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": expected cell,condition");
    const std::string cell(text::trim(fields[0]));
    const std::string condition(text::trim(fields[1]));
    if (line_no == 1 && text::to_lower(cell) == "cell") continue;
    out[cell] = condition;
  }
  return out;
}

}  // namespace cellbench
