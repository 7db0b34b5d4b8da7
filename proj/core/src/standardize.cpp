#include <algorithm>
#include <cctype>
#include <optional>

#include <spdlog/spdlog.h>

#include "cellbench/adapter.hpp"
#include "cellbench/error.hpp"
#include "cellbench/text.hpp"

namespace cellbench {

using nlohmann::json;

namespace {

constexpr std::size_t kMaxLabelWords = 12;

// Value of "[Name: ...]", matched case-insensitively; nested brackets are kept.
std::optional<std::string> bracket_field(std::string_view raw, std::string_view name) {
  const auto lowered = text::to_lower(raw);
  const auto needle = "[" + text::to_lower(name);
  std::size_t pos = 0;
  while ((pos = lowered.find(needle, pos)) != std::string::npos) {
    std::size_t cursor = pos + needle.size();
    while (cursor < raw.size() && raw[cursor] == ' ') ++cursor;
    if (cursor >= raw.size() || raw[cursor] != ':') {
      pos = cursor;
      continue;
    }
    ++cursor;
    int depth = 1;
    std::size_t end = cursor;
    for (; end < raw.size(); ++end) {
      if (raw[end] == '[') ++depth;
      if (raw[end] == ']' && --depth == 0) break;
    }
    return text::collapse_whitespace(raw.substr(cursor, end - cursor));
  }
  return std::nullopt;
}

bool has_letter(std::string_view s) {
  return std::any_of(s.begin(), s.end(), [](unsigned char c) { return std::isalpha(c); });
}

std::string strip_decoration(std::string_view s) {
  auto t = text::trim(s);
  const auto junk = [](char c) { return c == '*' || c == '"' || c == '\'' || c == '`' || c == '.' || c == ':' || c == '_'; };
  while (!t.empty() && junk(t.front())) t.remove_prefix(1);
  while (!t.empty() && junk(t.back())) t.remove_suffix(1);
  return text::collapse_whitespace(t);
}

bool looks_like_gene(std::string_view token) {
  if (token.empty() || token.size() > 20) return false;
  if (!std::isalnum(static_cast<unsigned char>(token.front()))) return false;
  bool letter = false;
  for (unsigned char c : token) {
    if (std::isalpha(c)) letter = true;
    if (!std::isalnum(c) && c != '-' && c != '.' && c != '_') return false;
  }
  return letter;
}

std::vector<std::string> gene_list(std::string_view field) {
  std::string cleaned(field);
  for (auto& c : cleaned) {
    if (c == ',' || c == ';' || c == '\n' || c == '\t' || c == '|') c = ' ';
  }
  std::vector<std::string> genes;
  for (const auto& token : text::split_whitespace(cleaned)) {
    const auto symbol = canonical_gene(strip_decoration(token));
    if (symbol == "NONE" || symbol == "N/A" || symbol == "NA" || !looks_like_gene(symbol)) continue;
    if (std::find(genes.begin(), genes.end(), symbol) == genes.end()) genes.push_back(symbol);
  }
  return genes;
}

std::vector<std::string> nonempty_lines(std::string_view raw) {
  std::vector<std::string> lines;
  for (const auto& line : text::split(raw, '\n')) {
    auto t = strip_decoration(line);
    if (!t.empty()) lines.push_back(std::move(t));
  }
  return lines;
}

std::string cell_type_fallback(std::string_view raw) {
  const auto lowered = text::to_lower(raw);
  const auto marker = lowered.rfind("cell type is");
  if (marker != std::string::npos) {
    auto rest = raw.substr(marker + std::string_view("cell type is").size());
    const auto stop = rest.find_first_of(".\n;");
    if (stop != std::string_view::npos) rest = rest.substr(0, stop);
    auto label = strip_decoration(rest);
    for (std::string_view article : {"a ", "an ", "the "}) {
      if (text::starts_with_icase(label, article)) {
        label = label.substr(article.size());
        break;
      }
    }
    if (!label.empty()) return label;
  }
  const auto lines = nonempty_lines(raw);
  return lines.empty() ? std::string() : lines.back();
}

std::optional<std::string> prefixed_line(std::string_view raw, std::string_view prefix) {
  for (const auto& line : text::split(raw, '\n')) {
    const auto stripped = strip_decoration(line);
    if (!text::starts_with_icase(stripped, prefix)) continue;
    const auto colon = stripped.find(':');
    if (colon != std::string::npos) return stripped.substr(colon + 1);
  }
  return std::nullopt;
}

CellTypePrediction standardize_cta(std::string_view raw) {
  auto label = bracket_field(raw, "Predicted_Cell_Type").value_or(cell_type_fallback(raw));
  label = strip_decoration(label);
  if (!has_letter(label) || text::split_whitespace(label).size() > kMaxLabelWords)
    throw Error(ErrorKind::Standardization, "no cell type label in reply");
  return {label};
}

GeneratedCellPrediction standardize_cg(std::string_view raw, std::size_t max_genes) {
  auto field = bracket_field(raw, "Cell_Sentence");
  auto genes = gene_list(field ? *field : raw);
  if (genes.size() > max_genes) genes.resize(max_genes);
  if (genes.empty()) throw Error(ErrorKind::Standardization, "no genes in reply");
  return {std::move(genes)};
}

PerturbationPrediction standardize_pp(std::string_view raw, std::vector<std::string>& conflicts) {
  auto up_field = bracket_field(raw, "Up");
  auto down_field = bracket_field(raw, "Down");
  if (!up_field) up_field = prefixed_line(raw, "up");
  if (!down_field) down_field = prefixed_line(raw, "down");
  if (!up_field && !down_field) throw Error(ErrorKind::Standardization, "no up/down gene lists in reply");

  PerturbationPrediction p;
  p.up = gene_list(up_field.value_or(""));
  p.down = gene_list(down_field.value_or(""));
  if (auto sentence = bracket_field(raw, "Perturbed_Cell_Sentence")) p.perturbed_sentence = gene_list(*sentence);

  for (const auto& g : p.up) {
    if (std::find(p.down.begin(), p.down.end(), g) != p.down.end()) conflicts.push_back(g);
  }
  if (!conflicts.empty()) {
    spdlog::warn("dropping genes listed as both up and down: {}", text::join(conflicts, ", "));
    const auto conflicting = [&](const std::string& g) {
      return std::find(conflicts.begin(), conflicts.end(), g) != conflicts.end();
    };
    std::erase_if(p.up, conflicting);
    std::erase_if(p.down, conflicting);
  }
  return p;
}

std::string free_text(std::string_view raw, std::string_view field) {
  auto value = bracket_field(raw, field).value_or(text::collapse_whitespace(raw));
  if (!has_letter(value)) throw Error(ErrorKind::Standardization, "no " + std::string(field) + " text in reply");
  return value;
}

}  // namespace

ModelResponse standardize_response(Task task, std::string_view raw, std::size_t cg_max_genes) {
  if (text::trim(raw).empty()) throw Error(ErrorKind::Standardization, "reply is empty");
  ModelResponse r;
  r.task = task;
  r.raw = std::string(raw);
  switch (task) {
    case Task::CTA:
      r.payload = standardize_cta(raw);
      break;
    case Task::CC:
      r.payload = CaptionPrediction{free_text(raw, "Caption")};
      break;
    case Task::CG:
      r.payload = standardize_cg(raw, cg_max_genes);
      break;
    case Task::PP:
      r.payload = standardize_pp(raw, r.conflicts);
      break;
    case Task::SQA:
      r.payload = AnswerPrediction{free_text(raw, "Answer")};
      break;
  }
  return r;
}

std::string to_schema_text(const ModelResponse& response) {
  struct Visitor {
    std::string operator()(const CellTypePrediction& p) const { return "[Predicted_Cell_Type: " + p.label + "]"; }
    std::string operator()(const CaptionPrediction& p) const { return "[Caption: " + p.caption + "]"; }
    std::string operator()(const GeneratedCellPrediction& p) const {
      return "[Cell_Sentence: " + text::join(p.genes, ", ") + "]";
    }
    std::string operator()(const PerturbationPrediction& p) const {
      std::string s = "[Up: " + text::join(p.up, ", ") + "]\n[Down: " + text::join(p.down, ", ") + "]";
      if (!p.perturbed_sentence.empty()) s += "\n[Perturbed_Cell_Sentence: " + text::join(p.perturbed_sentence, ", ") + "]";
      return s;
    }
    std::string operator()(const AnswerPrediction& p) const { return "[Answer: " + p.answer + "]"; }
  };
  return std::visit(Visitor{}, response.payload);
}

json to_json(const ModelResponse& response) {
  json payload;
  struct Visitor {
    json& out;
    void operator()(const CellTypePrediction& p) const { out = {{"label", p.label}}; }
    void operator()(const CaptionPrediction& p) const { out = {{"caption", p.caption}}; }
    void operator()(const GeneratedCellPrediction& p) const { out = {{"genes", p.genes}}; }
    void operator()(const PerturbationPrediction& p) const {
      out = {{"up", p.up}, {"down", p.down}, {"perturbed_sentence", p.perturbed_sentence}};
    }
    void operator()(const AnswerPrediction& p) const { out = {{"answer", p.answer}}; }
  };
  std::visit(Visitor{payload}, response.payload);
  return {{"task", to_string(response.task)},
          {"payload", std::move(payload)},
          {"raw", response.raw},
          {"conflicts", response.conflicts}};
}

ModelResponse response_from_json(const json& j) {
  try {
    ModelResponse r;
    const auto task = parse_task(j.at("task").get<std::string>());
    if (!task) throw Error(ErrorKind::Schema, "unknown task in response record");
    r.task = *task;
    r.raw = j.value("raw", std::string());
    r.conflicts = j.value("conflicts", std::vector<std::string>{});
    const auto& p = j.at("payload");
    switch (r.task) {
      case Task::CTA:
        r.payload = CellTypePrediction{p.at("label").get<std::string>()};
        break;
      case Task::CC:
        r.payload = CaptionPrediction{p.at("caption").get<std::string>()};
        break;
      case Task::CG:
        r.payload = GeneratedCellPrediction{p.at("genes").get<std::vector<std::string>>()};
        break;
      case Task::PP:
        r.payload = PerturbationPrediction{p.at("up").get<std::vector<std::string>>(),
                                           p.at("down").get<std::vector<std::string>>(),
                                           p.value("perturbed_sentence", std::vector<std::string>{})};
        break;
      case Task::SQA:
        r.payload = AnswerPrediction{p.at("answer").get<std::string>()};
        break;
    }
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Schema, std::string("malformed response record: ") + e.what());
  }
}

}  // namespace cellbench
