#include <istream>

#include "cellbench/error.hpp"
#include "cellbench/ontology.hpp"
#include "cellbench/text.hpp"

namespace cellbench {

namespace {

// Text of the first double-quoted string in `value`, honouring backslash escapes.
std::string quoted_text(std::string_view value) {
  const auto open = value.find('"');
  if (open == std::string_view::npos) return std::string(text::trim(value));
  std::string out;
  for (std::size_t i = open + 1; i < value.size(); ++i) {
    const char c = value[i];
    if (c == '\\' && i + 1 < value.size()) {
      out.push_back(value[++i]);
    } else if (c == '"') {
      break;
    } else {
      out.push_back(c);
    }
  }
  return out;
}

// Drops a trailing "! comment" and "{qualifiers}" block.
std::string strip_trailing(std::string_view value) {
  if (const auto bang = value.find(" !"); bang != std::string_view::npos) value = value.substr(0, bang);
  if (const auto brace = value.find('{'); brace != std::string_view::npos) value = value.substr(0, brace);
  return std::string(text::trim(value));
}

}  // namespace

OntologyGraph parse_obo(std::istream& in) {
  std::vector<OntologyTerm> terms;
  OntologyTerm current;
  bool in_term = false;
  bool have_id = false;
  std::size_t stanza_line = 0;

  const auto flush = [&] {
    if (in_term) {
      if (!have_id) throw Error(ErrorKind::Parse, "[Term] stanza at line " + std::to_string(stanza_line) + " has no id");
      terms.push_back(std::move(current));
    }
    current = OntologyTerm{};
    have_id = false;
  };

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto trimmed = text::trim(line);
    if (trimmed.empty() || trimmed.front() == '!') continue;

    if (trimmed.front() == '[') {
      flush();
      in_term = trimmed == "[Term]";
      stanza_line = line_no;
      continue;
    }
    if (!in_term) continue;

    const auto colon = trimmed.find(':');
    if (colon == std::string_view::npos) continue;
    const auto tag = text::trim(trimmed.substr(0, colon));
    const auto value = text::trim(trimmed.substr(colon + 1));

    if (tag == "id") {
      current.id = strip_trailing(value);
      have_id = !current.id.empty();
    } else if (tag == "name") {
      current.name = std::string(value);
    } else if (tag == "is_a") {
      auto parent = strip_trailing(value);
      if (!parent.empty()) current.parents.push_back(std::move(parent));
    } else if (tag == "synonym") {
      auto syn = quoted_text(value);
      if (!syn.empty()) current.synonyms.push_back(std::move(syn));
    } else if (tag == "def") {
      current.definition = quoted_text(value);
    } else if (tag == "is_obsolete") {
      current.obsolete = text::to_lower(value) == "true";
    } else if (tag == "replaced_by") {
      current.replaced_by = strip_trailing(value);
    }
  }
  flush();
  return OntologyGraph::from_terms(std::move(terms));
}

}  // namespace cellbench
