#include "cellbench/ontology.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <limits>

#include <spdlog/spdlog.h>

#include "cellbench/error.hpp"
#include "cellbench/text.hpp"

namespace cellbench {

bool is_curie(std::string_view s) noexcept {
  const auto colon = s.find(':');
  if (colon == std::string_view::npos || colon == 0 || colon + 1 == s.size()) return false;
  for (std::size_t i = 0; i < colon; ++i) {
    if (!std::isalpha(static_cast<unsigned char>(s[i]))) return false;
  }
  for (std::size_t i = colon + 1; i < s.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  }
  return true;
}

std::string normalize_label(std::string_view label) {
  std::string lowered = text::to_lower(text::trim(label));

  // Drop "(...)" qualifiers, including nested ones.
  std::string stripped;
  int depth = 0;
  for (char c : lowered) {
    if (c == '(') {
      ++depth;
      stripped.push_back(' ');
    } else if (c == ')') {
      if (depth > 0) --depth;
      stripped.push_back(' ');
    } else if (depth == 0) {
      stripped.push_back(c);
    }
  }

  auto trimmed = std::string(text::trim(stripped));
  constexpr std::string_view kHuman = ", human";
  if (trimmed.size() >= kHuman.size() && trimmed.compare(trimmed.size() - kHuman.size(), kHuman.size(), kHuman) == 0)
    trimmed.resize(trimmed.size() - kHuman.size());

  for (auto& c : trimmed) {
    if (!std::isalnum(static_cast<unsigned char>(c))) c = ' ';
  }
  return text::collapse_whitespace(trimmed);
}

OntologyGraph OntologyGraph::from_terms(std::vector<OntologyTerm> terms) {
  std::sort(terms.begin(), terms.end(), [](const auto& a, const auto& b) { return a.id < b.id; });

  OntologyGraph g;
  g.terms_ = std::move(terms);
  const auto n = g.terms_.size();
  g.index_.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& t = g.terms_[i];
    if (!is_curie(t.id)) throw Error(ErrorKind::Parse, "malformed term id '" + t.id + "'");
    if (!g.index_.emplace(t.id, i).second) throw Error(ErrorKind::Parse, "duplicate term id " + t.id);
  }

  g.parents_.assign(n, {});
  g.neighbours_.assign(n, {});
  std::vector<std::string> dangling;
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& p : g.terms_[i].parents) {
      const auto it = g.index_.find(p);
      if (it == g.index_.end()) {
        dangling.push_back(g.terms_[i].id + " is_a " + p);
        continue;
      }
      g.parents_[i].push_back(it->second);
      g.neighbours_[i].push_back(it->second);
      g.neighbours_[it->second].push_back(i);
    }
  }
  if (!dangling.empty()) throw Error(ErrorKind::Link, "dangling is_a targets: " + text::join(dangling, ", "));

  for (std::size_t i = 0; i < n; ++i) {
    auto& ps = g.parents_[i];
    std::sort(ps.begin(), ps.end());
    ps.erase(std::unique(ps.begin(), ps.end()), ps.end());
    auto& ns = g.neighbours_[i];
    std::sort(ns.begin(), ns.end());
    ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
  }

  g.is_root_.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& t = g.terms_[i];
    if (!t.obsolete && g.parents_[i].empty()) {
      g.is_root_[i] = 1;
      g.roots_.push_back(t.id);
    }
    const auto name_key = normalize_label(t.name);
    if (!name_key.empty()) g.name_index_[name_key].push_back(i);
    for (const auto& syn : t.synonyms) {
      const auto key = normalize_label(syn);
      if (!key.empty()) g.synonym_index_[key].push_back(i);
    }
  }
  return g;
}

bool OntologyGraph::contains(std::string_view id) const { return index_.contains(std::string(id)); }

const OntologyTerm* OntologyGraph::find(std::string_view id) const {
  const auto it = index_.find(std::string(id));
  return it == index_.end() ? nullptr : &terms_[it->second];
}

const OntologyTerm& OntologyGraph::term(std::string_view id) const { return terms_[index_of(id)]; }

std::size_t OntologyGraph::index_of(std::string_view id) const {
  const auto it = index_.find(std::string(id));
  if (it == index_.end()) throw Error(ErrorKind::Lookup, "unknown ontology term " + std::string(id));
  return it->second;
}

std::optional<std::string> OntologyGraph::live_id(std::string_view id) const {
  const auto* t = find(id);
  if (!t) return std::nullopt;
  if (!t->obsolete) return t->id;
  if (t->replaced_by.empty()) return std::nullopt;
  const auto* r = find(t->replaced_by);
  if (!r || r->obsolete) return std::nullopt;
  return r->id;
}

std::optional<std::string> OntologyGraph::resolve_hit(const std::map<std::string, std::vector<std::size_t>>& index,
                                                      std::string_view normalized) const {
  const auto it = index.find(std::string(normalized));
  if (it == index.end()) return std::nullopt;
  // Live terms win over obsolete ones; indices are in id order.
  for (auto i : it->second) {
    if (!terms_[i].obsolete) return terms_[i].id;
  }
  for (auto i : it->second) {
    if (auto live = live_id(terms_[i].id)) return live;
  }
  return std::nullopt;
}

std::optional<std::string> OntologyGraph::match_name(std::string_view normalized) const {
  return resolve_hit(name_index_, normalized);
}

std::optional<std::string> OntologyGraph::match_synonym(std::string_view normalized) const {
  return resolve_hit(synonym_index_, normalized);
}

std::optional<int> OntologyGraph::distance(std::string_view a, std::string_view b) const {
  const auto src = index_of(a);
  const auto dst = index_of(b);
  if (src == dst) return 0;

  std::vector<int> dist(terms_.size(), -1);
  std::deque<std::size_t> queue{src};
  dist[src] = 0;
  while (!queue.empty()) {
    const auto u = queue.front();
    queue.pop_front();
    for (auto v : neighbours_[u]) {
      if (dist[v] >= 0) continue;
      dist[v] = dist[u] + 1;
      if (v == dst) return dist[v];
      queue.push_back(v);
    }
  }
  return std::nullopt;
}

int OntologyGraph::depth_to_root(std::string_view id) const {
  const auto path = path_to_root(id);
  return static_cast<int>(path.size()) - 1;
}

std::vector<std::string> OntologyGraph::path_to_root(std::string_view id) const {
  const auto start = index_of(id);
  constexpr auto kNone = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> via(terms_.size(), kNone);
  std::vector<char> seen(terms_.size(), 0);
  std::deque<std::size_t> queue{start};
  seen[start] = 1;
  while (!queue.empty()) {
    const auto u = queue.front();
    queue.pop_front();
    if (is_root_[u]) {
      std::vector<std::string> path;
      for (auto cur = u; cur != kNone; cur = via[cur]) path.push_back(terms_[cur].id);
      std::reverse(path.begin(), path.end());
      return path;
    }
    for (auto p : parents_[u]) {
      if (seen[p]) continue;
      seen[p] = 1;
      via[p] = u;
      queue.push_back(p);
    }
  }
  throw Error(ErrorKind::Unreachable, "no root reachable from " + std::string(id));
}

std::vector<std::pair<std::string, int>> OntologyGraph::ancestors_within(std::string_view id, int max_depth) const {
  const auto start = index_of(id);
  std::vector<int> dist(terms_.size(), -1);
  std::deque<std::size_t> queue{start};
  dist[start] = 0;
  std::vector<std::pair<std::string, int>> out;
  while (!queue.empty()) {
    const auto u = queue.front();
    queue.pop_front();
    if (dist[u] >= max_depth) continue;
    for (auto p : parents_[u]) {
      if (dist[p] >= 0) continue;
      dist[p] = dist[u] + 1;
      out.emplace_back(terms_[p].id, dist[p]);
      queue.push_back(p);
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second < b.second : a.first < b.first;
  });
  return out;
}

std::optional<std::string> resolve_term(const OntologyGraph& graph, std::string_view label, TermSearch* search) {
  const auto trimmed = text::trim(label);
  if (trimmed.empty()) throw Error(ErrorKind::Domain, "cannot resolve an empty label");

  if (is_curie(trimmed)) {
    if (auto live = graph.live_id(trimmed)) return live;
  }
  const auto key = normalize_label(trimmed);
  if (!key.empty()) {
    if (auto hit = graph.match_name(key)) return hit;
    if (auto hit = graph.match_synonym(key)) return hit;
  }
  if (search == nullptr) return std::nullopt;

  try {
    for (const auto& candidate : search->search(trimmed)) {
      if (!text::starts_with_icase(candidate, "CL:")) continue;
      if (auto live = graph.live_id(candidate)) return live;
    }
  } catch (const std::exception& e) {
    spdlog::warn("term search failed for '{}': {}", std::string(trimmed), e.what());
  }
  return std::nullopt;
}

std::optional<int> shortest_path_distance(const OntologyGraph& graph, std::string_view a, std::string_view b) {
  return graph.distance(a, b);
}

int depth_to_root(const OntologyGraph& graph, std::string_view id) { return graph.depth_to_root(id); }

}  // namespace cellbench
