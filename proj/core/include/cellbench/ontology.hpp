#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace cellbench {

struct OntologyTerm {
  std::string id;  // CURIE, e.g. "CL:0000623"
  std::string name;
  std::vector<std::string> synonyms;
  std::string definition;
  std::vector<std::string> parents;  // is_a targets
  bool obsolete = false;
  std::string replaced_by;
};

/// Immutable is_a hierarchy. Only is_a edges take part in distance and depth queries.
class OntologyGraph {
 public:
  OntologyGraph() = default;

  /// Builds indices and adjacency. Throws Link listing every dangling is_a target,
  /// Parse on duplicate or malformed ids.
  static OntologyGraph from_terms(std::vector<OntologyTerm> terms);

  std::size_t size() const noexcept { return terms_.size(); }
  bool empty() const noexcept { return terms_.empty(); }
  bool contains(std::string_view id) const;

  const OntologyTerm* find(std::string_view id) const;
  /// Throws Lookup for unknown ids.
  const OntologyTerm& term(std::string_view id) const;

  std::span<const OntologyTerm> terms() const noexcept { return terms_; }
  const std::vector<std::string>& root_ids() const noexcept { return roots_; }

  /// Exact match on a normalized label (see normalize_label). Obsolete hits resolve via
  /// replaced_by once; otherwise they are not returned.
  std::optional<std::string> match_name(std::string_view normalized) const;
  std::optional<std::string> match_synonym(std::string_view normalized) const;
  /// Maps an obsolete id to its replacement (followed once); live ids map to themselves.
  std::optional<std::string> live_id(std::string_view id) const;

  /// BFS shortest path over undirected is_a edges. nullopt when disconnected.
  /// Throws Lookup for unknown ids.
  std::optional<int> distance(std::string_view a, std::string_view b) const;

  /// Minimum directed is_a path length to any root. Throws Unreachable if no root is reachable.
  int depth_to_root(std::string_view id) const;

  /// One shortest upward path, starting at `id` and ending at a root. Parents are
  /// explored in id order, so the path is deterministic.
  std::vector<std::string> path_to_root(std::string_view id) const;

  /// Ancestors with their upward distance, 1 <= distance <= max_depth, ordered by
  /// (distance, id).
  std::vector<std::pair<std::string, int>> ancestors_within(std::string_view id, int max_depth) const;

 private:
  std::size_t index_of(std::string_view id) const;
  std::optional<std::string> resolve_hit(const std::map<std::string, std::vector<std::size_t>>& index,
                                         std::string_view normalized) const;

  std::vector<OntologyTerm> terms_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::vector<std::size_t>> parents_;
  std::vector<std::vector<std::size_t>> neighbours_;
  std::map<std::string, std::vector<std::size_t>> name_index_;
  std::map<std::string, std::vector<std::size_t>> synonym_index_;
  std::vector<std::string> roots_;
  std::vector<char> is_root_;
};

/// Parses OBO 1.2 [Term] stanzas (id, name, is_a, synonym, def, is_obsolete, replaced_by).
/// Other tags and stanza types are ignored.
OntologyGraph parse_obo(std::istream& in);

/// `^[A-Za-z]+:[0-9]+$`
bool is_curie(std::string_view s) noexcept;

/// Lowercase, drop parenthetical qualifiers and a trailing ", human", turn punctuation into
/// spaces, collapse whitespace.
std::string normalize_label(std::string_view label);

/// Free-text term search (the Ontology Lookup Service in production).
class TermSearch {
 public:
  virtual ~TermSearch() = default;
  /// Candidate CURIEs, best first. May throw Transport.
  virtual std::vector<std::string> search(std::string_view label) = 0;
};

/// Resolution cascade: CURIE present in graph, exact name, synonym, then the optional
/// search service (first CL hit present in the graph). Search failures degrade to a miss.
std::optional<std::string> resolve_term(const OntologyGraph& graph, std::string_view label,
                                        TermSearch* search = nullptr);

std::optional<int> shortest_path_distance(const OntologyGraph& graph, std::string_view a, std::string_view b);
int depth_to_root(const OntologyGraph& graph, std::string_view id);

}  // namespace cellbench
