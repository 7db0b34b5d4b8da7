#include "cellbench/knowledge.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <set>

#include <spdlog/spdlog.h>

#include "cellbench/error.hpp"
#include "cellbench/text.hpp"

namespace cellbench {

namespace {

constexpr std::string_view kSourceNames[] = {"CL", "CellMarker", "NCBI", "UniProt", "GO", "PubMed"};

std::vector<std::string> read_tsv_line(const std::string& line) {
  auto fields = text::split(line, '\t');
  for (auto& f : fields) f = std::string(text::trim(f));
  return fields;
}

std::optional<std::size_t> find_column(const std::vector<std::string>& header,
                                       std::initializer_list<std::string_view> names) {
  for (auto name : names) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (text::to_lower(header[i]) == name) return i;
    }
  }
  return std::nullopt;
}

// "[CD3D, CD3E]" or "CD3D,CD3E" -> {"CD3D", "CD3E"}
std::vector<std::string> split_gene_list(std::string_view cell) {
  std::string cleaned;
  for (char c : cell) {
    if (c == '[' || c == ']' || c == '"') continue;
    cleaned.push_back(c == ';' ? ',' : c);
  }
  std::vector<std::string> genes;
  for (const auto& part : text::split(cleaned, ',')) {
    auto gene = canonical_gene(part);
    if (!gene.empty() && gene != "NA") genes.push_back(gene);
  }
  return genes;
}

std::string normalize_ontology_id(std::string_view raw) {
  std::string id(text::trim(raw));
  const auto underscore = id.find('_');
  if (id.find(':') == std::string::npos && underscore != std::string::npos) id[underscore] = ':';
  return text::to_upper(id);
}

std::ifstream open_or_throw(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  return in;
}

std::string term_line(const OntologyTerm& term) {
  std::string line = term.name + " (" + term.id + ")";
  if (!term.definition.empty()) line += ": " + term.definition;
  return line;
}

class BundleBuilder {
 public:
  BundleBuilder(const TaskInstance& instance) {
    bundle_.task = instance.task;
    bundle_.instance_id = instance.id;
  }

  void add(Source source, std::string key, std::string text) {
    if (text::trim(text).empty()) return;
    if (!seen_.emplace(source, key).second) return;
    bundle_.items.push_back({source, std::move(key), std::move(text)});
  }

  KnowledgeBundle finish(const FetchStats& stats) {
    if (bundle_.items.empty())
      throw Error(ErrorKind::Bundle, "no evidence assembled for " + bundle_.instance_id);
    bundle_.cache_lookups = stats.lookups;
    bundle_.cache_hits = stats.hits;
    return std::move(bundle_);
  }

 private:
  KnowledgeBundle bundle_;
  std::set<std::pair<Source, std::string>> seen_;
};

std::string require_term(const TaskInstance& instance, const OntologyGraph& graph, TermSearch* search) {
  auto id = resolve_truth_term(instance, graph, search);
  if (!id)
    throw Error(ErrorKind::Bundle, "cannot resolve ground-truth cell type '" + truth_cell_type(instance) +
                                       "' of " + instance.id);
  return *id;
}

void add_path(BundleBuilder& out, const OntologyGraph& graph, const std::string& id) {
  auto path = graph.path_to_root(id);
  std::reverse(path.begin(), path.end());
  std::vector<std::string> names;
  for (const auto& step : path) names.push_back(graph.term(step).name);
  out.add(Source::CL, "path:" + id, "is_a path from root: " + text::join(names, " > "));
  for (const auto& step : path) out.add(Source::CL, step, term_line(graph.term(step)));
}

void add_caption_context(BundleBuilder& out, const OntologyGraph& graph, const std::string& id, int depth) {
  out.add(Source::CL, id, term_line(graph.term(id)));
  for (const auto& [ancestor, distance] : graph.ancestors_within(id, depth)) {
    out.add(Source::CL, ancestor, "ancestor at distance " + std::to_string(distance) + ": " +
                                      term_line(graph.term(ancestor)));
  }
}

void add_markers(BundleBuilder& out, const OntologyGraph& graph, const std::string& id,
                 const CellMarkerTable* markers) {
  const auto& term = graph.term(id);
  std::vector<std::string> genes;
  if (markers != nullptr) genes = markers->markers_for_term(graph, id);
  if (genes.empty()) {
    spdlog::warn("no curated markers for {} ({}); using the ontology definition", term.name, id);
    out.add(Source::CL, id, term_line(term));
    return;
  }
  for (const auto& gene : genes) out.add(Source::CellMarker, gene, gene + ": curated marker of " + term.name);
}

void add_gene_evidence(BundleBuilder& out, const PerturbationCase& truth, const KnowledgeSources& sources,
                       FetchStats& stats) {
  std::vector<std::string> genes;
  auto push = [&](const std::string& g) {
    if (genes.size() < sources.perturbation_gene_cap && std::find(genes.begin(), genes.end(), g) == genes.end())
      genes.push_back(g);
  };
  for (const auto& g : truth.targets) push(g);
  // Interleave directions so a cap keeps the strongest genes of both.
  const std::size_t longest = std::max(truth.up_genes.size(), truth.down_genes.size());
  for (std::size_t i = 0; i < longest; ++i) {
    if (i < truth.up_genes.size()) push(truth.up_genes[i]);
    if (i < truth.down_genes.size()) push(truth.down_genes[i]);
  }
  for (const auto& gene : genes) {
    for (auto* source : sources.gene_sources) {
      for (auto& item : source->describe(gene, stats)) out.add(item.source, std::move(item.key), std::move(item.text));
    }
  }
}

}  // namespace

std::string_view to_string(Source source) noexcept { return kSourceNames[static_cast<int>(source)]; }

std::optional<Source> parse_source(std::string_view name) noexcept {
  const auto lowered = text::to_lower(text::trim(name));
  for (int i = 0; i < 6; ++i) {
    if (text::to_lower(kSourceNames[i]) == lowered) return static_cast<Source>(i);
  }
  return std::nullopt;
}

// CellMarkerTable

void CellMarkerTable::merge(std::vector<std::string>& into, const std::vector<std::string>& genes) {
  for (const auto& g : genes) {
    if (std::find(into.begin(), into.end(), g) == into.end()) into.push_back(g);
  }
}

void CellMarkerTable::add(std::string_view cell_name, std::string_view ontology_id,
                          const std::vector<std::string>& genes) {
  const auto key = normalize_label(cell_name);
  if (key.empty() || genes.empty()) return;
  merge(by_name_[key], genes);
  const auto id = normalize_ontology_id(ontology_id);
  if (is_curie(id)) merge(by_id_[id], genes);
}

CellMarkerTable CellMarkerTable::parse_tsv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::Parse, "marker table is empty");
  const auto header = read_tsv_line(line);
  const auto name_col = find_column(header, {"cell_name", "cellname", "cell name", "cell_type"});
  const auto id_col = find_column(header, {"cellontology_id", "cell_ontology_id", "ontology_id"});
  const auto gene_col = find_column(header, {"marker_genes", "markers", "genesymbol", "symbol", "marker"});
  if (!name_col || !gene_col) throw Error(ErrorKind::Parse, "marker table header needs a cell name and a marker column");

  CellMarkerTable table;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const auto fields = read_tsv_line(line);
    if (fields.size() <= std::max(*name_col, *gene_col))
      throw Error(ErrorKind::Parse, "marker table line " + std::to_string(line_no) + ": too few columns");
    const std::string id = id_col && *id_col < fields.size() ? fields[*id_col] : std::string();
    table.add(fields[*name_col], id, split_gene_list(fields[*gene_col]));
  }
  return table;
}

CellMarkerTable CellMarkerTable::load(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  return parse_tsv(in);
}

std::vector<std::string> CellMarkerTable::markers_for_name(std::string_view name) const {
  const auto it = by_name_.find(normalize_label(name));
  return it == by_name_.end() ? std::vector<std::string>{} : it->second;
}

std::vector<std::string> CellMarkerTable::markers_for_term(const OntologyGraph& graph, std::string_view curie) const {
  if (auto it = by_id_.find(std::string(curie)); it != by_id_.end()) return it->second;
  const auto* term = graph.find(curie);
  if (term == nullptr) return {};
  if (auto hit = markers_for_name(term->name); !hit.empty()) return hit;
  for (const auto& synonym : term->synonyms) {
    if (auto hit = markers_for_name(synonym); !hit.empty()) return hit;
  }
  return {};
}

// GeneAnnotationTable

GeneAnnotationTable GeneAnnotationTable::parse_tsv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::Parse, "gene annotation table is empty");
  const auto header = read_tsv_line(line);
  const auto gene_col = find_column(header, {"gene", "symbol"});
  const auto source_col = find_column(header, {"source"});
  const auto text_col = find_column(header, {"text", "summary"});
  if (!gene_col || !source_col || !text_col)
    throw Error(ErrorKind::Parse, "gene annotation header needs gene, source and text columns");

  GeneAnnotationTable table;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const auto fields = read_tsv_line(line);
    const auto where = "gene annotation line " + std::to_string(line_no);
    if (fields.size() <= std::max({*gene_col, *source_col, *text_col}))
      throw Error(ErrorKind::Parse, where + ": too few columns");
    const auto source = parse_source(fields[*source_col]);
    if (!source || (*source != Source::NCBI && *source != Source::UniProt && *source != Source::GO))
      throw Error(ErrorKind::Parse, where + ": unsupported source '" + fields[*source_col] + "'");
    const auto gene = canonical_gene(fields[*gene_col]);
    auto& rows = table.rows_[gene];
    const auto key = text::to_lower(to_string(*source)) + ":" + gene;
    const auto dup = std::find_if(rows.begin(), rows.end(), [&](const EvidenceItem& e) { return e.key == key; });
    if (dup != rows.end()) {
      dup->text += " " + fields[*text_col];
    } else {
      rows.push_back({*source, key, fields[*text_col]});
    }
  }
  return table;
}

GeneAnnotationTable GeneAnnotationTable::load(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  return parse_tsv(in);
}

std::vector<EvidenceItem> GeneAnnotationTable::describe(const std::string& gene, FetchStats&) {
  const auto it = rows_.find(canonical_gene(gene));
  return it == rows_.end() ? std::vector<EvidenceItem>{} : it->second;
}

// Retrieval

std::optional<std::string> resolve_truth_term(const TaskInstance& instance, const OntologyGraph& graph,
                                              TermSearch* search) {
  const auto curie = truth_curie(instance);
  if (!curie.empty()) {
    if (auto live = graph.live_id(curie)) return live;
  }
  const auto label = truth_cell_type(instance);
  if (text::trim(label).empty()) return std::nullopt;
  return resolve_term(graph, label, search);
}

KnowledgeBundle retrieve_knowledge(const TaskInstance& instance, const OntologyGraph& graph,
                                   const KnowledgeSources& sources) {
  BundleBuilder out(instance);
  FetchStats stats;

  switch (instance.task) {
    case Task::CTA:
      add_path(out, graph, require_term(instance, graph, sources.term_search));
      break;
    case Task::CC:
      add_caption_context(out, graph, require_term(instance, graph, sources.term_search),
                          sources.caption_ancestor_depth);
      break;
    case Task::CG:
      add_markers(out, graph, require_term(instance, graph, sources.term_search), sources.markers);
      break;
    case Task::PP: {
      const auto& truth = std::get<PerturbationCase>(instance.ground_truth);
      if (truth.targets.empty()) throw Error(ErrorKind::Bundle, "no perturbation target for " + instance.id);
      add_gene_evidence(out, truth, sources, stats);
      break;
    }
    case Task::SQA: {
      const auto& truth = std::get<QaTruth>(instance.ground_truth);
      if (text::trim(truth.evidence).empty()) throw Error(ErrorKind::Bundle, "no evidence excerpt for " + instance.id);
      const auto ref = truth.pmid.empty() ? instance.id : truth.pmid;
      std::string abstract = truth.abstract_text;
      if (abstract.empty() && !truth.pmid.empty() && sources.pubmed != nullptr) {
        abstract = sources.pubmed->abstract(truth.pmid, stats).value_or("");
      }
      out.add(Source::PubMed, "abstract:" + ref, abstract);
      out.add(Source::PubMed, "excerpt:" + ref, truth.evidence);
      break;
    }
  }
  return out.finish(stats);
}

nlohmann::json to_json(const KnowledgeBundle& bundle) {
  auto items = nlohmann::json::array();
  for (const auto& item : bundle.items) {
    items.push_back({{"source", to_string(item.source)}, {"key", item.key}, {"text", item.text}});
  }
  return {{"task", to_string(bundle.task)},
          {"instance_id", bundle.instance_id},
          {"items", std::move(items)},
          {"cache", {{"hits", bundle.cache_hits}, {"lookups", bundle.cache_lookups}}}};
}

}  // namespace cellbench
