#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cellbench/cache.hpp"
#include "cellbench/dataset.hpp"
#include "cellbench/http.hpp"
#include "cellbench/ontology.hpp"
#include "cellbench/task.hpp"

namespace cellbench {

enum class Source { CL, CellMarker, NCBI, UniProt, GO, PubMed };

std::string_view to_string(Source source) noexcept;
std::optional<Source> parse_source(std::string_view name) noexcept;

struct EvidenceItem {
  Source source = Source::CL;
  std::string key;
  std::string text;

  friend bool operator==(const EvidenceItem&, const EvidenceItem&) = default;
};

/// The external knowledge K handed to the judge for one instance.
struct KnowledgeBundle {
  Task task = Task::CTA;
  std::string instance_id;
  std::vector<EvidenceItem> items;
  std::size_t cache_lookups = 0;
  std::size_t cache_hits = 0;
};

/// Counters for one retrieval; threaded through fetches so concurrent retrievals don't mix.
struct FetchStats {
  std::size_t lookups = 0;
  std::size_t hits = 0;
};

/// Cell-type -> marker genes, ingested from a CellMarker tab-separated export.
/// Recognised headers: cell_name (or cellName), cellontology_id (optional) and
/// marker_genes / geneSymbol / Symbol. Marker cells may hold comma-separated lists.
class CellMarkerTable {
 public:
  static CellMarkerTable parse_tsv(std::istream& in);
  static CellMarkerTable load(const std::filesystem::path& path);

  void add(std::string_view cell_name, std::string_view ontology_id, const std::vector<std::string>& genes);

  /// Markers keyed by the normalized cell name (same normalization as term resolution).
  std::vector<std::string> markers_for_name(std::string_view name) const;
  /// Markers by ontology id first, then the term's name, then its synonyms.
  std::vector<std::string> markers_for_term(const OntologyGraph& graph, std::string_view curie) const;

  std::size_t size() const noexcept { return by_name_.size(); }

 private:
  static void merge(std::vector<std::string>& into, const std::vector<std::string>& genes);

  std::map<std::string, std::vector<std::string>> by_name_;
  std::map<std::string, std::vector<std::string>> by_id_;
};

/// Any provider of gene-level functional annotation.
class GeneInfoSource {
 public:
  virtual ~GeneInfoSource() = default;
  virtual std::vector<EvidenceItem> describe(const std::string& gene, FetchStats& stats) = 0;
};

/// Offline gene annotations from a TSV with columns gene, source (NCBI|UniProt|GO), text.
class GeneAnnotationTable final : public GeneInfoSource {
 public:
  static GeneAnnotationTable parse_tsv(std::istream& in);
  static GeneAnnotationTable load(const std::filesystem::path& path);

  std::vector<EvidenceItem> describe(const std::string& gene, FetchStats& stats) override;
  std::size_t size() const noexcept { return rows_.size(); }

 private:
  std::map<std::string, std::vector<EvidenceItem>> rows_;
};

struct FetcherOptions {
  std::string base_url;
  bool offline = false;
  RetryPolicy retry{};
  std::chrono::milliseconds timeout{std::chrono::seconds(30)};
};

/// GET with cache-first lookup, a shared per-source rate limiter and retry/backoff.
/// Responses are cached verbatim. Cache failures are logged and fall through to the network.
class CachedFetcher {
 public:
  CachedFetcher(std::string source_name, FetcherOptions options, ResponseCache* cache,
                std::shared_ptr<RateLimiter> limiter);

  /// nullopt when offline and uncached, or when the server answers 4xx.
  /// Throws Transport once retries are exhausted.
  std::optional<std::string> get(const std::string& path_and_query, FetchStats& stats);

  const std::string& source_name() const noexcept { return source_name_; }

 private:
  std::string source_name_;
  FetcherOptions options_;
  ResponseCache* cache_;
  std::shared_ptr<RateLimiter> limiter_;
};

/// NCBI E-utilities gene summaries (esearch + esummary).
class NcbiGeneClient final : public GeneInfoSource {
 public:
  explicit NcbiGeneClient(CachedFetcher& fetcher) : fetcher_(fetcher) {}
  std::vector<EvidenceItem> describe(const std::string& gene, FetchStats& stats) override;

 private:
  CachedFetcher& fetcher_;
};

/// UniProt REST: FUNCTION comment of the reviewed human entry.
class UniProtClient final : public GeneInfoSource {
 public:
  explicit UniProtClient(CachedFetcher& fetcher) : fetcher_(fetcher) {}
  std::vector<EvidenceItem> describe(const std::string& gene, FetchStats& stats) override;
  std::optional<std::string> accession(const std::string& gene, FetchStats& stats);

 private:
  std::optional<nlohmann::json> search(const std::string& gene, FetchStats& stats);
  CachedFetcher& fetcher_;
};

/// QuickGO annotations for the gene's UniProt accession, reported as GO term names.
class GoClient final : public GeneInfoSource {
 public:
  GoClient(CachedFetcher& quickgo, UniProtClient& uniprot) : quickgo_(quickgo), uniprot_(uniprot) {}
  std::vector<EvidenceItem> describe(const std::string& gene, FetchStats& stats) override;

 private:
  CachedFetcher& quickgo_;
  UniProtClient& uniprot_;
};

/// PubMed abstract text via E-utilities efetch.
class PubMedClient {
 public:
  explicit PubMedClient(CachedFetcher& fetcher) : fetcher_(fetcher) {}
  std::optional<std::string> abstract(const std::string& pmid, FetchStats& stats);

 private:
  CachedFetcher& fetcher_;
};

/// Ontology Lookup Service search restricted to the CL ontology.
class OlsSearch final : public TermSearch {
 public:
  explicit OlsSearch(CachedFetcher& fetcher) : fetcher_(fetcher) {}
  std::vector<std::string> search(std::string_view label) override;

 private:
  CachedFetcher& fetcher_;
};

inline constexpr std::size_t kDefaultPerturbationGeneCap = 25;
inline constexpr int kDefaultCaptionAncestorDepth = 3;

/// Read-only handles used to assemble bundles. Null members mean "source not configured".
struct KnowledgeSources {
  const CellMarkerTable* markers = nullptr;
  std::vector<GeneInfoSource*> gene_sources;
  PubMedClient* pubmed = nullptr;
  TermSearch* term_search = nullptr;
  std::size_t perturbation_gene_cap = kDefaultPerturbationGeneCap;
  int caption_ancestor_depth = kDefaultCaptionAncestorDepth;
};

/// Resolves the ontology term an instance is about (pre-resolved CURIE first, then label).
std::optional<std::string> resolve_truth_term(const TaskInstance& instance, const OntologyGraph& graph,
                                              TermSearch* search);

/// Builds K for one instance. Throws Bundle when the ground-truth term cannot be resolved
/// or no evidence can be assembled.
KnowledgeBundle retrieve_knowledge(const TaskInstance& instance, const OntologyGraph& graph,
                                   const KnowledgeSources& sources);

nlohmann::json to_json(const KnowledgeBundle& bundle);

}  // namespace cellbench
