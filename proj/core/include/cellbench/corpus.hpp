#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cellbench {

/// Library-normalized expression for one cell (or one aggregate of cells).
/// Gene symbols are canonical (trimmed, uppercase).
struct ExpressionProfile {
  std::string cell_id;
  std::map<std::string, double> values;

  /// Throws Domain on negative/non-finite values or empty gene symbols.
  void validate() const;
  bool has_signal() const noexcept;
};

/// Rank-ordered gene list, highest expression first.
struct CellSentence {
  std::string cell_id;
  std::vector<std::string> genes;
  std::map<std::string, std::string> metadata;

  friend bool operator==(const CellSentence&, const CellSentence&) = default;
};

struct DegSets {
  std::vector<std::string> up;    // ordered by fold change, strongest first
  std::vector<std::string> down;  // ordered by |fold change|, strongest first

  friend bool operator==(const DegSets&, const DegSets&) = default;
};

struct PerturbationCase {
  std::string perturbation_id;
  std::vector<std::string> targets;
  CellSentence control_sentence;
  CellSentence perturbed_sentence;
  std::vector<std::string> up_genes;
  std::vector<std::string> down_genes;

  /// Throws Schema when targets are empty or up/down overlap.
  void validate() const;

  friend bool operator==(const PerturbationCase&, const PerturbationCase&) = default;
};

inline constexpr std::size_t kDefaultSentenceLength = 100;
inline constexpr double kDefaultLfcThreshold = 1.0;
inline constexpr std::size_t kDefaultMaxDegsPerDirection = 20;

/// Trim and uppercase a gene symbol.
std::string canonical_gene(std::string_view symbol);

/// Top-k strictly positive genes by expression, ties broken by ascending symbol.
/// Throws EmptyProfile when no gene is expressed, Domain when k == 0.
CellSentence to_cell_sentence(const ExpressionProfile& profile, std::size_t k = kDefaultSentenceLength);

/// Per-gene arithmetic mean over the union of genes; missing genes count as 0.
ExpressionProfile mean_profile(std::span<const ExpressionProfile> profiles, std::string cell_id = "mean");

/// Pseudocount-1 log2 fold change of perturbed over control.
double log2_fold_change(double control, double perturbed) noexcept;

/// Genes with log2((perturbed+1)/(control+1)) >= threshold are up, <= -threshold are down.
/// Each direction keeps the max_per_direction strongest genes (ties by symbol).
DegSets extract_degs(const ExpressionProfile& control, const ExpressionProfile& perturbed,
                     double lfc_threshold = kDefaultLfcThreshold,
                     std::size_t max_per_direction = kDefaultMaxDegsPerDirection);

/// Dense CSV: header row of cell ids (first cell is a label), first column gene symbols.
std::vector<ExpressionProfile> read_dense_csv(std::istream& in);
/// Sparse triplets: one "gene,cell,value" per line; an optional header is skipped.
std::vector<ExpressionProfile> read_triplets(std::istream& in);
/// Picks the reader from the header line / extension (.triplets, .txt => triplets).
std::vector<ExpressionProfile> read_expression_file(const std::filesystem::path& path);

/// Two-column CSV "cell,condition" (header optional) mapping cells to a perturbation label.
std::map<std::string, std::string> read_cell_conditions(std::istream& in);

struct PerturbationBuildOptions {
  std::string control_label = "control";
  std::size_t sentence_length = kDefaultSentenceLength;
  double lfc_threshold = kDefaultLfcThreshold;
  std::size_t max_per_direction = kDefaultMaxDegsPerDirection;
};

/// Groups cells by condition, averages control and each perturbation, and derives the
/// sentences and DEG sets. Targets come from the condition label split on '+'.
std::vector<PerturbationCase> build_perturbation_cases(std::span<const ExpressionProfile> cells,
                                                       const std::map<std::string, std::string>& conditions,
                                                       const PerturbationBuildOptions& options = {});

}  // namespace cellbench
