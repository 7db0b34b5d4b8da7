#include "cellbench/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "cellbench/error.hpp"
#include "cellbench/text.hpp"

namespace cellbench {

void ExpressionProfile::validate() const {
  for (const auto& [gene, value] : values) {
    if (gene.empty()) throw Error(ErrorKind::Domain, "profile " + cell_id + " has an empty gene symbol");
    if (!std::isfinite(value) || value < 0.0)
      throw Error(ErrorKind::Domain, "profile " + cell_id + " has invalid value for " + gene);
  }
}

bool ExpressionProfile::has_signal() const noexcept {
  return std::any_of(values.begin(), values.end(), [](const auto& kv) { return kv.second > 0.0; });
}

void PerturbationCase::validate() const {
  if (targets.empty()) throw Error(ErrorKind::Schema, "perturbation " + perturbation_id + " has no targets");
  const std::set<std::string> up(up_genes.begin(), up_genes.end());
  for (const auto& g : down_genes) {
    if (up.contains(g))
      throw Error(ErrorKind::Schema, "perturbation " + perturbation_id + " lists " + g + " as both up and down");
  }
}

std::string canonical_gene(std::string_view symbol) { return text::to_upper(text::trim(symbol)); }

CellSentence to_cell_sentence(const ExpressionProfile& profile, std::size_t k) {
  if (k == 0) throw Error(ErrorKind::Domain, "cell sentence length must be >= 1");
  profile.validate();

  std::vector<std::pair<std::string, double>> expressed;
  for (const auto& [gene, value] : profile.values) {
    if (value > 0.0) expressed.emplace_back(gene, value);
  }
  if (expressed.empty()) throw Error(ErrorKind::EmptyProfile, "profile " + profile.cell_id + " has no expressed genes");

  const auto keep = std::min(k, expressed.size());
  std::partial_sort(expressed.begin(), expressed.begin() + static_cast<std::ptrdiff_t>(keep), expressed.end(),
                    [](const auto& a, const auto& b) {
                      if (a.second != b.second) return a.second > b.second;
                      return a.first < b.first;
                    });

  CellSentence sentence;
  sentence.cell_id = profile.cell_id;
  sentence.genes.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) sentence.genes.push_back(expressed[i].first);
  return sentence;
}

ExpressionProfile mean_profile(std::span<const ExpressionProfile> profiles, std::string cell_id) {
  if (profiles.empty()) throw Error(ErrorKind::Domain, "cannot average an empty list of profiles");

  std::map<std::string, double> sums;
  for (const auto& p : profiles) {
    p.validate();
    for (const auto& [gene, value] : p.values) sums[gene] += value;
  }
  const auto n = static_cast<double>(profiles.size());
  ExpressionProfile mean;
  mean.cell_id = std::move(cell_id);
  for (auto& [gene, sum] : sums) mean.values.emplace(gene, sum / n);
  return mean;
}

double log2_fold_change(double control, double perturbed) noexcept {
  return std::log2((perturbed + 1.0) / (control + 1.0));
}

DegSets extract_degs(const ExpressionProfile& control, const ExpressionProfile& perturbed, double lfc_threshold,
                     std::size_t max_per_direction) {
  if (!(lfc_threshold > 0.0)) throw Error(ErrorKind::Domain, "fold-change threshold must be positive");
  if (max_per_direction == 0) throw Error(ErrorKind::Domain, "max genes per direction must be positive");
  if (control.values.empty() || perturbed.values.empty())
    throw Error(ErrorKind::Domain, "DEG extraction needs non-empty profiles");

  std::set<std::string> universe;
  for (const auto& kv : control.values) universe.insert(kv.first);
  for (const auto& kv : perturbed.values) universe.insert(kv.first);

  const auto value_of = [](const ExpressionProfile& p, const std::string& g) {
    const auto it = p.values.find(g);
    return it == p.values.end() ? 0.0 : it->second;
  };

  std::vector<std::pair<std::string, double>> up;
  std::vector<std::pair<std::string, double>> down;
  for (const auto& gene : universe) {
    const double lfc = log2_fold_change(value_of(control, gene), value_of(perturbed, gene));
    if (lfc >= lfc_threshold) {
      up.emplace_back(gene, lfc);
    } else if (lfc <= -lfc_threshold) {
      down.emplace_back(gene, lfc);
    }
  }

  const auto by_magnitude = [](const auto& a, const auto& b) {
    const double ma = std::fabs(a.second);
    const double mb = std::fabs(b.second);
    if (ma != mb) return ma > mb;
    return a.first < b.first;
  };
  std::sort(up.begin(), up.end(), by_magnitude);
  std::sort(down.begin(), down.end(), by_magnitude);

  DegSets result;
  for (std::size_t i = 0; i < std::min(max_per_direction, up.size()); ++i) result.up.push_back(up[i].first);
  for (std::size_t i = 0; i < std::min(max_per_direction, down.size()); ++i) result.down.push_back(down[i].first);
  return result;
}

std::vector<PerturbationCase> build_perturbation_cases(std::span<const ExpressionProfile> cells,
                                                       const std::map<std::string, std::string>& conditions,
                                                       const PerturbationBuildOptions& options) {
  std::vector<ExpressionProfile> control;
  std::map<std::string, std::vector<ExpressionProfile>> groups;
  for (const auto& cell : cells) {
    const auto it = conditions.find(cell.cell_id);
    if (it == conditions.end()) continue;
    if (it->second == options.control_label) {
      control.push_back(cell);
    } else {
      groups[it->second].push_back(cell);
    }
  }
  if (control.empty()) throw Error(ErrorKind::Domain, "no cells labelled '" + options.control_label + "'");

  const auto control_mean = mean_profile(control, options.control_label);
  const auto control_sentence = to_cell_sentence(control_mean, options.sentence_length);

  std::vector<PerturbationCase> cases;
  for (const auto& [label, members] : groups) {
    const auto perturbed_mean = mean_profile(members, label);
    auto degs = extract_degs(control_mean, perturbed_mean, options.lfc_threshold, options.max_per_direction);

    PerturbationCase pc;
    pc.perturbation_id = label;
    for (const auto& part : text::split(label, '+')) {
      auto g = canonical_gene(part);
      if (g == "CTRL") continue;  // "GENE+ctrl" marks a single-gene perturbation
      if (!g.empty() && std::find(pc.targets.begin(), pc.targets.end(), g) == pc.targets.end())
        pc.targets.push_back(std::move(g));
    }
    pc.control_sentence = control_sentence;
    pc.perturbed_sentence = to_cell_sentence(perturbed_mean, options.sentence_length);
    pc.up_genes = std::move(degs.up);
    pc.down_genes = std::move(degs.down);
    pc.validate();
    cases.push_back(std::move(pc));
  }
  return cases;
}

}  // namespace cellbench
