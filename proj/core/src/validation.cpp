#include "cellbench/validation.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <spdlog/spdlog.h>

#include "cellbench/error.hpp"
#include "cellbench/text.hpp"

namespace cellbench {

using nlohmann::json;

namespace {

constexpr std::size_t kMinPairs = 3;

std::map<std::string, const TaskInstance*> index_instances(std::span<const TaskInstance> instances) {
  std::map<std::string, const TaskInstance*> index;
  for (const auto& inst : instances) index[inst.id] = &inst;
  return index;
}

template <typename Payload>
const Payload* payload_of(const ResponseMap& responses, const std::string& id) {
  const auto it = responses.find(id);
  return it == responses.end() ? nullptr : std::get_if<Payload>(&it->second.payload);
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

void finalize(PairedAnalysis& a) {
  a.spearman.reset();
  a.kendall.reset();
  if (a.n() < kMinPairs) {
    a.skipped = "fewer than 3 usable pairs (n=" + std::to_string(a.n()) + ")";
    return;
  }
  try {
    a.spearman = spearman(a.scores, a.values);
    a.kendall = kendall_tau(a.scores, a.values);
    a.skipped.clear();
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::UndefinedCorrelation) throw;
    a.skipped = "correlation undefined: constant series";
  }
}

PairedAnalysis validate_cta(std::span<const JudgeVerdict> verdicts, const ResponseMap& responses,
                            std::span<const TaskInstance> instances, const OntologyGraph& graph, TermSearch* search) {
  PairedAnalysis a;
  a.name = "cta_score_vs_distance";
  a.value_label = "negative_distance";
  const auto index = index_instances(instances);
  for (const auto& v : verdicts) {
    const auto* prediction = payload_of<CellTypePrediction>(responses, v.instance_id);
    const auto inst = index.find(v.instance_id);
    if (v.flagged || prediction == nullptr || inst == index.end()) {
      ++a.excluded;
      continue;
    }
    const auto predicted = resolve_term(graph, prediction->label, search);
    const auto gold = resolve_truth_term(*inst->second, graph, search);
    const auto distance = predicted && gold ? graph.distance(*predicted, *gold) : std::nullopt;
    if (!distance) {
      ++a.excluded;
      continue;
    }
    a.ids.push_back(v.instance_id);
    a.scores.push_back(v.score);
    a.values.push_back(-static_cast<double>(*distance));
  }
  finalize(a);
  return a;
}

PairedAnalysis validate_cg(std::span<const JudgeVerdict> verdicts, const ResponseMap& responses,
                           std::span<const TaskInstance> instances, const OntologyGraph& graph,
                           const CellMarkerTable& markers, TermSearch* search) {
  PairedAnalysis a;
  a.name = "cg_score_vs_marker_overlap";
  a.value_label = "marker_overlap_pct";
  const auto index = index_instances(instances);
  for (const auto& v : verdicts) {
    const auto* generated = payload_of<GeneratedCellPrediction>(responses, v.instance_id);
    const auto inst = index.find(v.instance_id);
    if (v.flagged || generated == nullptr || generated->genes.empty() || inst == index.end()) {
      ++a.excluded;
      continue;
    }
    const auto gold = resolve_truth_term(*inst->second, graph, search);
    const auto marker_set = gold ? markers.markers_for_term(graph, *gold) : std::vector<std::string>{};
    if (marker_set.empty()) {
      ++a.excluded;
      continue;
    }
    a.ids.push_back(v.instance_id);
    a.scores.push_back(v.score);
    a.values.push_back(marker_overlap_pct(generated->genes, marker_set));
  }
  finalize(a);
  return a;
}

PairedAnalysis validate_pp(std::span<const JudgeVerdict> verdicts, const ResponseMap& responses,
                           std::span<const TaskInstance> instances) {
  PairedAnalysis a;
  a.name = "pp_score_vs_deg_cosine";
  a.value_label = "deg_cosine";
  const auto index = index_instances(instances);
  for (const auto& v : verdicts) {
    const auto* predicted = payload_of<PerturbationPrediction>(responses, v.instance_id);
    const auto inst = index.find(v.instance_id);
    const auto* truth = inst == index.end() ? nullptr : std::get_if<PerturbationCase>(&inst->second->ground_truth);
    if (v.flagged || predicted == nullptr || truth == nullptr) {
      ++a.excluded;
      continue;
    }
    auto pred = predicted->up;
    pred.insert(pred.end(), predicted->down.begin(), predicted->down.end());
    auto gold = truth->up_genes;
    gold.insert(gold.end(), truth->down_genes.begin(), truth->down_genes.end());
    a.ids.push_back(v.instance_id);
    a.scores.push_back(v.score);
    a.values.push_back(set_cosine(pred, gold));
  }
  finalize(a);
  return a;
}

PairedAnalysis length_bias(std::span<const JudgeVerdict> verdicts, const ResponseMap& responses) {
  PairedAnalysis a;
  a.name = "length_bias";
  a.value_label = "response_tokens";
  for (const auto& v : verdicts) {
    const auto it = responses.find(v.instance_id);
    if (v.flagged || it == responses.end()) {
      ++a.excluded;
      continue;
    }
    a.ids.push_back(v.instance_id);
    a.scores.push_back(v.score);
    a.values.push_back(static_cast<double>(text::split_whitespace(it->second.raw).size()));
  }
  finalize(a);
  return a;
}

CrossJudgeResult robustness_cross_judge(std::span<const JudgeVerdict> run_a, std::span<const JudgeVerdict> run_b) {
  std::map<std::string, const JudgeVerdict*> a, b;
  for (const auto& v : run_a) a[v.instance_id] = &v;
  for (const auto& v : run_b) b[v.instance_id] = &v;
  std::vector<std::string> only_a, only_b;
  for (const auto& [id, _] : a) {
    if (!b.contains(id)) only_a.push_back(id);
  }
  for (const auto& [id, _] : b) {
    if (!a.contains(id)) only_b.push_back(id);
  }
  if (!only_a.empty() || !only_b.empty()) {
    std::string msg = "verdict sets differ;";
    if (!only_a.empty()) msg += " only in first: " + text::join(only_a, ", ") + ";";
    if (!only_b.empty()) msg += " only in second: " + text::join(only_b, ", ");
    throw Error(ErrorKind::Alignment, msg);
  }

  CrossJudgeResult r;
  r.name = "cross_judge";
  std::vector<double> xs, ys;
  for (const auto& [id, va] : a) {
    const auto* vb = b.at(id);
    if (va->flagged || vb->flagged) {
      ++r.excluded;
      continue;
    }
    xs.push_back(va->score);
    ys.push_back(vb->score);
  }
  r.n = xs.size();
  r.cosine = xs.empty() ? 0.0 : vector_cosine(xs, ys);
  if (r.n < 2) {
    r.note = "fewer than 2 aligned verdicts";
    return r;
  }
  try {
    r.rho = spearman(xs, ys).rho;
    r.tau = kendall_tau(xs, ys);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::UndefinedCorrelation) throw;
    r.note = "correlation undefined: constant series";
  }
  return r;
}

DepthHistogram depth_histogram(std::span<const std::string> labels, const OntologyGraph& graph, int bin_width,
                               TermSearch* search) {
  if (bin_width < 1) throw Error(ErrorKind::Domain, "bin width must be positive");
  DepthHistogram h;
  h.bin_width = bin_width;
  h.total = labels.size();
  std::map<int, std::size_t> counts;
  for (const auto& label : labels) {
    std::optional<std::string> id;
    if (!text::trim(label).empty()) id = resolve_term(graph, label, search);
    if (!id) {
      ++h.misses;
      continue;
    }
    try {
      const int depth = graph.depth_to_root(*id);
      ++counts[depth / bin_width];
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Unreachable) throw;
      ++h.misses;
    }
  }
  if (counts.empty()) return h;
  for (int bin = counts.begin()->first; bin <= counts.rbegin()->first; ++bin) {
    const auto it = counts.find(bin);
    h.bins.push_back({bin * bin_width, (bin + 1) * bin_width, it == counts.end() ? 0 : it->second});
  }
  return h;
}

json to_json(const PairedAnalysis& a) {
  json j = {{"name", a.name},      {"value", a.value_label}, {"n", a.n()},
            {"excluded", a.excluded}, {"skipped", a.skipped}};
  if (a.spearman) {
    j["spearman"] = {{"rho", a.spearman->rho}, {"p", a.spearman->p}, {"n", a.spearman->n}};
  } else {
    j["spearman"] = nullptr;
  }
  j["kendall_tau"] = optional_number(a.kendall);
  return j;
}

json to_json(const CrossJudgeResult& r) {
  return {{"name", r.name},
          {"n", r.n},
          {"excluded", r.excluded},
          {"spearman_rho", optional_number(r.rho)},
          {"kendall_tau", optional_number(r.tau)},
          {"cosine", r.cosine},
          {"note", r.note}};
}

json to_json(const DepthHistogram& h) {
  auto bins = json::array();
  for (const auto& b : h.bins) bins.push_back({{"lo", b.lo}, {"hi", b.hi}, {"count", b.count}});
  return {{"bin_width", h.bin_width}, {"bins", std::move(bins)}, {"misses", h.misses}, {"n", h.total}};
}

}  // namespace cellbench
