#include "cellbench/dataset.hpp"

#include <fstream>
#include <istream>
#include <set>

#include "cellbench/error.hpp"
#include "cellbench/text.hpp"

namespace cellbench {

using nlohmann::json;

namespace {

[[noreturn]] void schema_error(const std::string& msg) { throw Error(ErrorKind::Schema, msg); }

const json& require(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) schema_error(where + " must be an object");
  const auto it = obj.find(key);
  if (it == obj.end()) schema_error(where + " is missing '" + key + "'");
  return *it;
}

std::string require_string(const json& obj, const char* key, const std::string& where, bool allow_empty = false) {
  const auto& v = require(obj, key, where);
  if (!v.is_string()) schema_error(where + "." + key + " must be a string");
  auto s = v.get<std::string>();
  if (!allow_empty && text::trim(s).empty()) schema_error(where + "." + key + " must be non-empty");
  return s;
}

std::string optional_string(const json& obj, const char* key, const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return {};
  if (!it->is_string()) schema_error(where + "." + key + " must be a string");
  return it->get<std::string>();
}

std::vector<std::string> string_list(const json& v, const std::string& where) {
  if (!v.is_array()) schema_error(where + " must be an array of strings");
  std::vector<std::string> out;
  out.reserve(v.size());
  for (const auto& e : v) {
    if (!e.is_string()) schema_error(where + " must be an array of strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

std::vector<std::string> gene_list(const json& v, const std::string& where) {
  auto genes = string_list(v, where);
  for (auto& g : genes) {
    g = canonical_gene(g);
    if (g.empty()) schema_error(where + " contains an empty gene symbol");
  }
  return genes;
}

void only_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) schema_error(where + " has unexpected field '" + key + "'");
  }
}

void check_unique(const std::vector<std::string>& genes, const std::string& where) {
  std::set<std::string> seen;
  for (const auto& g : genes) {
    if (!seen.insert(g).second) schema_error(where + " repeats gene " + g);
  }
}

json input_to_json(const TaskInput& input) {
  return std::visit(
      [](const auto& v) -> json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, CellSentence>) {
          return json{{"cell_sentence", to_json(v)}};
        } else if constexpr (std::is_same_v<T, CellTypeQuery>) {
          return json{{"cell_type", v.cell_type}};
        } else if constexpr (std::is_same_v<T, PerturbationInput>) {
          return json{{"control_sentence", to_json(v.control_sentence)},
                      {"perturbation", json{{"id", v.perturbation_id}, {"targets", v.targets}}}};
        } else {
          return json{{"question", v.question}};
        }
      },
      input);
}

json truth_to_json(const GroundTruth& truth) {
  return std::visit(
      [](const auto& v) -> json {
        using T = std::decay_t<decltype(v)>;
        json j;
        if constexpr (std::is_same_v<T, OntologyLabel>) {
          j = json{{"label", v.label}};
          if (!v.curie.empty()) j["curie"] = v.curie;
        } else if constexpr (std::is_same_v<T, CaptionTruth>) {
          j = json{{"caption", v.caption}, {"cell_type", v.cell_type}};
          if (!v.curie.empty()) j["curie"] = v.curie;
        } else if constexpr (std::is_same_v<T, GeneratedCellTruth>) {
          j = json{{"cell_sentence", to_json(v.reference)}};
          if (!v.curie.empty()) j["curie"] = v.curie;
        } else if constexpr (std::is_same_v<T, PerturbationCase>) {
          j = to_json(v);
        } else {
          j = json{{"answer", v.answer}, {"evidence", v.evidence}};
          if (!v.abstract_text.empty()) j["abstract"] = v.abstract_text;
          if (!v.pmid.empty()) j["pmid"] = v.pmid;
        }
        return j;
      },
      truth);
}

TaskInput input_from_json(Task task, const json& j) {
  const std::string where = "input";
  if (!j.is_object()) schema_error("input must be an object");
  switch (task) {
    case Task::CTA:
    case Task::CC:
      only_keys(j, {"cell_sentence"}, where);
      return cell_sentence_from_json(require(j, "cell_sentence", where));
    case Task::CG:
      only_keys(j, {"cell_type"}, where);
      return CellTypeQuery{require_string(j, "cell_type", where)};
    case Task::PP: {
      only_keys(j, {"control_sentence", "perturbation"}, where);
      PerturbationInput in;
      in.control_sentence = cell_sentence_from_json(require(j, "control_sentence", where));
      const auto& pert = require(j, "perturbation", where);
      only_keys(pert, {"id", "targets"}, "input.perturbation");
      in.perturbation_id = require_string(pert, "id", "input.perturbation");
      in.targets = gene_list(require(pert, "targets", "input.perturbation"), "input.perturbation.targets");
      if (in.targets.empty()) schema_error("input.perturbation.targets must be non-empty");
      return in;
    }
    case Task::SQA:
      only_keys(j, {"question"}, where);
      return QuestionInput{require_string(j, "question", where)};
  }
  schema_error("unknown task");
}

GroundTruth truth_from_json(Task task, const json& j) {
  const std::string where = "ground_truth";
  if (!j.is_object()) schema_error("ground_truth must be an object");
  switch (task) {
    case Task::CTA:
      only_keys(j, {"label", "curie"}, where);
      return OntologyLabel{require_string(j, "label", where), optional_string(j, "curie", where)};
    case Task::CC:
      only_keys(j, {"caption", "cell_type", "curie"}, where);
      return CaptionTruth{require_string(j, "caption", where), require_string(j, "cell_type", where),
                          optional_string(j, "curie", where)};
    case Task::CG:
      only_keys(j, {"cell_sentence", "curie"}, where);
      return GeneratedCellTruth{cell_sentence_from_json(require(j, "cell_sentence", where)),
                                optional_string(j, "curie", where)};
    case Task::PP:
      return perturbation_case_from_json(j);
    case Task::SQA:
      only_keys(j, {"answer", "evidence", "abstract", "pmid"}, where);
      return QaTruth{require_string(j, "answer", where), require_string(j, "evidence", where),
                     optional_string(j, "abstract", where), optional_string(j, "pmid", where)};
  }
  schema_error("unknown task");
}

}  // namespace

json to_json(const CellSentence& sentence) {
  json j{{"cell_id", sentence.cell_id}, {"genes", sentence.genes}};
  if (!sentence.metadata.empty()) j["metadata"] = sentence.metadata;
  return j;
}

CellSentence cell_sentence_from_json(const json& j) {
  const std::string where = "cell_sentence";
  if (!j.is_object()) schema_error("cell_sentence must be an object");
  only_keys(j, {"cell_id", "genes", "metadata"}, where);
  CellSentence s;
  s.cell_id = require_string(j, "cell_id", where);
  s.genes = gene_list(require(j, "genes", where), "cell_sentence.genes");
  check_unique(s.genes, "cell_sentence.genes");
  if (const auto it = j.find("metadata"); it != j.end()) {
    if (!it->is_object()) schema_error("cell_sentence.metadata must be an object");
    for (const auto& [k, v] : it->items()) {
      if (!v.is_string()) schema_error("cell_sentence.metadata values must be strings");
      s.metadata.emplace(k, v.get<std::string>());
    }
  }
  return s;
}

json to_json(const PerturbationCase& pc) {
  return json{{"perturbation_id", pc.perturbation_id},
              {"targets", pc.targets},
              {"control_sentence", to_json(pc.control_sentence)},
              {"perturbed_sentence", to_json(pc.perturbed_sentence)},
              {"up_genes", pc.up_genes},
              {"down_genes", pc.down_genes}};
}

PerturbationCase perturbation_case_from_json(const json& j) {
  const std::string where = "perturbation_case";
  if (!j.is_object()) schema_error("perturbation case must be an object");
  only_keys(j, {"perturbation_id", "targets", "control_sentence", "perturbed_sentence", "up_genes", "down_genes"},
            where);
  PerturbationCase pc;
  pc.perturbation_id = require_string(j, "perturbation_id", where);
  pc.targets = gene_list(require(j, "targets", where), where + ".targets");
  pc.control_sentence = cell_sentence_from_json(require(j, "control_sentence", where));
  pc.perturbed_sentence = cell_sentence_from_json(require(j, "perturbed_sentence", where));
  pc.up_genes = gene_list(require(j, "up_genes", where), where + ".up_genes");
  pc.down_genes = gene_list(require(j, "down_genes", where), where + ".down_genes");
  pc.validate();
  return pc;
}

void TaskInstance::validate() const {
  bool input_ok = false;
  bool truth_ok = false;
  switch (task) {
    case Task::CTA:
      input_ok = std::holds_alternative<CellSentence>(input);
      truth_ok = std::holds_alternative<OntologyLabel>(ground_truth);
      break;
    case Task::CC:
      input_ok = std::holds_alternative<CellSentence>(input);
      truth_ok = std::holds_alternative<CaptionTruth>(ground_truth);
      break;
    case Task::CG:
      input_ok = std::holds_alternative<CellTypeQuery>(input);
      truth_ok = std::holds_alternative<GeneratedCellTruth>(ground_truth);
      break;
    case Task::PP:
      input_ok = std::holds_alternative<PerturbationInput>(input);
      truth_ok = std::holds_alternative<PerturbationCase>(ground_truth);
      break;
    case Task::SQA:
      input_ok = std::holds_alternative<QuestionInput>(input);
      truth_ok = std::holds_alternative<QaTruth>(ground_truth);
      break;
  }
  if (!input_ok) schema_error("instance " + id + ": input payload does not match task " + std::string(to_string(task)));
  if (!truth_ok)
    schema_error("instance " + id + ": ground_truth payload does not match task " + std::string(to_string(task)));
  if (id.empty()) schema_error("instance id must be non-empty");
}

json to_json(const TaskInstance& instance) {
  instance.validate();
  return json{{"task", std::string(to_string(instance.task))},
              {"id", instance.id},
              {"input", input_to_json(instance.input)},
              {"ground_truth", truth_to_json(instance.ground_truth)},
              {"knowledge_refs", instance.knowledge_refs}};
}

TaskInstance instance_from_json(const json& j) {
  if (!j.is_object()) schema_error("instance must be a JSON object");
  only_keys(j, {"task", "id", "input", "ground_truth", "knowledge_refs"}, "instance");
  TaskInstance inst;
  const auto task_name = require_string(j, "task", "instance");
  const auto task = parse_task(task_name);
  if (!task) schema_error("unknown task '" + task_name + "'");
  inst.task = *task;
  inst.id = require_string(j, "id", "instance");
  inst.input = input_from_json(inst.task, require(j, "input", "instance"));
  inst.ground_truth = truth_from_json(inst.task, require(j, "ground_truth", "instance"));
  if (const auto it = j.find("knowledge_refs"); it != j.end()) inst.knowledge_refs = string_list(*it, "knowledge_refs");
  inst.validate();
  return inst;
}

std::vector<TaskInstance> parse_dataset(std::istream& in) {
  std::vector<TaskInstance> out;
  std::set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": " + e.what());
    }
    TaskInstance inst;
    try {
      inst = instance_from_json(j);
    } catch (const Error& e) {
      throw Error(e.kind(), "line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!ids.insert(inst.id).second)
      throw Error(ErrorKind::Schema, "line " + std::to_string(line_no) + ": duplicate instance id '" + inst.id + "'");
    out.push_back(std::move(inst));
  }
  return out;
}

std::vector<TaskInstance> load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open dataset " + path.string());
  return parse_dataset(in);
}

void write_dataset(std::ostream& out, std::span<const TaskInstance> instances) {
  for (const auto& inst : instances) out << to_json(inst).dump() << '\n';
}

void save_dataset(const std::filesystem::path& path, std::span<const TaskInstance> instances) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write dataset " + path.string());
  write_dataset(out, instances);
  if (!out) throw Error(ErrorKind::Io, "failed writing dataset " + path.string());
}

std::string truth_cell_type(const TaskInstance& instance) {
  if (const auto* l = std::get_if<OntologyLabel>(&instance.ground_truth)) return l->label;
  if (const auto* c = std::get_if<CaptionTruth>(&instance.ground_truth)) return c->cell_type;
  if (const auto* q = std::get_if<CellTypeQuery>(&instance.input)) return q->cell_type;
  return {};
}

std::string truth_curie(const TaskInstance& instance) {
  if (const auto* l = std::get_if<OntologyLabel>(&instance.ground_truth)) return l->curie;
  if (const auto* c = std::get_if<CaptionTruth>(&instance.ground_truth)) return c->curie;
  if (const auto* g = std::get_if<GeneratedCellTruth>(&instance.ground_truth)) return g->curie;
  return {};
}

}  // namespace cellbench
