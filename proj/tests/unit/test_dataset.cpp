#include <sstream>

#include <gtest/gtest.h>

#include "cellbench/dataset.hpp"
#include "cellbench/error.hpp"
#include "support/fixtures.hpp"

using namespace cellbench;

namespace {

std::string cta_line(const std::string& id) {
  return R"({"task":"CTA","id":")" + id +
         R"(","input":{"cell_sentence":{"cell_id":"c","genes":["NKG7","GNLY"]}},"ground_truth":{"label":"natural killer cell","curie":"CL:0000623"},"knowledge_refs":["CL"]})";
}

ErrorKind kind_of(const std::string& text) {
  std::istringstream in(text);
  try {
    parse_dataset(in);
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error";
  return ErrorKind::Io;
}

TaskInstance sample(Task task) {
  TaskInstance inst;
  inst.task = task;
  inst.id = "x-" + std::string(to_string(task));
  inst.knowledge_refs = {"CL"};
  CellSentence s{"cell", {"A", "B"}, {{"tissue", "blood"}}};
  switch (task) {
    case Task::CTA:
      inst.input = s;
      inst.ground_truth = OntologyLabel{"T cell", "CL:0000084"};
      break;
    case Task::CC:
      inst.input = s;
      inst.ground_truth = CaptionTruth{"A T cell.", "T cell", ""};
      break;
    case Task::CG:
      inst.input = CellTypeQuery{"T cell"};
      inst.ground_truth = GeneratedCellTruth{s, "CL:0000084"};
      break;
    case Task::PP: {
      PerturbationCase pc{"KLF1+ctrl", {"KLF1"}, s, CellSentence{"KLF1+ctrl", {"KLF1", "A"}, {}}, {"KLF1"}, {"B"}};
      inst.input = PerturbationInput{s, pc.perturbation_id, pc.targets};
      inst.ground_truth = pc;
      break;
    }
    case Task::SQA:
      inst.input = QuestionInput{"Why?"};
      inst.ground_truth = QaTruth{"Because.", "An excerpt.", "An abstract.", "123"};
      break;
  }
  return inst;
}

}  // namespace

TEST(Dataset, ThreeValidLines) {
  std::istringstream in(cta_line("a") + "\n" + cta_line("b") + "\n\n" + cta_line("c") + "\n");
  const auto instances = parse_dataset(in);
  ASSERT_EQ(instances.size(), 3u);
  EXPECT_EQ(instances[1].id, "b");
  EXPECT_EQ(std::get<OntologyLabel>(instances[0].ground_truth).curie, "CL:0000623");
}

TEST(Dataset, PerturbationPayloadUnderCtaIsSchemaError) {
  const std::string line =
      R"({"task":"CTA","id":"p","input":{"control_sentence":{"cell_id":"c","genes":["A"]},"perturbation":{"id":"A+ctrl","targets":["A"]}},"ground_truth":{"label":"x"},"knowledge_refs":[]})";
  EXPECT_EQ(kind_of(line), ErrorKind::Schema);
}

TEST(Dataset, MalformedLineCarriesLineNumber) {
  std::istringstream in(cta_line("a") + "\n{not json\n");
  try {
    parse_dataset(in);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Parse);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(Dataset, DuplicateIdsRejected) { EXPECT_EQ(kind_of(cta_line("a") + "\n" + cta_line("a")), ErrorKind::Schema); }

TEST(Dataset, UnknownFieldRejected) {
  auto line = cta_line("a");
  line.insert(1, R"("extra":1,)");
  EXPECT_EQ(kind_of(line), ErrorKind::Schema);
}

TEST(Dataset, DuplicateGenesRejected) {
  std::string line = cta_line("a");
  line.replace(line.find("\"GNLY\""), 6, "\"NKG7\"");
  EXPECT_EQ(kind_of(line), ErrorKind::Schema);
}

TEST(Dataset, RoundTripIsIdentityForEveryTask) {
  std::vector<TaskInstance> instances;
  for (const auto t : kAllTasks) instances.push_back(sample(t));
  std::ostringstream out;
  write_dataset(out, instances);
  std::istringstream in(out.str());
  EXPECT_EQ(parse_dataset(in), instances);
}

TEST(Dataset, BundledCtaFileHas608Instances) {
  const auto instances = load_dataset(fixtures::data_dir() / "datasets" / "cta_608.jsonl");
  EXPECT_EQ(instances.size(), 608u);
  for (const auto& inst : instances) EXPECT_EQ(inst.task, Task::CTA);
}

TEST(Dataset, DemoFilesLoad) {
  for (const char* name : {"cta_demo.jsonl", "cc_demo.jsonl", "cg_demo.jsonl", "sqa_demo.jsonl"})
    EXPECT_FALSE(load_dataset(fixtures::data_dir() / "datasets" / name).empty()) << name;
}

TEST(Dataset, TruthAccessors) {
  EXPECT_EQ(truth_cell_type(sample(Task::CTA)), "T cell");
  EXPECT_EQ(truth_curie(sample(Task::CG)), "CL:0000084");
  EXPECT_EQ(truth_cell_type(sample(Task::CG)), "T cell");
  EXPECT_EQ(truth_curie(sample(Task::SQA)), "");
}

TEST(Dataset, MissingFileIsIoError) {
  try {
    load_dataset("/nonexistent/file.jsonl");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Io);
  }
}
