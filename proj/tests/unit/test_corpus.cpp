#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "cellbench/corpus.hpp"
#include "cellbench/error.hpp"
#include "support/fixtures.hpp"

using namespace cellbench;

namespace {

ExpressionProfile profile(std::map<std::string, double> values, std::string id = "c") {
  return ExpressionProfile{std::move(id), std::move(values)};
}

std::vector<ExpressionProfile> load_sample(const std::string& name) {
  return read_expression_file(fixtures::data_dir() / "samples" / name);
}

std::map<std::string, std::string> load_conditions(const std::string& name) {
  std::ifstream in(fixtures::data_dir() / "samples" / name);
  return read_cell_conditions(in);
}

}  // namespace

TEST(CellSentence, DropsZeroExpression) {
  const auto s = to_cell_sentence(profile({{"A", 5}, {"B", 3}, {"C", 0}}), 2);
  EXPECT_EQ(s.genes, (std::vector<std::string>{"A", "B"}));
}

TEST(CellSentence, TiesBreakLexicographically) {
  const auto s = to_cell_sentence(profile({{"B", 2}, {"A", 2}}), 2);
  EXPECT_EQ(s.genes, (std::vector<std::string>{"A", "B"}));
}

TEST(CellSentence, TruncatesToK) {
  const auto s = to_cell_sentence(profile({{"A", 1}, {"B", 4}, {"C", 3}, {"D", 2}}), 3);
  EXPECT_EQ(s.genes, (std::vector<std::string>{"B", "C", "D"}));
  EXPECT_EQ(s.cell_id, "c");
}

TEST(CellSentence, AllZeroProfileIsEmpty) {
  try {
    to_cell_sentence(profile({{"A", 0}, {"B", 0}}), 5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EmptyProfile);
  }
}

TEST(CellSentence, ZeroKIsDomainError) {
  EXPECT_THROW(to_cell_sentence(profile({{"A", 1}}), 0), Error);
}

TEST(CellSentence, OrderIsNonIncreasingProperty) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> value(0, 6);
  for (int trial = 0; trial < 200; ++trial) {
    ExpressionProfile p{"p", {}};
    for (int g = 0; g < 30; ++g) p.values["G" + std::to_string(g)] = value(rng);
    p.values["ANCHOR"] = 1;
    const auto s = to_cell_sentence(p, 1 + trial % 40);
    ASSERT_LE(s.genes.size(), static_cast<std::size_t>(1 + trial % 40));
    for (std::size_t i = 1; i < s.genes.size(); ++i) {
      const double prev = p.values[s.genes[i - 1]];
      const double cur = p.values[s.genes[i]];
      ASSERT_GE(prev, cur);
      if (prev == cur) ASSERT_LT(s.genes[i - 1], s.genes[i]);
      ASSERT_GT(cur, 0.0);
    }
  }
}

TEST(CellSentence, NormanControlLeadsWithMaxMeanGene) {
  const auto cells = load_sample("norman_counts.csv");
  const auto conditions = load_conditions("norman_conditions.csv");
  // Independent linear scan over the raw CSV.
  std::ifstream in(fixtures::data_dir() / "samples" / "norman_counts.csv");
  std::string line;
  const auto next_line = [&] {
    if (!std::getline(in, line)) return false;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };
  next_line();
  std::vector<std::string> header;
  for (std::stringstream ss(line); std::getline(ss, line, ',');) header.push_back(line);
  std::string best_gene;
  double best = -1;
  while (next_line()) {
    std::stringstream ss(line);
    std::string gene, field;
    std::getline(ss, gene, ',');
    double sum = 0;
    int n = 0;
    for (std::size_t col = 1; std::getline(ss, field, ','); ++col) {
      if (conditions.at(header[col]) == "ctrl") {
        sum += std::stod(field);
        ++n;
      }
    }
    const double mean = sum / n;
    if (mean > best || (mean == best && gene < best_gene)) {
      best = mean;
      best_gene = gene;
    }
  }
  std::vector<ExpressionProfile> control;
  for (const auto& c : cells) {
    if (conditions.at(c.cell_id) == "ctrl") control.push_back(c);
  }
  const auto s = to_cell_sentence(mean_profile(control), 100);
  EXPECT_EQ(s.genes.front(), best_gene);
  EXPECT_EQ(s.genes.size(), 100u);
}

TEST(MeanProfile, AveragesPerGene) {
  const std::vector<ExpressionProfile> ps = {profile({{"A", 2}}), profile({{"A", 4}})};
  EXPECT_DOUBLE_EQ(mean_profile(ps).values.at("A"), 3.0);
}

TEST(MeanProfile, MissingGeneCountsAsZero) {
  const std::vector<ExpressionProfile> ps = {profile({{"A", 1}, {"B", 0}}), profile({{"B", 2}})};
  const auto m = mean_profile(ps);
  EXPECT_DOUBLE_EQ(m.values.at("A"), 0.5);
  EXPECT_DOUBLE_EQ(m.values.at("B"), 1.0);
}

TEST(MeanProfile, EmptyListThrows) { EXPECT_THROW(mean_profile({}), Error); }

TEST(MeanProfile, TenAdamsonControlsMatchSummation) {
  const auto cells = load_sample("adamson_counts.triplets");
  const auto conditions = load_conditions("adamson_conditions.csv");
  std::vector<ExpressionProfile> control;
  for (const auto& c : cells) {
    if (conditions.at(c.cell_id) == "control" && control.size() < 10) control.push_back(c);
  }
  ASSERT_EQ(control.size(), 10u);
  const auto m = mean_profile(control);
  std::map<std::string, double> sums;
  for (const auto& c : control)
    for (const auto& [g, v] : c.values) sums[g] += v;
  ASSERT_EQ(m.values.size(), sums.size());
  for (const auto& [g, s] : sums) EXPECT_DOUBLE_EQ(m.values.at(g), s / 10.0) << g;
}

TEST(Degs, IdenticalProfilesYieldNothing) {
  const auto p = profile({{"A", 3}, {"B", 9}});
  const auto d = extract_degs(p, p, 1.0, 20);
  EXPECT_TRUE(d.up.empty());
  EXPECT_TRUE(d.down.empty());
}

TEST(Degs, FourfoldIsUp) {
  const auto d = extract_degs(profile({{"G", 1}}), profile({{"G", 7}}), 1.0, 20);
  EXPECT_EQ(d.up, (std::vector<std::string>{"G"}));
  EXPECT_TRUE(d.down.empty());
}

TEST(Degs, ThresholdIsInclusiveAndDownMirrors) {
  // log2(4/2) = 1 exactly, log2(2/4) = -1 exactly.
  const auto d = extract_degs(profile({{"U", 1}, {"D", 3}}), profile({{"U", 3}, {"D", 1}}), 1.0, 20);
  EXPECT_EQ(d.up, (std::vector<std::string>{"U"}));
  EXPECT_EQ(d.down, (std::vector<std::string>{"D"}));
}

TEST(Degs, MissingGeneIsZeroAndCapKeepsStrongest) {
  const auto control = profile({{"A", 0}, {"B", 0}, {"C", 0}});
  const auto perturbed = profile({{"A", 15}, {"B", 31}, {"C", 15}, {"NEW", 63}});
  const auto d = extract_degs(control, perturbed, 1.0, 3);
  EXPECT_EQ(d.up, (std::vector<std::string>{"NEW", "B", "A"}));
}

TEST(Degs, Log2FoldChangeUsesPseudocount) {
  EXPECT_DOUBLE_EQ(log2_fold_change(1, 7), 2.0);
  EXPECT_DOUBLE_EQ(log2_fold_change(0, 0), 0.0);
}

TEST(Degs, SamplesMatchIndependentScript) {
  const auto expected = nlohmann::json::parse(fixtures::read_file(fixtures::data_dir() / "samples" / "expected_degs.json"));
  struct Screen {
    std::string key, matrix, conditions, control;
  };
  const Screen screens[] = {{"norman", "norman_counts.csv", "norman_conditions.csv", "ctrl"},
                            {"adamson", "adamson_counts.triplets", "adamson_conditions.csv", "control"}};
  std::size_t total = 0;
  for (const auto& screen : screens) {
    PerturbationBuildOptions options;
    options.control_label = screen.control;
    const auto cases = build_perturbation_cases(load_sample(screen.matrix), load_conditions(screen.conditions), options);
    const auto& want = expected.at(screen.key);
    ASSERT_EQ(cases.size(), want.at("cases").size());
    for (const auto& pc : cases) {
      const auto& w = want.at("cases").at(pc.perturbation_id);
      EXPECT_EQ(pc.up_genes, w.at("up").get<std::vector<std::string>>()) << pc.perturbation_id;
      EXPECT_EQ(pc.down_genes, w.at("down").get<std::vector<std::string>>()) << pc.perturbation_id;
      EXPECT_EQ(pc.targets, w.at("targets").get<std::vector<std::string>>()) << pc.perturbation_id;
      EXPECT_EQ(pc.perturbed_sentence.genes, w.at("perturbed_sentence").get<std::vector<std::string>>());
      EXPECT_EQ(pc.control_sentence.genes, want.at("control_sentence").get<std::vector<std::string>>());
      for (const auto& g : pc.up_genes)
        EXPECT_EQ(std::count(pc.down_genes.begin(), pc.down_genes.end(), g), 0) << g;
    }
    total += cases.size();
  }
  EXPECT_EQ(total, 138u);
}

TEST(Degs, Deterministic) {
  const auto cells = load_sample("adamson_counts.triplets");
  const auto conditions = load_conditions("adamson_conditions.csv");
  EXPECT_EQ(build_perturbation_cases(cells, conditions), build_perturbation_cases(cells, conditions));
}

TEST(ExpressionIo, DenseCsvCanonicalizesAndSumsDuplicates) {
  std::istringstream in("gene,c1,c2\n actb ,1,2\nACTB,3,0\nvim,0,5\n");
  const auto cells = read_dense_csv(in);
  ASSERT_EQ(cells.size(), 2u);
  EXPECT_EQ(cells[0].cell_id, "c1");
  EXPECT_DOUBLE_EQ(cells[0].values.at("ACTB"), 4.0);
  EXPECT_DOUBLE_EQ(cells[1].values.at("VIM"), 5.0);
}

TEST(ExpressionIo, DenseCsvReportsLineOfBadRow) {
  std::istringstream in("gene,c1\nA,1\nB,x\n");
  try {
    read_dense_csv(in);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Parse);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
}

TEST(ExpressionIo, NegativeValueIsDomainError) {
  std::istringstream in("gene,cell,value\nA,c1,-1\n");
  try {
    read_triplets(in);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Domain);
  }
}

TEST(ExpressionIo, TripletsKeepFirstAppearanceOrder) {
  std::istringstream in("gene,cell,value\nA,z,1\nB,a,2\nC,z,3\n");
  const auto cells = read_triplets(in);
  ASSERT_EQ(cells.size(), 2u);
  EXPECT_EQ(cells[0].cell_id, "z");
  EXPECT_EQ(cells[0].values.size(), 2u);
}

TEST(ExpressionIo, ConditionsSkipHeader) {
  std::istringstream in("cell,condition\nc1,ctrl\nc2,KLF1+ctrl\n");
  const auto m = read_cell_conditions(in);
  EXPECT_EQ(m.size(), 2u);
  EXPECT_EQ(m.at("c2"), "KLF1+ctrl");
}

TEST(Perturbation, PairLabelsYieldTwoTargets) {
  std::vector<ExpressionProfile> cells = {profile({{"A", 1}, {"B", 1}}, "k1"), profile({{"A", 9}, {"B", 1}}, "p1")};
  const std::map<std::string, std::string> conditions = {{"k1", "ctrl"}, {"p1", "a+b"}};
  PerturbationBuildOptions options;
  options.control_label = "ctrl";
  const auto cases = build_perturbation_cases(cells, conditions, options);
  ASSERT_EQ(cases.size(), 1u);
  EXPECT_EQ(cases[0].targets, (std::vector<std::string>{"A", "B"}));
  EXPECT_EQ(cases[0].up_genes, (std::vector<std::string>{"A"}));
}

TEST(Perturbation, MissingControlIsError) {
  std::vector<ExpressionProfile> cells = {profile({{"A", 1}}, "p1")};
  EXPECT_THROW(build_perturbation_cases(cells, {{"p1", "A+ctrl"}}), Error);
}

TEST(Perturbation, OverlapViolatesInvariant) {
  PerturbationCase pc;
  pc.perturbation_id = "X";
  pc.targets = {"X"};
  pc.up_genes = {"A"};
  pc.down_genes = {"A"};
  EXPECT_THROW(pc.validate(), Error);
  pc.down_genes.clear();
  EXPECT_NO_THROW(pc.validate());
  pc.targets.clear();
  EXPECT_THROW(pc.validate(), Error);
}
