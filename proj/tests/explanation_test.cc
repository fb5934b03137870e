/*
 * Copyright 2026 The procf Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "procf/explanation.h"

#include <random>
#include <string>

#include "gtest/gtest.h"
#include "procf/errors.h"
#include "rule_fixtures.h"
#include "test_util.h"

namespace procf {
namespace {

using ::procf::testing::LeafNode;
using ::procf::testing::LoanInstance;
using ::procf::testing::LoanLayout;
using ::procf::testing::LoanRuleInstance;
using ::procf::testing::LoanRuleTree;
using ::procf::testing::MixedLayout;
using ::procf::testing::NumericLayout;
using ::procf::testing::OracleCounterfactualLeaves;
using ::procf::testing::OracleMinViolations;
using ::procf::testing::OraclePaths;
using ::procf::testing::OracleViolations;
using ::procf::testing::PathOf;
using ::procf::testing::RandomMixedData;
using ::procf::testing::RandomMixedInstance;
using ::procf::testing::RandomTreeGenerator;
using ::procf::testing::SplitNode;

// MixedLayout columns.
constexpr int kCountB = 1;
constexpr int kN1 = 3;
constexpr int kGp = 5;
constexpr int kGq = 6;
constexpr int kGr = 7;

std::vector<std::string> Texts(const std::vector<Rule>& rules) {
  std::vector<std::string> out;
  for (const auto& r : rules) out.push_back(r.ToString());
  return out;
}

InitialPool PoolWith(const EncodedInstance& x, std::vector<ControlFlowGene> others) {
  InitialPool pool;
  pool.instances = {x};
  pool.cf_pool = {x.control_flow};
  for (auto& g : others) {
    if (!pool.Contains(g)) pool.cf_pool.push_back(std::move(g));
  }
  return pool;
}

TEST(RuleExtractionTest, LoanFactualRule) {
  const auto tree = LoanRuleTree();
  const auto row = FlattenOne(LoanRuleInstance(), tree.layout());
  const Rule factual = ExtractFactual(tree, row);
  EXPECT_EQ(factual.ToString(),
            "{CreditScore ≤ 323, LoanGoal = Existing loan takeover, "
            "ApplicationType = New credit} → A_Denied");
  EXPECT_TRUE(factual.violated.empty());
  EXPECT_TRUE(factual.Holds(row));
  EXPECT_EQ(factual.support, 32);
  EXPECT_EQ(factual.leaf, 3u);
}

TEST(RuleExtractionTest, LoanCounterfactualRules) {
  const auto tree = LoanRuleTree();
  const auto row = FlattenOne(LoanRuleInstance(), tree.layout());
  const auto cfs = ExtractCounterfactuals(tree, row, 3);
  ASSERT_EQ(cfs.size(), 2u);
  EXPECT_EQ(cfs[0].ToString(), "{CreditScore > 323} → A_Pending");
  EXPECT_EQ(cfs[0].violated, (std::vector<std::size_t>{0}));
  EXPECT_EQ(cfs[1].ToString(),
            "{CreditScore ≤ 323, LoanGoal = Existing loan takeover, "
            "ApplicationType ≠ New credit} → A_Pending");
  EXPECT_EQ(cfs[1].violated, (std::vector<std::size_t>{2}));
  EXPECT_GT(cfs[0].support, cfs[1].support);
  EXPECT_EQ(ExtractCounterfactuals(tree, row, 1).size(), 1u);
}

TEST(RuleExtractionTest, RuleJson) {
  const auto tree = LoanRuleTree();
  const auto row = FlattenOne(LoanRuleInstance(), tree.layout());
  const auto cfs = ExtractCounterfactuals(tree, row, 3);
  const auto json = cfs[1].ToJson();
  EXPECT_EQ(json["outcome"], "A_Pending");
  EXPECT_EQ(json["support"], 11);
  EXPECT_EQ(json["violated_count"], 1);
  ASSERT_EQ(json["conditions"].size(), 3u);
  EXPECT_EQ(json["conditions"][0]["op"], "<=");
  EXPECT_DOUBLE_EQ(json["conditions"][0]["upper"].get<double>(), 323.0);
  EXPECT_FALSE(json["conditions"][0].contains("lower"));
  EXPECT_EQ(json["conditions"][0]["violated"], false);
  EXPECT_EQ(json["conditions"][2]["op"], "!=");
  EXPECT_EQ(json["conditions"][2]["kind"], "categorical");
  EXPECT_EQ(json["conditions"][2]["levels"], nlohmann::json({"New credit"}));
  EXPECT_EQ(json["conditions"][2]["violated"], true);
  EXPECT_EQ(json["conditions"][2]["text"], "ApplicationType ≠ New credit");
}

TEST(RuleExtractionTest, SingleLeafTreeGivesEmptyRule) {
  const SurrogateTree tree(NumericLayout(1), {"a", "b"}, {LeafNode({1, 3})});
  const std::vector<double> row{0.4};
  const Rule factual = ExtractFactual(tree, row);
  EXPECT_TRUE(factual.conditions.empty());
  EXPECT_EQ(factual.ToString(), "{} → b");
  EXPECT_TRUE(ExtractCounterfactuals(tree, row, 3).empty());
}

TEST(RuleExtractionTest, NestedUpperBoundsMerge) {
  const SurrogateTree tree(
      NumericLayout(1), {"a", "b"},
      {SplitNode(0, SplitOp::kLessEqual, 10, 1, 4, {3, 3}),
       SplitNode(0, SplitOp::kLessEqual, 5, 2, 3, {3, 1}), LeafNode({3, 0}),
       LeafNode({0, 1}), LeafNode({0, 2})});
  const auto conditions = PathConditions(tree, 2);
  ASSERT_EQ(conditions.size(), 1u);
  EXPECT_EQ(conditions[0].ToString(), "x0 ≤ 5");
  EXPECT_EQ(conditions[0].op, ConditionOp::kLessEqual);

  const auto middle = PathConditions(tree, 3);
  ASSERT_EQ(middle.size(), 1u);
  EXPECT_EQ(middle[0].op, ConditionOp::kBetween);
  EXPECT_EQ(middle[0].ToString(), "5 < x0 ≤ 10");
  const auto json = middle[0].ToJson();
  EXPECT_EQ(json["op"], "between");
  EXPECT_EQ(json["lower"], 5.0);
  EXPECT_EQ(json["upper"], 10.0);
}

TEST(RuleExtractionTest, CategoricalAndFrequencyConditions) {
  // g != p, then g != q; the right branch of the second split has g = r.
  const SurrogateTree tree(
      MixedLayout(), {"X", "Y", "Z"},
      {SplitNode(kGp, SplitOp::kEquals, 0.5, 1, 2, {4, 4, 4}), LeafNode({4, 0, 0}),
       SplitNode(kGq, SplitOp::kEquals, 0.5, 3, 4, {0, 4, 4}), LeafNode({0, 4, 0}),
       SplitNode(kCountB, SplitOp::kLessEqual, 1.5, 5, 6, {0, 0, 4}), LeafNode({0, 0, 2}),
       SplitNode(kGr, SplitOp::kEquals, 0.5, 7, 8, {0, 0, 2}), LeafNode({0, 0, 1}),
       LeafNode({1, 0, 0})});
  EXPECT_EQ(PathConditions(tree, 1)[0].ToString(), "g = p");
  EXPECT_EQ(PathConditions(tree, 3)[0].ToString(), "g = q");
  const auto five = PathConditions(tree, 5);
  ASSERT_EQ(five.size(), 2u);
  EXPECT_EQ(five[0].ToString(), "g ∉ {p, q}");
  EXPECT_EQ(five[1].ToString(), "count(b) ≤ 1");
  const auto seven = PathConditions(tree, 7);
  ASSERT_EQ(seven.size(), 2u);
  EXPECT_EQ(seven[0].ToString(), "g = r");
  EXPECT_EQ(seven[1].ToString(), "count(b) > 1");
  const auto eight = PathConditions(tree, 8);
  EXPECT_EQ(eight[0].ToString(), "g ∉ {p, q, r}");
}

TEST(RuleExtractionTest, NumbersPrintWithoutExponent) {
  const SurrogateTree tree(NumericLayout(1), {"a", "b"},
                           {SplitNode(0, SplitOp::kLessEqual, 12345678.0, 1, 2, {1, 1}),
                            LeafNode({1, 0}), LeafNode({0, 1})});
  EXPECT_EQ(PathConditions(tree, 1)[0].ToString(), "x0 ≤ 12345678");
  const SurrogateTree small(NumericLayout(1), {"a", "b"},
                            {SplitNode(0, SplitOp::kLessEqual, 0.125, 1, 2, {1, 1}),
                             LeafNode({1, 0}), LeafNode({0, 1})});
  EXPECT_EQ(PathConditions(small, 2)[0].ToString(), "x0 > 0.125");
}

TEST(RuleExtractionTest, MatchesBruteForceOnRandomTrees) {
  std::mt19937_64 rng(31);
  auto layout = MixedLayout();
  for (int trial = 0; trial < 200; ++trial) {
    RandomTreeGenerator generator(layout, rng, 1 + trial % 10);
    const SurrogateTree tree = generator.Generate();
    const auto paths = OraclePaths(tree);
    for (int i = 0; i < 5; ++i) {
      const auto row = FlattenOne(RandomMixedInstance(rng), *layout);
      const Rule factual = ExtractFactual(tree, row);
      EXPECT_TRUE(factual.Holds(row));
      EXPECT_EQ(OracleViolations(*layout, PathOf(paths, factual.leaf), row, nullptr), 0u);

      const auto cfs = ExtractCounterfactuals(tree, row, 3);
      const auto expected = OracleCounterfactualLeaves(tree, row, 3);
      ASSERT_EQ(cfs.size(), expected.size()) << "trial " << trial;
      for (std::size_t r = 0; r < cfs.size(); ++r) {
        EXPECT_EQ(cfs[r].leaf, expected[r]) << "trial " << trial << " rank " << r;
        EXPECT_NE(cfs[r].outcome, factual.outcome);
        std::size_t groups = 0;
        EXPECT_EQ(cfs[r].violated.size(),
                  OracleViolations(*layout, PathOf(paths, cfs[r].leaf), row, &groups));
        EXPECT_EQ(cfs[r].conditions.size(), groups);
      }
      // Merged conditions accept exactly the rows the raw path accepts.
      for (const auto& [leaf, tests] : paths) {
        const auto probe = FlattenOne(RandomMixedInstance(rng), *layout);
        Rule rule;
        rule.conditions = PathConditions(tree, leaf);
        EXPECT_EQ(rule.Holds(probe), OracleViolations(*layout, tests, probe, nullptr) == 0);
      }
    }
  }
}

TEST(RuleExtractionTest, MinimalViolationsOnFittedTrees) {
  std::mt19937_64 rng(41);
  auto layout = MixedLayout();
  for (int trial = 0; trial < 60; ++trial) {
    auto [x, y] = RandomMixedData(layout, rng, 150);
    const auto tree = FitTree(x, y, {.max_depth = 1 + trial % 10, .min_samples_leaf = 1 + trial % 4});
    for (int i = 0; i < 5; ++i) {
      const auto row = FlattenOne(RandomMixedInstance(rng), *layout);
      const auto cfs = ExtractCounterfactuals(tree, row, 3);
      const auto best = OracleMinViolations(tree, row);
      ASSERT_EQ(cfs.empty(), !best.has_value());
      if (best) EXPECT_EQ(cfs[0].violated.size(), *best);
      std::vector<std::size_t> leaves;
      for (const auto& r : cfs) leaves.push_back(r.leaf);
      EXPECT_EQ(leaves, OracleCounterfactualLeaves(tree, row, 3));
    }
  }
}

TEST(SampleCounterfactualTest, EmptyRuleGivesCopies) {
  const auto layout = LoanLayout();
  const auto x = LoanRuleInstance();
  RandomEngine rng(1);
  const auto samples =
      SampleCounterfactualInstances(Rule{}, x, PoolWith(x, {}), *layout, 7, rng);
  ASSERT_EQ(samples.size(), 7u);
  for (const auto& z : samples) EXPECT_EQ(z, x);
}

TEST(SampleCounterfactualTest, NumericConditionAltersOnlyItsGene) {
  const auto tree = LoanRuleTree();
  const auto x = LoanRuleInstance();
  const auto row = FlattenOne(x, tree.layout());
  const auto cfs = ExtractCounterfactuals(tree, row, 3);
  RandomEngine rng(2);
  const auto samples = SampleCounterfactualInstances(cfs[0], x, PoolWith(x, {}),
                                                     tree.layout(), 50, rng);
  ASSERT_EQ(samples.size(), 50u);
  for (const auto& z : samples) {
    const double score = std::get<double>(z.attr_genes[0].value);
    EXPECT_GT(score, 323.0);
    EXPECT_LE(score, 1000.0);
    EXPECT_EQ(z.control_flow, x.control_flow);
    EXPECT_EQ(z.attr_genes[1], x.attr_genes[1]);
    EXPECT_EQ(z.attr_genes[2], x.attr_genes[2]);
    EXPECT_EQ(tree.Predict(FlattenOne(z, tree.layout())), "A_Pending");
  }
}

TEST(SampleCounterfactualTest, CategoricalExclusionPicksAllowedLevel) {
  const auto tree = LoanRuleTree();
  const auto x = LoanRuleInstance();
  const auto cfs = ExtractCounterfactuals(tree, FlattenOne(x, tree.layout()), 3);
  RandomEngine rng(3);
  const auto samples = SampleCounterfactualInstances(cfs[1], x, PoolWith(x, {}),
                                                     tree.layout(), 10, rng);
  ASSERT_EQ(samples.size(), 10u);
  for (const auto& z : samples) {
    EXPECT_EQ(std::get<std::string>(z.attr_genes[2].value), "Limit raise");
    EXPECT_EQ(z.attr_genes[0], x.attr_genes[0]);
    EXPECT_EQ(z.attr_genes[1], x.attr_genes[1]);
  }
}

TEST(SampleCounterfactualTest, CountConditionDrawsFromControlFlowPool) {
  const auto layout = LoanLayout();
  const SurrogateTree tree(
      layout, {"A_Canceled", "A_Denied", "A_Pending"},
      {SplitNode(testing::kCountWCall, SplitOp::kLessEqual, 1.5, 1, 2, {5, 5, 0}),
       LeafNode({0, 5, 0}), LeafNode({5, 0, 0})});
  const auto x = LoanInstance({0}, 200.0, "Car", "New credit");
  const auto cfs = ExtractCounterfactuals(tree, FlattenOne(x, *layout), 3);
  ASSERT_EQ(cfs.size(), 1u);
  EXPECT_EQ(cfs[0].ToString(), "{count(W_Call) > 1} → A_Canceled");
  const ControlFlowGene two_calls({0, 1, 1}, 2);
  const auto pool = PoolWith(x, {ControlFlowGene({0, 1}, 2), two_calls});
  RandomEngine rng(4);
  const auto samples = SampleCounterfactualInstances(cfs[0], x, pool, *layout, 20, rng);
  ASSERT_EQ(samples.size(), 20u);
  for (const auto& z : samples) {
    EXPECT_EQ(z.control_flow, two_calls);
    EXPECT_EQ(z.provenance, Provenance::kSynthetic);
  }

  std::string diagnostic;
  const auto none = SampleCounterfactualInstances(
      cfs[0], x, PoolWith(x, {ControlFlowGene({0, 1}, 2)}), *layout, 20, rng, &diagnostic);
  EXPECT_TRUE(none.empty());
  EXPECT_NE(diagnostic.find("control flow"), std::string::npos);
}

TEST(SampleCounterfactualTest, UnsatisfiableRulesReportDiagnostic) {
  const auto layout = LoanLayout();
  const auto x = LoanRuleInstance();
  RandomEngine rng(5);

  Condition above_range;
  above_range.attribute = "CreditScore";
  above_range.op = ConditionOp::kGreater;
  above_range.lower = 1.5;
  above_range.raw_lower = 1500.0;
  above_range.columns = {static_cast<std::size_t>(testing::kCreditScore)};
  Rule rule;
  rule.conditions = {above_range};
  rule.outcome = "A_Pending";
  std::string diagnostic;
  EXPECT_TRUE(SampleCounterfactualInstances(rule, x, PoolWith(x, {}), *layout, 5, rng,
                                            &diagnostic)
                  .empty());
  EXPECT_NE(diagnostic.find("log range"), std::string::npos);

  Condition no_level;
  no_level.attribute = "ApplicationType";
  no_level.kind = ColumnKind::kOneHot;
  no_level.op = ConditionOp::kNotEquals;
  no_level.levels = {"Limit raise", "New credit"};
  no_level.columns = {6, 7};
  rule.conditions = {no_level};
  diagnostic.clear();
  EXPECT_TRUE(SampleCounterfactualInstances(rule, x, PoolWith(x, {}), *layout, 5, rng,
                                            &diagnostic)
                  .empty());
  EXPECT_NE(diagnostic.find("ApplicationType"), std::string::npos);
}

TEST(SampleCounterfactualTest, SamplesSatisfyRulesOnRandomTrees) {
  std::mt19937_64 rng(37);
  auto layout = MixedLayout();
  std::size_t checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    RandomTreeGenerator generator(layout, rng, 1 + trial % 8);
    const SurrogateTree tree = generator.Generate();
    const auto x = RandomMixedInstance(rng);
    std::vector<ControlFlowGene> others;
    for (int i = 0; i < 6; ++i) others.push_back(RandomMixedInstance(rng).control_flow);
    const auto pool = PoolWith(x, others);
    const auto row = FlattenOne(x, *layout);
    for (const Rule& rule : ExtractCounterfactuals(tree, row, 3)) {
      RandomEngine sample_rng(static_cast<std::uint64_t>(trial));
      std::string diagnostic;
      const auto samples =
          SampleCounterfactualInstances(rule, x, pool, *layout, 10, sample_rng, &diagnostic);
      if (samples.empty()) EXPECT_FALSE(diagnostic.empty());
      for (const auto& z : samples) {
        ++checked;
        EXPECT_TRUE(rule.Holds(FlattenOne(z, *layout)));
        EXPECT_TRUE(pool.Contains(z.control_flow));
        EXPECT_EQ(tree.Predict(FlattenOne(z, *layout)), rule.outcome);
      }
    }
  }
  EXPECT_GT(checked, 500u);
}

TEST(SampleCounterfactualTest, SameSeedSameSamples) {
  const auto tree = LoanRuleTree();
  const auto x = LoanRuleInstance();
  const auto cfs = ExtractCounterfactuals(tree, FlattenOne(x, tree.layout()), 3);
  RandomEngine a(9), b(9);
  const auto pool = PoolWith(x, {});
  EXPECT_EQ(SampleCounterfactualInstances(cfs[0], x, pool, tree.layout(), 5, a),
            SampleCounterfactualInstances(cfs[0], x, pool, tree.layout(), 5, b));
}

Explanation WithImportance(std::size_t length, std::vector<std::string> attributes,
                           std::vector<double> values) {
  Explanation e;
  e.prefix_length = length;
  e.importance.attributes = std::move(attributes);
  e.importance.values = std::move(values);
  return e;
}

TEST(AggregateImportanceTest, SingleExplanation) {
  const std::vector<Explanation> in = {WithImportance(4, {"u", "v"}, {1.0, 0.0})};
  const auto out = AggregateImportance(in, 5);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out.at(4), (ImportanceRanking{{"u", 1.0}}));
}

TEST(AggregateImportanceTest, CountsPerLength) {
  const std::vector<Explanation> in = {WithImportance(5, {"u", "v"}, {1.0, 0.0}),
                                       WithImportance(5, {"u", "v"}, {0.0, 1.0}),
                                       WithImportance(7, {"u", "v"}, {0.0, 0.6})};
  const auto out = AggregateImportance(in, 5);
  const auto& five = out.at(5);
  ASSERT_EQ(five.size(), 2u);
  EXPECT_EQ(five[0], (std::pair<std::string, double>{"u", 0.5}));
  EXPECT_EQ(five[1], (std::pair<std::string, double>{"v", 0.5}));
  EXPECT_EQ(five[0].second, 0.5);
  EXPECT_EQ(five[1].second, 0.5);
  EXPECT_EQ(out.at(7), (ImportanceRanking{{"v", 1.0}}));
}

TEST(AggregateImportanceTest, TruncatesToTopK) {
  const std::vector<std::string> attrs = {"a", "b", "c", "d", "e", "f", "g"};
  std::vector<Explanation> in;
  for (int i = 0; i < 7; ++i) {
    std::vector<double> values(7, 0.0);
    for (int j = 0; j <= i; ++j) values[static_cast<std::size_t>(j)] = 1.0 + j;
    in.push_back(WithImportance(3, attrs, values));
  }
  const auto ranking = AggregateImportance(in, 5).at(3);
  ASSERT_EQ(ranking.size(), 5u);
  for (std::size_t i = 1; i < ranking.size(); ++i) {
    EXPECT_GE(ranking[i - 1].second, ranking[i].second);
  }
}

TEST(AggregateImportanceTest, RejectsEmptyInput) {
  EXPECT_THROW(AggregateImportance({}, 5), InputError);
  const std::vector<Explanation> in = {WithImportance(4, {"u"}, {1.0})};
  EXPECT_THROW(AggregateImportance(in, 0), InputError);
}

}  // namespace
}  // namespace procf
