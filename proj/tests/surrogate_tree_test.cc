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

#include "procf/surrogate_tree.h"

#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>

#include "gtest/gtest.h"
#include "test_util.h"
#include "tree_oracle.h"

namespace procf {
namespace {

using ::procf::testing::ExhaustiveGreedyLabels;
using ::procf::testing::MatrixOf;
using ::procf::testing::NumericLayout;
using ::procf::testing::OptimalCorrect;
using ::procf::testing::SmallData;

TreeNode Leaf(std::vector<int> histogram) {
  TreeNode n;
  n.histogram = std::move(histogram);
  return n;
}

TreeNode Split(int column, double threshold, int left, int right,
               std::vector<int> histogram) {
  TreeNode n;
  n.column = column;
  n.threshold = threshold;
  n.left = left;
  n.right = right;
  n.histogram = std::move(histogram);
  return n;
}

double TrainingAccuracy(const SurrogateTree& tree, const FeatureMatrix& x,
                        const std::vector<OutcomeLabel>& y) {
  std::size_t agree = 0;
  for (std::size_t r = 0; r < x.rows(); ++r) agree += tree.Predict(x.row(r)) == y[r];
  return static_cast<double>(agree) / static_cast<double>(x.rows());
}

TEST(GiniTest, KnownValues) {
  EXPECT_DOUBLE_EQ(Gini(std::vector<int>{5, 0}), 0.0);
  EXPECT_DOUBLE_EQ(Gini(std::vector<int>{2, 2}), 0.5);
  EXPECT_DOUBLE_EQ(Gini(std::vector<int>{1, 1, 1}), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(Gini(std::vector<int>{1, 3}), 0.375);
  EXPECT_DOUBLE_EQ(Gini(std::vector<int>{0, 0}), 0.0);
}

TEST(FitTreeTest, SeparableThreshold) {
  auto layout = NumericLayout(1);
  const auto x = MatrixOf(layout, {{1}, {2}, {3}, {4}});
  const std::vector<OutcomeLabel> y = {"A", "A", "B", "B"};
  const auto tree = FitTree(x, y, {.max_depth = 1, .min_samples_leaf = 1});
  const TreeNode& root = tree.node(0);
  ASSERT_FALSE(root.is_leaf());
  EXPECT_EQ(root.column, 0);
  EXPECT_DOUBLE_EQ(root.threshold, 2.5);
  EXPECT_DOUBLE_EQ(root.decrease, 0.5);
  EXPECT_EQ(tree.leaf_count(), 2u);
  EXPECT_EQ(TrainingAccuracy(tree, x, y), 1.0);
}

TEST(FitTreeTest, BoundaryValueGoesLeft) {
  auto layout = NumericLayout(1);
  const auto x = MatrixOf(layout, {{1}, {2}, {3}, {4}});
  const std::vector<OutcomeLabel> y = {"A", "A", "B", "B"};
  const auto tree = FitTree(x, y, {.max_depth = 1, .min_samples_leaf = 1});
  const std::vector<double> at{2.5}, above{std::nextafter(2.5, 3.0)};
  EXPECT_EQ(tree.Predict(at), "A");
  EXPECT_EQ(tree.Predict(above), "B");
}

TEST(FitTreeTest, SingleClassGivesOneLeaf) {
  auto layout = NumericLayout(2);
  const auto x = MatrixOf(layout, {{1, 0}, {2, 1}, {3, 0}});
  const std::vector<OutcomeLabel> y(3, "P");
  const auto tree = FitTree(x, y, {});
  EXPECT_EQ(tree.nodes().size(), 1u);
  EXPECT_EQ(tree.depth(), 0u);
  EXPECT_EQ(tree.Predict(x.row(0)), "P");
}

TEST(FitTreeTest, XorNeedsDepthTwo) {
  auto layout = NumericLayout(2);
  const auto x = MatrixOf(layout, {{0, 0}, {0, 1}, {1, 0}, {1, 1}});
  const std::vector<OutcomeLabel> y = {"N", "P", "P", "N"};
  const auto tree = FitTree(x, y, {.max_depth = 2, .min_samples_leaf = 1});
  EXPECT_EQ(TrainingAccuracy(tree, x, y), 1.0);
  EXPECT_EQ(tree.depth(), 2u);
}

TEST(FitTreeTest, MaxDepthAndMinLeafRespected) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  auto layout = NumericLayout(3);
  std::vector<std::vector<double>> rows;
  std::vector<OutcomeLabel> y;
  for (int i = 0; i < 300; ++i) {
    rows.push_back({u(rng), u(rng), u(rng)});
    y.push_back(u(rng) < 0.5 ? "a" : (u(rng) < 0.5 ? "b" : "c"));
  }
  const auto x = MatrixOf(layout, rows);
  const auto tree = FitTree(x, y, {.max_depth = 4, .min_samples_leaf = 7});
  EXPECT_LE(tree.depth(), 4u);
  for (const auto& node : tree.nodes()) {
    if (node.is_leaf()) EXPECT_GE(node.samples(), 7);
  }
}

TEST(FitTreeTest, MemorizesConsistentData) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> v(0, 9), cls(0, 2);
  for (int trial = 0; trial < 50; ++trial) {
    auto layout = NumericLayout(3);
    std::set<std::vector<double>> seen;
    std::vector<std::vector<double>> rows;
    std::vector<OutcomeLabel> y;
    for (int i = 0; i < 80; ++i) {
      std::vector<double> row = {v(rng) / 9.0, v(rng) / 9.0, v(rng) / 9.0};
      if (!seen.insert(row).second) continue;
      rows.push_back(row);
      y.push_back(std::string(1, static_cast<char>('a' + cls(rng))));
    }
    const auto x = MatrixOf(layout, rows);
    const auto tree = FitTree(
        x, y, {.max_depth = TreeParams::kUnlimitedDepth, .min_samples_leaf = 1});
    const auto report = Fidelity(tree, y, x);
    EXPECT_EQ(report.fidelity, 1.0);
  }
}

TEST(FitTreeTest, DecreasesNonnegativeAndAboveMinimum) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0, 1);
  for (double min_decrease : {0.0, 0.01, 0.05}) {
    auto layout = NumericLayout(2);
    std::vector<std::vector<double>> rows;
    std::vector<OutcomeLabel> y;
    for (int i = 0; i < 200; ++i) {
      const double a = u(rng), b = u(rng);
      rows.push_back({a, b});
      y.push_back(a + 0.3 * u(rng) > 0.6 ? "hi" : "lo");
    }
    const auto x = MatrixOf(layout, rows);
    const auto tree = FitTree(
        x, y, {.max_depth = 0, .min_samples_leaf = 1, .min_impurity_decrease = min_decrease});
    for (const auto& node : tree.nodes()) {
      if (node.is_leaf()) continue;
      EXPECT_GE(node.decrease, -1e-12);
      EXPECT_GE(node.decrease, min_decrease - 1e-12);
    }
  }
}

TEST(FitTreeTest, AgreesWithExhaustiveSplitOracle) {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> n_rows(2, 30), n_cols(1, 2), value(0, 5),
      n_classes(2, 3), depth(0, 3), min_leaf(1, 3);
  for (int trial = 0; trial < 400; ++trial) {
    SmallData d;
    d.n_classes = n_classes(rng);
    std::uniform_int_distribution<int> cls(0, d.n_classes - 1);
    const auto cols = static_cast<std::size_t>(n_cols(rng));
    const int n = n_rows(rng);
    std::vector<OutcomeLabel> names;
    for (int i = 0; i < n; ++i) {
      std::vector<double> row(cols);
      for (auto& v : row) v = value(rng) / 5.0;
      d.x.push_back(row);
      d.y.push_back(cls(rng));
      names.push_back(std::string(1, static_cast<char>('a' + d.y.back())));
    }
    std::vector<OutcomeLabel> classes;
    for (int c = 0; c < d.n_classes; ++c) classes.push_back(std::string(1, 'a' + c));

    const int max_depth = depth(rng);
    const auto leaf = static_cast<std::size_t>(min_leaf(rng));
    const auto x = MatrixOf(NumericLayout(cols), d.x);
    const auto tree =
        FitTree(x, names, {.max_depth = max_depth, .min_samples_leaf = static_cast<int>(leaf)},
                classes);
    const auto expected = ExhaustiveGreedyLabels(d, max_depth, leaf);
    int correct = 0;
    for (int r = 0; r < n; ++r) {
      const auto& got = tree.Predict(x.row(static_cast<std::size_t>(r)));
      EXPECT_EQ(got, classes[static_cast<std::size_t>(expected[static_cast<std::size_t>(r)])])
          << "trial " << trial << " row " << r;
      correct += got == names[static_cast<std::size_t>(r)];
    }
    // No tree of the same depth bound does better than optimal.
    if (max_depth > 0 && max_depth <= 2) {
      std::vector<std::size_t> all(static_cast<std::size_t>(n));
      std::iota(all.begin(), all.end(), 0);
      EXPECT_LE(correct, OptimalCorrect(d, all, max_depth, leaf));
    }
  }
}

TEST(FitTreeTest, OneHotSplitUsesLevel) {
  std::vector<Column> columns(2);
  columns[0] = {"g=a", ColumnKind::kOneHot, "g", "a", 0};
  columns[1] = {"g=b", ColumnKind::kOneHot, "g", "b", 0};
  auto layout = std::make_shared<FeatureLayout>(columns);
  const auto x = MatrixOf(layout, {{1, 0}, {1, 0}, {0, 1}, {0, 1}});
  const auto tree = FitTree(x, std::vector<OutcomeLabel>{"P", "P", "N", "N"},
                            {.max_depth = 1, .min_samples_leaf = 1});
  EXPECT_EQ(tree.node(0).op, SplitOp::kEquals);
  EXPECT_EQ(tree.node(0).column, 0);
  const auto json = tree.ToJson();
  EXPECT_EQ(json["nodes"][0]["op"], "=");
  EXPECT_EQ(json["nodes"][0]["level"], "a");
  EXPECT_EQ(json["nodes"][1]["class"], "P");
}

TEST(FitTreeTest, RejectsBadInput) {
  auto layout = NumericLayout(1);
  const auto x = MatrixOf(layout, {{1}, {2}});
  EXPECT_THROW(FitTree(x, std::vector<OutcomeLabel>{"a"}, {}), std::invalid_argument);
  EXPECT_THROW(FitTree(MatrixOf(layout, {{1}}), std::vector<OutcomeLabel>{"a"}, {}),
               std::invalid_argument);
  EXPECT_THROW(FitTree(x, std::vector<OutcomeLabel>{"a", "z"}, {}, {"a", "b"}),
               std::invalid_argument);
}

TEST(FidelityTest, ConstantTreeOnThirdPositive) {
  auto layout = NumericLayout(1);
  const SurrogateTree tree(layout, {"N", "P"}, {Leaf({0, 4})});
  const auto test = MatrixOf(layout, {{0}, {1}, {2}});
  const auto report = Fidelity(tree, std::vector<OutcomeLabel>{"P", "N", "N"}, test);
  EXPECT_NEAR(report.fidelity, 1.0 / 3.0, 1e-12);
  EXPECT_EQ(report.test_size, 3u);
  EXPECT_EQ(report.per_class.at("P").agree, 1u);
  EXPECT_EQ(report.per_class.at("N").agree, 0u);
  EXPECT_EQ(report.per_class.at("N").total, 2u);
}

TEST(FidelityTest, EmptyTestSetThrows) {
  auto layout = NumericLayout(1);
  const SurrogateTree tree(layout, {"N", "P"}, {Leaf({0, 4})});
  EXPECT_THROW(Fidelity(tree, {}, MatrixOf(layout, {})), std::invalid_argument);
}

TEST(ImportanceTest, DepthOneTreeGivesAllToItsAttribute) {
  std::vector<Column> columns(3);
  columns[0] = {"CreditScore", ColumnKind::kNumeric, "CreditScore", "", 0};
  columns[1] = {"LoanGoal=Car", ColumnKind::kOneHot, "LoanGoal", "Car", 1};
  columns[2] = {"LoanGoal=Other", ColumnKind::kOneHot, "LoanGoal", "Other", 1};
  auto layout = std::make_shared<FeatureLayout>(columns);
  const auto x = MatrixOf(layout, {{0.1, 1, 0}, {0.2, 0, 1}, {0.8, 1, 0}, {0.9, 0, 1}});
  const auto tree = FitTree(x, std::vector<OutcomeLabel>{"D", "D", "P", "P"},
                            {.max_depth = 1, .min_samples_leaf = 1});
  const auto importance = Importance(tree);
  EXPECT_EQ(importance.attributes, (std::vector<std::string>{"CreditScore", "LoanGoal"}));
  EXPECT_EQ(importance.Get("CreditScore"), 1.0);
  EXPECT_EQ(importance.Get("LoanGoal"), 0.0);
  EXPECT_EQ(importance.Top(5).size(), 1u);
}

TEST(ImportanceTest, SingleLeafGivesZeros) {
  const SurrogateTree tree(NumericLayout(3), {"a", "b"}, {Leaf({3, 1})});
  const auto importance = Importance(tree);
  ASSERT_EQ(importance.values.size(), 3u);
  for (double v : importance.values) EXPECT_EQ(v, 0.0);
  EXPECT_TRUE(importance.Top(3).empty());
}

// 8 rows over classes (a, b, c): root (2,2,4) splits on u into (1,1,4) and
// (1,1,0); the left child splits on v into (0,1,2) and (1,0,2).
TEST(ImportanceTest, HandComputedTwoLevelTree) {
  const SurrogateTree tree(NumericLayout(2), {"a", "b", "c"},
                           {Split(0, 0.5, 1, 4, {2, 2, 4}), Split(1, 0.5, 2, 3, {1, 1, 4}),
                            Leaf({0, 1, 2}), Leaf({1, 0, 2}), Leaf({1, 1, 0})});
  // Gini: root 1 - 24/64 = 5/8; (1,1,4) 1 - 18/36 = 1/2; (1,1,0) 1/2;
  // (0,1,2) and (1,0,2) 1 - 5/9 = 4/9.
  const double root_decrease = 5.0 / 8 - 6.0 / 8 * 0.5 - 2.0 / 8 * 0.5;  // 1/8
  const double child_decrease = 0.5 - 4.0 / 9;                          // 1/18
  const double weighted_child = 6.0 / 8 * child_decrease;                 // 1/24
  EXPECT_NEAR(tree.node(0).decrease, root_decrease, 1e-15);
  EXPECT_NEAR(tree.node(1).decrease, child_decrease, 1e-15);
  const auto importance = Importance(tree);
  EXPECT_NEAR(importance.Get("x0"), root_decrease / (root_decrease + weighted_child), 1e-12);
  EXPECT_NEAR(importance.Get("x0"), 0.75, 1e-12);
  EXPECT_NEAR(importance.Get("x1"), 0.25, 1e-12);
  EXPECT_EQ(importance.Top(1).front().first, "x0");
}

TEST(ImportanceTest, GroupsColumnsBySourceAttribute) {
  std::vector<Column> columns(4);
  columns[0] = {"count(A)", ColumnKind::kFrequency, std::string(kControlFlowAttribute), "A", 0};
  columns[1] = {"count(B)", ColumnKind::kFrequency, std::string(kControlFlowAttribute), "B", 1};
  columns[2] = {"g=a", ColumnKind::kOneHot, "g", "a", 0};
  columns[3] = {"g=b", ColumnKind::kOneHot, "g", "b", 0};
  auto layout = std::make_shared<FeatureLayout>(columns);
  // Splits on count(A), count(B) and g=b; every one separates evenly.
  const SurrogateTree tree(
      layout, {"n", "p"},
      {Split(0, 0.5, 1, 2, {4, 4}), Split(1, 0.5, 3, 4, {2, 2}), Split(3, 0.5, 5, 6, {2, 2}),
       Leaf({2, 0}), Leaf({0, 2}), Leaf({2, 0}), Leaf({0, 2})});
  const auto importance = Importance(tree);
  EXPECT_EQ(importance.attributes,
            (std::vector<std::string>{std::string(kControlFlowAttribute), "g"}));
  // Root decrease 0; each child 0.5 weighted by 1/2.
  EXPECT_NEAR(importance.Get(kControlFlowAttribute), 0.5, 1e-12);
  EXPECT_NEAR(importance.Get("g"), 0.5, 1e-12);
}

TEST(ImportanceTest, SumsToOneOnFittedTrees) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<std::vector<double>> rows;
    std::vector<OutcomeLabel> y;
    for (int i = 0; i < 120; ++i) {
      const double a = u(rng), b = u(rng), c = u(rng);
      rows.push_back({a, b, c});
      y.push_back(a > 0.5 ? (b > 0.3 ? "x" : "y") : (u(rng) < 0.2 ? "x" : "z"));
    }
    const auto tree =
        FitTree(MatrixOf(NumericLayout(3), rows), y, {.max_depth = 6, .min_samples_leaf = 2});
    const auto importance = Importance(tree);
    double sum = 0.0;
    for (double v : importance.values) {
      EXPECT_GE(v, 0.0);
      sum += v;
    }
    EXPECT_NEAR(sum, 1.0, 1e-9);
  }
}

TEST(SurrogateTreeTest, ConstructorValidates) {
  auto layout = NumericLayout(1);
  EXPECT_THROW(SurrogateTree(layout, {"b", "a"}, {Leaf({1, 1})}), std::invalid_argument);
  EXPECT_THROW(SurrogateTree(layout, {"a", "b"}, {Leaf({1})}), std::invalid_argument);
  EXPECT_THROW(SurrogateTree(layout, {"a", "b"}, {}), std::invalid_argument);
  EXPECT_THROW(SurrogateTree(layout, {"a", "b"}, {Split(0, 0.5, 1, 5, {1, 1}), Leaf({1, 0})}),
               std::invalid_argument);
  EXPECT_THROW(SurrogateTree(layout, {"a", "b"},
                             {Split(0, 0.5, 1, 1, {1, 1}), Leaf({1, 0}), Leaf({0, 1})}),
               std::invalid_argument);
  EXPECT_THROW(SurrogateTree(layout, {"a", "b"},
                             {Split(3, 0.5, 1, 2, {1, 1}), Leaf({1, 0}), Leaf({0, 1})}),
               std::invalid_argument);
}

TEST(SurrogateTreeTest, JsonLayout) {
  const SurrogateTree tree(NumericLayout(1), {"a", "b"},
                           {Split(0, 0.25, 1, 2, {3, 1}), Leaf({3, 0}), Leaf({0, 1})});
  const auto json = tree.ToJson();
  EXPECT_EQ(json["classes"], nlohmann::json({"a", "b"}));
  EXPECT_EQ(json["columns"], nlohmann::json({"x0"}));
  ASSERT_EQ(json["nodes"].size(), 3u);
  const auto& root = json["nodes"][0];
  EXPECT_EQ(root["op"], "<=");
  EXPECT_EQ(root["threshold"], 0.25);
  EXPECT_EQ(root["left"], 1);
  EXPECT_EQ(root["samples"], 4);
  EXPECT_EQ(json["nodes"][2]["class"], "b");
  EXPECT_EQ(json["nodes"][2]["support"], 1);
  EXPECT_EQ(json["nodes"][1]["leaf"], true);
}

}  // namespace
}  // namespace procf
