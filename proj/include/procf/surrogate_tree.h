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

// Local surrogate: a greedy CART classifier with Gini impurity.
//
// Numeric and frequency columns split on `value <= threshold` (thresholds are
// midpoints between consecutive distinct values). One-hot columns split on
// `column = level`, i.e. value > 0.5. Rows satisfying the condition go left.

#ifndef PROCF_SURROGATE_TREE_H_
#define PROCF_SURROGATE_TREE_H_

#include <cstddef>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "procf/encoding.h"
#include "procf/event_log.h"

namespace procf {

struct TreeParams {
  static constexpr int kUnlimitedDepth = 0;

  // <= 0 means unlimited.
  int max_depth = 8;
  int min_samples_leaf = 5;
  double min_impurity_decrease = 0.0;

  nlohmann::json ToJson() const;
};

enum class SplitOp { kLessEqual, kEquals };

struct TreeNode {
  // Split; column < 0 marks a leaf.
  int column = -1;
  SplitOp op = SplitOp::kLessEqual;
  double threshold = 0.0;
  int left = -1;
  int right = -1;

  // Training rows per class (tree class order).
  std::vector<int> histogram;
  // argmax of histogram, ties to the lowest class index.
  int label = -1;
  double impurity = 0.0;
  // impurity - sum(n_child / n * impurity_child); 0 for leaves.
  double decrease = 0.0;

  bool is_leaf() const { return column < 0; }
  int samples() const;
  // Whether `value` of the split column satisfies the condition (goes left).
  bool GoesLeft(double value) const {
    return op == SplitOp::kLessEqual ? value <= threshold : value > 0.5;
  }
};

double Gini(std::span<const int> histogram);

class SurrogateTree {
 public:
  // Nodes are stored with the root at index 0. Leaf labels are recomputed
  // from the histograms and the structure is validated. `classes` are sorted.
  SurrogateTree(std::shared_ptr<const FeatureLayout> layout,
                std::vector<OutcomeLabel> classes, std::vector<TreeNode> nodes,
                TreeParams params = {});

  const FeatureLayout& layout() const { return *layout_; }
  const std::shared_ptr<const FeatureLayout>& layout_ptr() const { return layout_; }
  std::span<const OutcomeLabel> classes() const { return classes_; }
  std::span<const TreeNode> nodes() const { return nodes_; }
  const TreeNode& node(std::size_t i) const { return nodes_[i]; }
  const TreeParams& params() const { return params_; }

  // Index of the leaf reached by `row`.
  std::size_t LeafFor(std::span<const double> row) const;
  const OutcomeLabel& Predict(std::span<const double> row) const;
  std::vector<OutcomeLabel> Predict(const FeatureMatrix& rows) const;
  const OutcomeLabel& ClassName(int label) const {
    return classes_[static_cast<std::size_t>(label)];
  }

  std::size_t leaf_count() const;
  std::size_t depth() const;

  // {"classes", "columns", "params", "nodes": [...]} with node ids equal to
  // their index. Split nodes carry column/op/threshold/left/right; leaves
  // carry class and support; every node carries its histogram.
  nlohmann::json ToJson() const;

 private:
  std::shared_ptr<const FeatureLayout> layout_;
  std::vector<OutcomeLabel> classes_;
  std::vector<TreeNode> nodes_;
  TreeParams params_;
};

// Greedy CART fit. `classes` defaults to the sorted distinct labels; when
// given, every label must be a member. Needs >= 2 rows.
SurrogateTree FitTree(const FeatureMatrix& train, std::span<const OutcomeLabel> labels,
                      const TreeParams& params,
                      std::vector<OutcomeLabel> classes = {});

struct ClassAgreement {
  std::size_t agree = 0;
  std::size_t total = 0;
};

struct FidelityReport {
  double fidelity = 0.0;
  std::size_t test_size = 0;
  std::map<OutcomeLabel, ClassAgreement> per_class;

  nlohmann::json ToJson() const;
};

// Fraction of rows where the tree agrees with the black-box labels. Throws
// std::invalid_argument on an empty test set or size mismatch.
FidelityReport Fidelity(const SurrogateTree& tree,
                        std::span<const OutcomeLabel> black_box_labels,
                        const FeatureMatrix& test);

// Normalized impurity-decrease importance per source attribute.
struct ImportanceVector {
  std::vector<std::string> attributes;
  std::vector<double> values;

  double Get(std::string_view attribute) const;
  // Up to k attributes with positive importance, descending; ties by name.
  std::vector<std::pair<std::string, double>> Top(std::size_t k) const;
  nlohmann::json ToJson() const;
};

ImportanceVector Importance(const SurrogateTree& tree);

}  // namespace procf

#endif  // PROCF_SURROGATE_TREE_H_
