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

#include <algorithm>
#include <numeric>
#include <set>
#include <stdexcept>

namespace procf {
namespace {

// Decreases closer than this are treated as ties.
constexpr double kTieTolerance = 1e-12;

int ArgMax(std::span<const int> histogram) {
  int best = 0;
  for (std::size_t c = 1; c < histogram.size(); ++c) {
    if (histogram[c] > histogram[static_cast<std::size_t>(best)]) {
      best = static_cast<int>(c);
    }
  }
  return best;
}

struct SplitCandidate {
  int column = -1;
  SplitOp op = SplitOp::kLessEqual;
  double threshold = 0.0;
  double decrease = -1.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const FeatureMatrix& x, std::vector<int> y, std::size_t n_classes,
              const TreeParams& params)
      : x_(x), y_(std::move(y)), n_classes_(n_classes), params_(params) {}

  std::vector<TreeNode> Build() {
    std::vector<std::size_t> rows(x_.rows());
    std::iota(rows.begin(), rows.end(), 0);
    Grow(rows, 0);
    return std::move(nodes_);
  }

 private:
  std::vector<int> Histogram(std::span<const std::size_t> rows) const {
    std::vector<int> histogram(n_classes_, 0);
    for (std::size_t r : rows) ++histogram[static_cast<std::size_t>(y_[r])];
    return histogram;
  }

  double WeightedChildImpurity(const std::vector<int>& left,
                               const std::vector<int>& right, double n_left,
                               double n_right) const {
    const double n = n_left + n_right;
    return (n_left / n) * Gini(left) + (n_right / n) * Gini(right);
  }

  SplitCandidate BestSplit(std::span<const std::size_t> rows,
                           const std::vector<int>& histogram,
                           double impurity) const {
    const auto min_leaf = static_cast<std::size_t>(std::max(1, params_.min_samples_leaf));
    const std::size_t n = rows.size();
    SplitCandidate best;
    std::vector<std::size_t> sorted(rows.begin(), rows.end());
    std::vector<int> left(n_classes_), right(n_classes_);

    for (std::size_t c = 0; c < x_.cols(); ++c) {
      if (x_.layout().column(c).kind == ColumnKind::kOneHot) {
        std::fill(left.begin(), left.end(), 0);
        std::size_t n_left = 0;
        for (std::size_t r : rows) {
          if (x_.at(r, c) > 0.5) {
            ++left[static_cast<std::size_t>(y_[r])];
            ++n_left;
          }
        }
        if (n_left < min_leaf || n - n_left < min_leaf) continue;
        for (std::size_t k = 0; k < n_classes_; ++k) right[k] = histogram[k] - left[k];
        const double decrease =
            impurity - WeightedChildImpurity(left, right, static_cast<double>(n_left),
                                             static_cast<double>(n - n_left));
        if (decrease > best.decrease + kTieTolerance) {
          best = {static_cast<int>(c), SplitOp::kEquals, 0.5, decrease};
        }
        continue;
      }

      std::stable_sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) {
        return x_.at(a, c) < x_.at(b, c);
      });
      std::fill(left.begin(), left.end(), 0);
      right = histogram;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        const auto cls = static_cast<std::size_t>(y_[sorted[i]]);
        ++left[cls];
        --right[cls];
        const double here = x_.at(sorted[i], c);
        const double next = x_.at(sorted[i + 1], c);
        if (!(here < next)) continue;
        const std::size_t n_left = i + 1;
        if (n_left < min_leaf || n - n_left < min_leaf) continue;
        const double decrease =
            impurity - WeightedChildImpurity(left, right, static_cast<double>(n_left),
                                             static_cast<double>(n - n_left));
        if (decrease > best.decrease + kTieTolerance) {
          double threshold = here + (next - here) / 2.0;
          if (!(threshold < next)) threshold = here;
          best = {static_cast<int>(c), SplitOp::kLessEqual, threshold, decrease};
        }
      }
    }
    return best;
  }

  int Grow(std::span<const std::size_t> rows, int depth) {
    const int index = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    TreeNode node;
    node.histogram = Histogram(rows);
    node.impurity = Gini(node.histogram);
    node.label = ArgMax(node.histogram);

    const bool pure = node.impurity <= 0.0;
    const bool depth_reached = params_.max_depth > 0 && depth >= params_.max_depth;
    const bool too_small =
        rows.size() < 2 * static_cast<std::size_t>(std::max(1, params_.min_samples_leaf));
    if (!pure && !depth_reached && !too_small) {
      const SplitCandidate split = BestSplit(rows, node.histogram, node.impurity);
      if (split.column >= 0 &&
          split.decrease + kTieTolerance >= params_.min_impurity_decrease) {
        node.column = split.column;
        node.op = split.op;
        node.threshold = split.threshold;
        std::vector<std::size_t> left_rows, right_rows;
        for (std::size_t r : rows) {
          (node.GoesLeft(x_.at(r, static_cast<std::size_t>(split.column)))
               ? left_rows
               : right_rows)
              .push_back(r);
        }
        nodes_[static_cast<std::size_t>(index)] = node;
        const int left = Grow(left_rows, depth + 1);
        const int right = Grow(right_rows, depth + 1);
        nodes_[static_cast<std::size_t>(index)].left = left;
        nodes_[static_cast<std::size_t>(index)].right = right;
        return index;
      }
    }
    nodes_[static_cast<std::size_t>(index)] = std::move(node);
    return index;
  }

  const FeatureMatrix& x_;
  std::vector<int> y_;
  std::size_t n_classes_;
  TreeParams params_;
  std::vector<TreeNode> nodes_;
};

}  // namespace

nlohmann::json TreeParams::ToJson() const {
  return {{"max_depth", max_depth},
          {"min_samples_leaf", min_samples_leaf},
          {"min_impurity_decrease", min_impurity_decrease}};
}

int TreeNode::samples() const {
  return std::accumulate(histogram.begin(), histogram.end(), 0);
}

double Gini(std::span<const int> histogram) {
  const double n = std::accumulate(histogram.begin(), histogram.end(), 0.0);
  if (n <= 0.0) return 0.0;
  double sum_sq = 0.0;
  for (int count : histogram) {
    const double p = count / n;
    sum_sq += p * p;
  }
  return 1.0 - sum_sq;
}

SurrogateTree::SurrogateTree(std::shared_ptr<const FeatureLayout> layout,
                             std::vector<OutcomeLabel> classes,
                             std::vector<TreeNode> nodes, TreeParams params)
    : layout_(std::move(layout)),
      classes_(std::move(classes)),
      nodes_(std::move(nodes)),
      params_(params) {
  if (!layout_) throw std::invalid_argument("tree needs a layout");
  if (nodes_.empty()) throw std::invalid_argument("tree needs at least one node");
  if (classes_.empty()) throw std::invalid_argument("tree needs at least one class");
  if (!std::is_sorted(classes_.begin(), classes_.end()) ||
      std::adjacent_find(classes_.begin(), classes_.end()) != classes_.end()) {
    throw std::invalid_argument("tree classes must be sorted and distinct");
  }
  std::vector<int> parents(nodes_.size(), 0);
  for (auto& node : nodes_) {
    if (node.histogram.size() != classes_.size()) {
      throw std::invalid_argument("node histogram does not match the classes");
    }
    node.label = ArgMax(node.histogram);
    node.impurity = Gini(node.histogram);
    if (node.is_leaf()) {
      node.left = node.right = -1;
      node.decrease = 0.0;
      continue;
    }
    if (static_cast<std::size_t>(node.column) >= layout_->size()) {
      throw std::invalid_argument("split column outside the layout");
    }
    for (int child : {node.left, node.right}) {
      if (child <= 0 || static_cast<std::size_t>(child) >= nodes_.size()) {
        throw std::invalid_argument("split node has an invalid child index");
      }
      ++parents[static_cast<std::size_t>(child)];
    }
  }
  for (std::size_t i = 1; i < nodes_.size(); ++i) {
    if (parents[i] != 1) throw std::invalid_argument("nodes do not form a tree");
  }
  for (auto& node : nodes_) {
    if (node.is_leaf()) continue;
    const TreeNode& l = nodes_[static_cast<std::size_t>(node.left)];
    const TreeNode& r = nodes_[static_cast<std::size_t>(node.right)];
    const double n_l = l.samples();
    const double n_r = r.samples();
    const double n = n_l + n_r;
    node.decrease =
        n > 0 ? node.impurity - (n_l / n) * l.impurity - (n_r / n) * r.impurity : 0.0;
  }
}

std::size_t SurrogateTree::LeafFor(std::span<const double> row) const {
  std::size_t index = 0;
  while (!nodes_[index].is_leaf()) {
    const TreeNode& node = nodes_[index];
    index = static_cast<std::size_t>(
        node.GoesLeft(row[static_cast<std::size_t>(node.column)]) ? node.left
                                                                   : node.right);
  }
  return index;
}

const OutcomeLabel& SurrogateTree::Predict(std::span<const double> row) const {
  return ClassName(nodes_[LeafFor(row)].label);
}

std::vector<OutcomeLabel> SurrogateTree::Predict(const FeatureMatrix& rows) const {
  std::vector<OutcomeLabel> out;
  out.reserve(rows.rows());
  for (std::size_t r = 0; r < rows.rows(); ++r) out.push_back(Predict(rows.row(r)));
  return out;
}

std::size_t SurrogateTree::leaf_count() const {
  return static_cast<std::size_t>(std::count_if(
      nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

std::size_t SurrogateTree::depth() const {
  std::size_t deepest = 0;
  std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
  while (!stack.empty()) {
    auto [index, d] = stack.back();
    stack.pop_back();
    deepest = std::max(deepest, d);
    const TreeNode& node = nodes_[index];
    if (!node.is_leaf()) {
      stack.emplace_back(static_cast<std::size_t>(node.left), d + 1);
      stack.emplace_back(static_cast<std::size_t>(node.right), d + 1);
    }
  }
  return deepest;
}

nlohmann::json SurrogateTree::ToJson() const {
  nlohmann::json doc;
  doc["classes"] = classes_;
  doc["columns"] = layout_->ColumnNames();
  doc["params"] = params_.ToJson();
  auto& nodes = doc["nodes"] = nlohmann::json::array();
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const TreeNode& node = nodes_[i];
    nlohmann::json item;
    item["id"] = i;
    item["histogram"] = node.histogram;
    item["samples"] = node.samples();
    item["impurity"] = node.impurity;
    if (node.is_leaf()) {
      item["leaf"] = true;
      item["class"] = ClassName(node.label);
      item["support"] = node.samples();
    } else {
      const Column& column = layout_->column(static_cast<std::size_t>(node.column));
      item["leaf"] = false;
      item["column"] = column.name;
      item["column_index"] = node.column;
      if (node.op == SplitOp::kLessEqual) {
        item["op"] = "<=";
        item["threshold"] = node.threshold;
      } else {
        item["op"] = "=";
        item["level"] = column.level;
      }
      item["decrease"] = node.decrease;
      item["left"] = node.left;
      item["right"] = node.right;
    }
    nodes.push_back(std::move(item));
  }
  return doc;
}

SurrogateTree FitTree(const FeatureMatrix& train, std::span<const OutcomeLabel> labels,
                      const TreeParams& params, std::vector<OutcomeLabel> classes) {
  if (labels.size() != train.rows()) {
    throw std::invalid_argument("one label per training row is required");
  }
  if (train.rows() < 2) throw std::invalid_argument("need at least 2 training rows");
  if (classes.empty()) {
    std::set<OutcomeLabel> distinct(labels.begin(), labels.end());
    classes.assign(distinct.begin(), distinct.end());
  } else {
    std::sort(classes.begin(), classes.end());
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  }
  std::vector<int> y;
  y.reserve(labels.size());
  for (const auto& label : labels) {
    auto it = std::lower_bound(classes.begin(), classes.end(), label);
    if (it == classes.end() || *it != label) {
      throw std::invalid_argument("label '" + label + "' is not a tree class");
    }
    y.push_back(static_cast<int>(it - classes.begin()));
  }
  TreeBuilder builder(train, std::move(y), classes.size(), params);
  return SurrogateTree(train.layout_ptr(), std::move(classes), builder.Build(), params);
}

nlohmann::json FidelityReport::ToJson() const {
  nlohmann::json doc;
  doc["fidelity"] = fidelity;
  doc["test_size"] = test_size;
  doc["per_class"] = nlohmann::json::object();
  for (const auto& [label, agreement] : per_class) {
    doc["per_class"][label] = {{"agree", agreement.agree}, {"total", agreement.total}};
  }
  return doc;
}

FidelityReport Fidelity(const SurrogateTree& tree,
                        std::span<const OutcomeLabel> black_box_labels,
                        const FeatureMatrix& test) {
  if (black_box_labels.size() != test.rows()) {
    throw std::invalid_argument("one black-box label per test row is required");
  }
  if (test.rows() == 0) throw std::invalid_argument("fidelity needs a nonempty test set");
  FidelityReport report;
  report.test_size = test.rows();
  std::size_t agree = 0;
  for (std::size_t r = 0; r < test.rows(); ++r) {
    auto& entry = report.per_class[black_box_labels[r]];
    ++entry.total;
    if (tree.Predict(test.row(r)) == black_box_labels[r]) {
      ++entry.agree;
      ++agree;
    }
  }
  report.fidelity = static_cast<double>(agree) / static_cast<double>(test.rows());
  return report;
}

double ImportanceVector::Get(std::string_view attribute) const {
  for (std::size_t i = 0; i < attributes.size(); ++i) {
    if (attributes[i] == attribute) return values[i];
  }
  return 0.0;
}

std::vector<std::pair<std::string, double>> ImportanceVector::Top(std::size_t k) const {
  std::vector<std::pair<std::string, double>> ranked;
  for (std::size_t i = 0; i < attributes.size(); ++i) {
    if (values[i] > 0.0) ranked.emplace_back(attributes[i], values[i]);
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  if (ranked.size() > k) ranked.resize(k);
  return ranked;
}

nlohmann::json ImportanceVector::ToJson() const {
  nlohmann::json doc = nlohmann::json::object();
  for (std::size_t i = 0; i < attributes.size(); ++i) doc[attributes[i]] = values[i];
  return doc;
}

ImportanceVector Importance(const SurrogateTree& tree) {
  ImportanceVector out;
  out.attributes = tree.layout().SourceAttributes();
  out.values.assign(out.attributes.size(), 0.0);
  const double total = tree.node(0).samples();
  if (total <= 0) return out;
  for (const auto& node : tree.nodes()) {
    if (node.is_leaf()) continue;
    const std::string& attribute =
        tree.layout().column(static_cast<std::size_t>(node.column)).attribute;
    const auto it = std::find(out.attributes.begin(), out.attributes.end(), attribute);
    out.values[static_cast<std::size_t>(it - out.attributes.begin())] +=
        (node.samples() / total) * std::max(0.0, node.decrease);
  }
  const double sum = std::accumulate(out.values.begin(), out.values.end(), 0.0);
  if (sum > 0.0) {
    for (double& v : out.values) v /= sum;
  }
  return out;
}

}  // namespace procf
