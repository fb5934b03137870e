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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <random>
#include <tuple>

#include "procf/errors.h"

namespace procf {
namespace {

std::string FormatNumber(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.6g", value);
  if (std::string_view(buffer).find('e') != std::string_view::npos &&
      std::fabs(value) < 1e15) {
    std::snprintf(buffer, sizeof buffer, "%.0f", value);
  }
  return buffer;
}

std::string FormatBound(double raw, ColumnKind kind) {
  // Counts are integers, so `count <= 2.5` reads as `count <= 2`.
  return FormatNumber(kind == ColumnKind::kFrequency ? std::floor(raw) : raw);
}

std::string_view KindName(ColumnKind kind) {
  switch (kind) {
    case ColumnKind::kFrequency: return "frequency";
    case ColumnKind::kNumeric: return "numeric";
    case ColumnKind::kOneHot: return "categorical";
  }
  return "numeric";
}

nlohmann::json AttrValueToJson(const AttrValue& value) {
  if (const double* d = std::get_if<double>(&value)) return *d;
  return std::get<std::string>(value);
}

// Parent links and the DFS (left-first) rank of every node.
struct TreeIndex {
  std::vector<int> parent;
  std::vector<std::size_t> dfs_rank;

  explicit TreeIndex(const SurrogateTree& tree) {
    const auto nodes = tree.nodes();
    parent.assign(nodes.size(), -1);
    dfs_rank.assign(nodes.size(), 0);
    std::vector<std::size_t> stack{0};
    std::size_t rank = 0;
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      dfs_rank[i] = rank++;
      if (nodes[i].is_leaf()) continue;
      parent[static_cast<std::size_t>(nodes[i].left)] = static_cast<int>(i);
      parent[static_cast<std::size_t>(nodes[i].right)] = static_cast<int>(i);
      stack.push_back(static_cast<std::size_t>(nodes[i].right));
      stack.push_back(static_cast<std::size_t>(nodes[i].left));
    }
  }
};

std::vector<Condition> MergePath(const SurrogateTree& tree, const TreeIndex& index,
                                 std::size_t leaf) {
  std::vector<std::pair<std::size_t, bool>> steps;  // (split node, went left)
  for (std::size_t child = leaf; index.parent[child] >= 0;) {
    const auto p = static_cast<std::size_t>(index.parent[child]);
    steps.emplace_back(p, tree.node(p).left == static_cast<int>(child));
    child = p;
  }
  std::reverse(steps.begin(), steps.end());

  const FeatureLayout& layout = tree.layout();
  std::vector<Condition> merged;
  auto find_or_add = [&](const std::string& key, ColumnKind kind) -> Condition& {
    for (auto& c : merged) {
      if (c.attribute == key && (c.kind == ColumnKind::kOneHot) == (kind == ColumnKind::kOneHot)) {
        return c;
      }
    }
    Condition& c = merged.emplace_back();
    c.attribute = key;
    c.kind = kind;
    return c;
  };

  for (const auto& [node_index, went_left] : steps) {
    const TreeNode& node = tree.node(node_index);
    const auto col = static_cast<std::size_t>(node.column);
    const Column& column = layout.column(col);
    if (column.kind == ColumnKind::kOneHot) {
      const bool has_level = (node.op == SplitOp::kEquals) == went_left;
      Condition& c = find_or_add(column.attribute, ColumnKind::kOneHot);
      if (has_level) {
        c.op = ConditionOp::kEquals;
        c.levels = {column.level};
        c.columns = {col};
      } else if (c.op != ConditionOp::kEquals || c.columns.empty()) {
        c.op = ConditionOp::kNotEquals;
        if (std::find(c.columns.begin(), c.columns.end(), col) == c.columns.end()) {
          c.columns.push_back(col);
          c.levels.push_back(column.level);
        }
      }
      continue;
    }
    Condition& c = find_or_add(column.name, column.kind);
    c.columns = {col};
    const double cut = node.op == SplitOp::kEquals ? 0.5 : node.threshold;
    if (went_left == (node.op == SplitOp::kLessEqual)) {
      c.upper = std::min(c.upper, cut);
    } else {
      c.lower = std::max(c.lower, cut);
    }
  }

  for (auto& c : merged) {
    if (c.kind == ColumnKind::kOneHot) {
      if (c.op == ConditionOp::kNotEquals) {
        // Level order follows column order.
        std::vector<std::pair<std::size_t, std::string>> pairs;
        for (std::size_t i = 0; i < c.columns.size(); ++i) {
          pairs.emplace_back(c.columns[i], c.levels[i]);
        }
        std::sort(pairs.begin(), pairs.end());
        c.columns.clear();
        c.levels.clear();
        for (auto& [col, level] : pairs) {
          c.columns.push_back(col);
          c.levels.push_back(std::move(level));
        }
      }
      continue;
    }
    const Column& column = layout.column(c.columns[0]);
    if (std::isinf(c.lower)) {
      c.op = ConditionOp::kLessEqual;
    } else if (std::isinf(c.upper)) {
      c.op = ConditionOp::kGreater;
    } else {
      c.op = ConditionOp::kBetween;
    }
    c.raw_lower = std::isinf(c.lower) ? c.lower : column.ToRaw(c.lower);
    c.raw_upper = std::isinf(c.upper) ? c.upper : column.ToRaw(c.upper);
  }
  return merged;
}

Rule MakeRule(const SurrogateTree& tree, const TreeIndex& index, std::size_t leaf,
              std::span<const double> x_row) {
  Rule rule;
  rule.conditions = MergePath(tree, index, leaf);
  rule.leaf = leaf;
  rule.outcome = tree.ClassName(tree.node(leaf).label);
  rule.support = tree.node(leaf).samples();
  for (std::size_t i = 0; i < rule.conditions.size(); ++i) {
    if (!rule.conditions[i].Holds(x_row)) rule.violated.push_back(i);
  }
  return rule;
}

// Value range a numeric condition allows inside the log range [0, 1].
struct Interval {
  double lo;
  double hi;
  bool lo_closed;
};

std::optional<Interval> ClipToLogRange(const Condition& c) {
  const double hi = std::min(c.upper, 1.0);
  if (c.lower < 0.0) {
    if (hi < 0.0) return std::nullopt;
    return Interval{0.0, hi, true};
  }
  if (!(c.lower < hi)) return std::nullopt;
  return Interval{c.lower, hi, false};
}

double Draw(const Interval& interval, RandomEngine& rng) {
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  // [lo, hi] when closed below, (lo, hi] otherwise.
  return interval.lo_closed ? interval.lo + u * (interval.hi - interval.lo)
                            : interval.hi - u * (interval.hi - interval.lo);
}

bool GeneSatisfies(const ControlFlowGene& gene, const FeatureLayout& layout,
                   std::span<const Condition* const> conditions) {
  for (const Condition* c : conditions) {
    const Column& column = layout.column(c->columns[0]);
    const auto freq = gene.frequencies();
    const double count =
        column.source < freq.size() ? static_cast<double>(freq[column.source]) : 0.0;
    if (!(c->lower < count && count <= c->upper)) return false;
  }
  return true;
}

void SetDiagnostic(std::string* diagnostic, std::string message) {
  if (diagnostic) *diagnostic = std::move(message);
}

}  // namespace

std::string_view ConditionOpSymbol(ConditionOp op) {
  switch (op) {
    case ConditionOp::kLessEqual: return "<=";
    case ConditionOp::kGreater: return ">";
    case ConditionOp::kBetween: return "between";
    case ConditionOp::kEquals: return "=";
    case ConditionOp::kNotEquals: return "!=";
  }
  return "?";
}

bool Condition::Holds(std::span<const double> row) const {
  switch (op) {
    case ConditionOp::kEquals:
      return row[columns[0]] > 0.5;
    case ConditionOp::kNotEquals:
      return std::all_of(columns.begin(), columns.end(),
                         [&](std::size_t c) { return row[c] <= 0.5; });
    default: {
      const double v = row[columns[0]];
      return lower < v && v <= upper;
    }
  }
}

std::string Condition::ToString() const {
  switch (op) {
    case ConditionOp::kLessEqual:
      return attribute + " ≤ " + FormatBound(raw_upper, kind);
    case ConditionOp::kGreater:
      return attribute + " > " + FormatBound(raw_lower, kind);
    case ConditionOp::kBetween:
      return FormatBound(raw_lower, kind) + " < " + attribute + " ≤ " +
             FormatBound(raw_upper, kind);
    case ConditionOp::kEquals:
      return attribute + " = " + levels[0];
    case ConditionOp::kNotEquals: {
      if (levels.size() == 1) return attribute + " ≠ " + levels[0];
      std::string text = attribute + " ∉ {";
      for (std::size_t i = 0; i < levels.size(); ++i) {
        if (i > 0) text += ", ";
        text += levels[i];
      }
      return text + "}";
    }
  }
  return attribute;
}

nlohmann::json Condition::ToJson() const {
  nlohmann::json doc;
  doc["attribute"] = attribute;
  doc["kind"] = KindName(kind);
  doc["op"] = ConditionOpSymbol(op);
  if (kind == ColumnKind::kOneHot) {
    doc["levels"] = levels;
  } else {
    if (!std::isinf(raw_lower)) doc["lower"] = raw_lower;
    if (!std::isinf(raw_upper)) doc["upper"] = raw_upper;
  }
  doc["text"] = ToString();
  return doc;
}

bool Rule::Holds(std::span<const double> row) const {
  return std::all_of(conditions.begin(), conditions.end(),
                     [&](const Condition& c) { return c.Holds(row); });
}

std::string Rule::ToString() const {
  std::string text = "{";
  for (std::size_t i = 0; i < conditions.size(); ++i) {
    if (i > 0) text += ", ";
    text += conditions[i].ToString();
  }
  return text + "} → " + outcome;
}

nlohmann::json Rule::ToJson() const {
  nlohmann::json doc;
  doc["outcome"] = outcome;
  doc["support"] = support;
  doc["leaf"] = leaf;
  doc["violated_count"] = violated.size();
  auto& conds = doc["conditions"] = nlohmann::json::array();
  for (std::size_t i = 0; i < conditions.size(); ++i) {
    nlohmann::json c = conditions[i].ToJson();
    c["violated"] = std::find(violated.begin(), violated.end(), i) != violated.end();
    conds.push_back(std::move(c));
  }
  doc["text"] = ToString();
  return doc;
}

std::vector<Condition> PathConditions(const SurrogateTree& tree, std::size_t leaf) {
  return MergePath(tree, TreeIndex(tree), leaf);
}

Rule ExtractFactual(const SurrogateTree& tree, std::span<const double> x_row) {
  Rule rule = MakeRule(tree, TreeIndex(tree), tree.LeafFor(x_row), x_row);
  rule.violated.clear();
  return rule;
}

std::vector<Rule> ExtractCounterfactuals(const SurrogateTree& tree,
                                         std::span<const double> x_row,
                                         std::size_t max_rules) {
  const TreeIndex index(tree);
  const int factual_label = tree.node(tree.LeafFor(x_row)).label;
  std::vector<Rule> rules;
  for (std::size_t i = 0; i < tree.nodes().size(); ++i) {
    const TreeNode& node = tree.node(i);
    if (node.is_leaf() && node.label != factual_label) {
      rules.push_back(MakeRule(tree, index, i, x_row));
    }
  }
  std::sort(rules.begin(), rules.end(), [&](const Rule& a, const Rule& b) {
    return std::make_tuple(a.violated.size(), -a.support, a.conditions.size(),
                           index.dfs_rank[a.leaf]) <
           std::make_tuple(b.violated.size(), -b.support, b.conditions.size(),
                           index.dfs_rank[b.leaf]);
  });
  if (rules.size() > max_rules) rules.resize(max_rules);
  return rules;
}

std::vector<EncodedInstance> SampleCounterfactualInstances(
    const Rule& rule, const EncodedInstance& x, const InitialPool& pool,
    const FeatureLayout& layout, std::size_t n, RandomEngine& rng,
    std::string* diagnostic) {
  const std::vector<double> x_row = FlattenOne(x, layout);

  std::vector<const Condition*> frequency;
  bool control_flow_ok = true;
  struct NumericEdit {
    std::size_t attr;
    std::size_t column;
    Interval interval;
  };
  std::vector<NumericEdit> numeric;
  std::vector<std::pair<std::size_t, std::vector<std::string>>> categorical;
  for (const Condition& c : rule.conditions) {
    const bool holds = c.Holds(x_row);
    if (c.kind == ColumnKind::kFrequency) {
      frequency.push_back(&c);
      control_flow_ok = control_flow_ok && holds;
      continue;
    }
    if (holds) continue;
    const Column& column = layout.column(c.columns[0]);
    if (c.kind == ColumnKind::kNumeric) {
      auto interval = ClipToLogRange(c);
      if (!interval) {
        SetDiagnostic(diagnostic, "condition " + c.ToString() + " lies outside the log range");
        return {};
      }
      numeric.push_back({column.source, c.columns[0], *interval});
      continue;
    }
    std::vector<std::string> allowed;
    if (c.op == ConditionOp::kEquals) {
      allowed = c.levels;
    } else {
      for (const auto& level : layout.stats()[column.source].levels) {
        if (std::find(c.levels.begin(), c.levels.end(), level) == c.levels.end()) {
          allowed.push_back(level);
        }
      }
    }
    if (allowed.empty()) {
      SetDiagnostic(diagnostic, "no level of " + c.attribute + " satisfies " + c.ToString());
      return {};
    }
    categorical.emplace_back(column.source, std::move(allowed));
  }

  std::vector<const ControlFlowGene*> flows;
  if (!control_flow_ok) {
    for (const auto& gene : pool.cf_pool) {
      if (GeneSatisfies(gene, layout, frequency)) flows.push_back(&gene);
    }
    if (flows.empty()) {
      SetDiagnostic(diagnostic,
                    "no control flow in the initial pool satisfies the rule's count "
                    "conditions");
      return {};
    }
  }

  std::vector<EncodedInstance> out;
  const std::size_t max_attempts = 10 * n + 10;
  for (std::size_t attempt = 0; attempt < max_attempts && out.size() < n; ++attempt) {
    EncodedInstance z = x;
    z.provenance = Provenance::kSynthetic;
    if (!flows.empty()) z.control_flow = *flows[UniformIndex(rng, flows.size())];
    for (const auto& edit : numeric) {
      auto& gene = z.attr_genes[edit.attr];
      gene.value = layout.column(edit.column).ToRaw(Draw(edit.interval, rng));
      gene.absent = false;
    }
    for (const auto& [attr, allowed] : categorical) {
      z.attr_genes[attr].value = allowed[UniformIndex(rng, allowed.size())];
      z.attr_genes[attr].absent = false;
    }
    if (rule.Holds(FlattenOne(z, layout))) out.push_back(std::move(z));
  }
  if (out.empty()) {
    SetDiagnostic(diagnostic, "no sampled instance satisfied " + rule.ToString());
  }
  return out;
}

nlohmann::json CounterfactualCheck::ToJson() const {
  nlohmann::json doc = {{"samples", samples},
                        {"surrogate_agreement", surrogate_agreement},
                        {"black_box_agreement", black_box_agreement}};
  if (!diagnostic.empty()) doc["diagnostic"] = diagnostic;
  return doc;
}

nlohmann::json NeighborhoodSummary::ToJson() const {
  nlohmann::json sizes = nlohmann::json::object();
  for (const auto& [label, size] : class_sizes) sizes[label] = size;
  return {{"class_sizes", sizes},
          {"reachable_classes", reachable_classes},
          {"train_size", train_size},
          {"test_size", test_size},
          {"pool_size", pool_size},
          {"cf_pool_size", cf_pool_size}};
}

nlohmann::json Explanation::ToJson() const {
  nlohmann::json doc;
  doc["case_id"] = case_id;
  doc["prefix_length"] = prefix_length;
  doc["prefix"] = prefix_activities;
  nlohmann::json attrs = nlohmann::json::object();
  for (const auto& [name, value] : attributes) attrs[name] = AttrValueToJson(value);
  doc["attributes"] = attrs;
  doc["prediction"] = prediction;
  doc["factual"] = factual.ToJson();
  auto& cfs = doc["counterfactuals"] = nlohmann::json::array();
  for (std::size_t i = 0; i < counterfactuals.size(); ++i) {
    nlohmann::json rule = counterfactuals[i].ToJson();
    if (i < checks.size()) rule["check"] = checks[i].ToJson();
    cfs.push_back(std::move(rule));
  }
  doc["fidelity"] = fidelity.ToJson();
  doc["importance"] = importance.ToJson();
  doc["neighborhood"] = neighborhood.ToJson();
  doc["tree"] = {{"leaves", tree_leaves}, {"depth", tree_depth}};
  doc["config"] = config;
  doc["seed"] = seed;
  return doc;
}

std::map<std::size_t, ImportanceRanking> AggregateImportance(
    std::span<const Explanation> explanations, std::size_t top_k) {
  if (explanations.empty()) throw InputError("no explanations to aggregate");
  if (top_k == 0) throw InputError("top_k must be positive");
  std::map<std::size_t, std::map<std::string, std::size_t>> counts;
  std::map<std::size_t, std::size_t> instances;
  for (const Explanation& e : explanations) {
    ++instances[e.prefix_length];
    auto& per_length = counts[e.prefix_length];
    for (const auto& [attribute, value] : e.importance.Top(top_k)) {
      ++per_length[attribute];
    }
  }
  std::map<std::size_t, ImportanceRanking> out;
  for (const auto& [length, per_length] : counts) {
    ImportanceRanking ranking;
    const auto n = static_cast<double>(instances[length]);
    for (const auto& [attribute, count] : per_length) {
      ranking.emplace_back(attribute, static_cast<double>(count) / n);
    }
    std::stable_sort(ranking.begin(), ranking.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    if (ranking.size() > top_k) ranking.resize(top_k);
    out[length] = std::move(ranking);
  }
  return out;
}

}  // namespace procf
