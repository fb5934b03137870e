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

// Factual and counterfactual rules read off a surrogate tree.
//
// A rule is the conjunction of split conditions on one root-to-leaf path.
// Conditions on the same numeric or frequency column are merged into one
// interval; conditions on the one-hot columns of a categorical attribute are
// merged into one `= level` or `!= {levels}` condition. Violations are
// counted on merged conditions.

#ifndef PROCF_EXPLANATION_H_
#define PROCF_EXPLANATION_H_

#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "procf/encoding.h"
#include "procf/event_log.h"
#include "procf/neighborhood.h"
#include "procf/rng.h"
#include "procf/surrogate_tree.h"

namespace procf {

enum class ConditionOp { kLessEqual, kGreater, kBetween, kEquals, kNotEquals };

std::string_view ConditionOpSymbol(ConditionOp op);

struct Condition {
  static constexpr double kInf = std::numeric_limits<double>::infinity();

  // Column name for numeric and frequency conditions, attribute name for
  // categorical ones.
  std::string attribute;
  ColumnKind kind = ColumnKind::kNumeric;
  ConditionOp op = ConditionOp::kLessEqual;

  // Numeric and frequency: lower < value <= upper in column space; the
  // single column is columns[0]. raw_* are the same bounds in log units.
  double lower = -kInf;
  double upper = kInf;
  double raw_lower = -kInf;
  double raw_upper = kInf;

  // Categorical: the required level (kEquals) or the excluded levels
  // (kNotEquals), with their one-hot columns.
  std::vector<std::string> levels;
  std::vector<std::size_t> columns;

  bool Holds(std::span<const double> row) const;
  // "CreditScore ≤ 323", "count(W_Call) > 1", "LoanGoal ≠ Car".
  std::string ToString() const;
  nlohmann::json ToJson() const;
};

struct Rule {
  std::vector<Condition> conditions;
  OutcomeLabel outcome;
  // Training rows that reached the leaf.
  int support = 0;
  std::size_t leaf = 0;
  // Indices into `conditions` that the explained instance does not satisfy.
  std::vector<std::size_t> violated;

  bool Holds(std::span<const double> row) const;
  // "{c1, c2} → outcome"
  std::string ToString() const;
  nlohmann::json ToJson() const;
};

// Merged conditions of the path from the root to `leaf`.
std::vector<Condition> PathConditions(const SurrogateTree& tree, std::size_t leaf);

// Conditions of the path x follows; violated is empty.
Rule ExtractFactual(const SurrogateTree& tree, std::span<const double> x_row);

// Rules of the leaves whose class differs from the factual one, ordered by
// violation count, then larger support, then fewer conditions, then leaf
// order. At most `max_rules`; empty when no such leaf exists.
std::vector<Rule> ExtractCounterfactuals(const SurrogateTree& tree,
                                         std::span<const double> x_row,
                                         std::size_t max_rules);

// Up to n copies of x edited so that every rule condition holds, altering
// only genes whose conditions x violates. Control flows are drawn from
// pool.cf_pool, numeric values uniformly inside the condition interval
// clipped to the log range, categorical values from the allowed levels.
// Returns an empty list and fills `diagnostic` when the rule cannot be met.
std::vector<EncodedInstance> SampleCounterfactualInstances(
    const Rule& rule, const EncodedInstance& x, const InitialPool& pool,
    const FeatureLayout& layout, std::size_t n, RandomEngine& rng,
    std::string* diagnostic = nullptr);

struct CounterfactualCheck {
  std::size_t samples = 0;
  // Fraction of samples the surrogate assigns to the rule's outcome.
  double surrogate_agreement = 0.0;
  // Fraction of samples the black box assigns to the rule's outcome.
  double black_box_agreement = 0.0;
  std::string diagnostic;

  nlohmann::json ToJson() const;
};

struct NeighborhoodSummary {
  std::map<OutcomeLabel, std::size_t> class_sizes;
  std::vector<OutcomeLabel> reachable_classes;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  std::size_t pool_size = 0;
  std::size_t cf_pool_size = 0;

  nlohmann::json ToJson() const;
};

struct Explanation {
  std::string case_id;
  std::size_t prefix_length = 0;
  std::vector<std::string> prefix_activities;
  std::map<std::string, AttrValue> attributes;
  // Black-box label of x.
  OutcomeLabel prediction;
  Rule factual;
  std::vector<Rule> counterfactuals;
  // Aligned with counterfactuals.
  std::vector<CounterfactualCheck> checks;
  FidelityReport fidelity;
  ImportanceVector importance;
  NeighborhoodSummary neighborhood;
  std::size_t tree_leaves = 0;
  std::size_t tree_depth = 0;
  nlohmann::json config;
  std::uint64_t seed = 0;

  nlohmann::json ToJson() const;
};

using ImportanceRanking = std::vector<std::pair<std::string, double>>;

// Per prefix length: the fraction of explanations whose top_k positive
// importance attributes include each attribute, highest first, at most top_k
// entries. Throws InputError on empty input or top_k == 0.
std::map<std::size_t, ImportanceRanking> AggregateImportance(
    std::span<const Explanation> explanations, std::size_t top_k);

}  // namespace procf

#endif  // PROCF_EXPLANATION_H_
