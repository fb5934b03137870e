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

// End-to-end explanation of trace prefixes and batch evaluation.

#ifndef PROCF_PIPELINE_H_
#define PROCF_PIPELINE_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "procf/encoding.h"
#include "procf/event_log.h"
#include "procf/explanation.h"
#include "procf/neighborhood.h"
#include "procf/predictor.h"
#include "procf/surrogate_tree.h"

namespace procf {

struct ExplainOptions {
  // ga.seed is replaced by the per-prefix seed.
  GaConfig ga;
  TreeParams tree;
  std::size_t max_rules = 3;
  // Concrete instances sampled per counterfactual rule.
  std::size_t counterfactual_samples = 20;
  std::uint64_t seed = 0;
  // Copied into every explanation.
  nlohmann::json config;
};

// Seed of the GA and sampling streams for one prefix, so that a prefix gets
// the same explanation whether explained alone or in a batch.
std::uint64_t PrefixSeed(std::uint64_t seed, std::string_view case_id, std::size_t k);

struct ExplainResult {
  Explanation explanation;
  std::unique_ptr<SurrogateTree> tree;
};

// Throws InputError for an unknown case, a prefix length outside
// [1, trace length - 1] or a degenerate neighborhood, PredictorError when
// the black box fails.
ExplainResult ExplainPrefix(const EventLog& log,
                            std::shared_ptr<const FeatureLayout> layout,
                            Predictor& black_box, const std::string& case_id,
                            std::size_t prefix_length, const ExplainOptions& options);

using PredictorFactory = std::function<std::unique_ptr<Predictor>()>;

struct EvaluateOptions {
  ExplainOptions explain;
  std::vector<std::size_t> prefix_lengths;
  // Per length; 0 keeps every test prefix.
  std::size_t max_prefixes = 0;
  int jobs = 1;
  double test_fraction = 0.2;
};

struct PrefixResult {
  std::string case_id;
  std::size_t prefix_length = 0;
  // Empty on success.
  std::string error;
  Explanation explanation;
};

struct FidelityRow {
  std::size_t prefix_length = 0;
  std::size_t n_prefixes = 0;
  // NaN when n_prefixes == 0.
  double mean_fidelity = 0.0;
};

struct EvaluationResult {
  std::vector<std::string> test_cases;
  // Ordered by (prefix length, case id).
  std::vector<PrefixResult> prefixes;
  std::vector<FidelityRow> rows;
  // Mean over all successful prefixes, i.e. rows weighted by n_prefixes.
  FidelityRow total;
  double elapsed_seconds = 0.0;

  nlohmann::json ToJson() const;
};

// Seeded split of the log's cases; returns the held-out cases, sorted.
std::vector<std::string> TestCases(const EventLog& log, std::uint64_t seed,
                                   double test_fraction);

// Explains every held-out prefix of each requested length. Each worker owns
// a predictor made by `factory`. Prefixes that cannot be explained are
// reported with an error; a PredictorError aborts the run.
EvaluationResult EvaluatePrefixes(const EventLog& log,
                                  std::shared_ptr<const FeatureLayout> layout,
                                  const PredictorFactory& factory,
                                  const EvaluateOptions& options);

}  // namespace procf

#endif  // PROCF_PIPELINE_H_
