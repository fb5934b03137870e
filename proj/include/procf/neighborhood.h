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

// Synthetic neighborhood generation.
//
// The initial pool collects the real prefixes of the same length whose
// control flow is within `similarity_threshold` edits of the instance being
// explained. For every outcome class a genetic algorithm then evolves a
// population towards instances that are close to x, different from x, and
// labeled with that class by the black box. Control-flow genes are only ever
// copied from the pool, so every synthetic control flow was observed in the
// log.

#ifndef PROCF_NEIGHBORHOOD_H_
#define PROCF_NEIGHBORHOOD_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "procf/encoding.h"
#include "procf/event_log.h"
#include "procf/predictor.h"
#include "procf/rng.h"

namespace procf {

struct GaConfig {
  // Target population size per outcome class.
  int population = 600;
  int generations = 15;
  double crossover_probability = 0.2;
  double mutation_probability = 0.7;
  // Maximum Levenshtein distance for pool membership.
  int similarity_threshold = 2;
  std::uint64_t seed = 0;

  // Throws InputError unless probabilities are in [0,1], population >= 4,
  // generations >= 1 and the threshold is nonnegative.
  void Validate() const;
  nlohmann::json ToJson() const;
};

struct InitialPool {
  // x first, then the similar real prefixes.
  std::vector<EncodedInstance> instances;
  // Distinct control-flow genes of `instances`, x's first.
  std::vector<ControlFlowGene> cf_pool;
  // Per attribute (schema order): every value observed in the log.
  std::vector<std::vector<AttrValue>> attr_empirical;

  bool Contains(const ControlFlowGene& gene) const;
};

// Pool for x, the encoding of a length-k prefix. Traces of `exclude_case`
// (normally x's own case) are skipped.
InitialPool BuildInitialPool(const EncodedInstance& x, const EventLog& log,
                             std::size_t k, const GaConfig& config,
                             std::string_view exclude_case = {});

// 1[label_of_z == target] + (1 - d(x,z)) - 1[x == z], in [0, 2].
double Fitness(const EncodedInstance& x, const EncodedInstance& z,
               const OutcomeLabel& target, const OutcomeLabel& label_of_z,
               std::span<const AttributeStats> stats);

// Swaps genes [begin, end) of the gene list [control_flow, attr_1, ...].
std::pair<EncodedInstance, EncodedInstance> CrossoverSegment(
    const EncodedInstance& a, const EncodedInstance& b, std::size_t begin,
    std::size_t end);
// Two-point crossover with cut points drawn uniformly over gene boundaries.
std::pair<EncodedInstance, EncodedInstance> Crossover(const EncodedInstance& a,
                                                      const EncodedInstance& b,
                                                      RandomEngine& rng);

// Replaces each gene independently with probability p_m: the control flow by
// a uniform draw from the pool, attributes by their empirical distribution.
EncodedInstance Mutate(const EncodedInstance& instance, const InitialPool& pool,
                       double p_m, RandomEngine& rng);

// Indices of the `count` highest fitness values; ties keep the lower index.
std::vector<std::size_t> SelectFittest(std::span<const double> fitness,
                                       std::size_t count);

// Per-generation view handed to an observer. `fitness` and `selected` are
// empty for the final, labeled population.
struct GenerationSnapshot {
  const OutcomeLabel& target;
  int generation;
  std::span<const EncodedInstance> population;
  std::span<const OutcomeLabel> labels;
  std::span<const double> fitness;
  std::span<const std::size_t> selected;
};
using GenerationObserver = std::function<void(const GenerationSnapshot&)>;

struct Neighborhood {
  // The outcome set I, in predictor order.
  std::vector<OutcomeLabel> classes;
  // Z, grouped by label in `classes` order; labels[i] == b(instances[i]).
  std::vector<EncodedInstance> instances;
  std::vector<OutcomeLabel> labels;
  std::vector<OutcomeLabel> reachable_classes;
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;

  std::size_t ClassSize(const OutcomeLabel& label) const;
};

// Runs one GA per class of b.outcome_set(), bins the final populations by
// their actual black-box label, removes duplicates and splits 80/20 per class.
Neighborhood GenerateNeighborhood(const EncodedInstance& x, const InitialPool& pool,
                                  Predictor& black_box,
                                  std::shared_ptr<const FeatureLayout> layout,
                                  const GaConfig& config,
                                  const GenerationObserver& observer = {});

}  // namespace procf

#endif  // PROCF_NEIGHBORHOOD_H_
