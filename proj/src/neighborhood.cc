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

#include "procf/neighborhood.h"

#include <algorithm>
#include <numeric>
#include <set>

#include "procf/errors.h"
#include "procf/levenshtein.h"

namespace procf {
namespace {

// Strict weak order over gene vectors, used for deduplication.
struct GenesLess {
  bool operator()(const EncodedInstance* a, const EncodedInstance* b) const {
    if (auto c = a->control_flow <=> b->control_flow; c != 0) return c < 0;
    const std::size_t n = std::min(a->attr_genes.size(), b->attr_genes.size());
    for (std::size_t i = 0; i < n; ++i) {
      const AttrGene& x = a->attr_genes[i];
      const AttrGene& y = b->attr_genes[i];
      if (x.name != y.name) return x.name < y.name;
      if (x.value != y.value) return x.value < y.value;
    }
    return a->attr_genes.size() < b->attr_genes.size();
  }
};

}  // namespace

void GaConfig::Validate() const {
  if (population < 4) throw InputError("population must be at least 4");
  if (generations < 1) throw InputError("generations must be at least 1");
  if (!(crossover_probability >= 0.0 && crossover_probability <= 1.0)) {
    throw InputError("crossover probability must lie in [0,1]");
  }
  if (!(mutation_probability >= 0.0 && mutation_probability <= 1.0)) {
    throw InputError("mutation probability must lie in [0,1]");
  }
  if (similarity_threshold < 0) {
    throw InputError("similarity threshold must be nonnegative");
  }
}

nlohmann::json GaConfig::ToJson() const {
  return {{"population", population},
          {"generations", generations},
          {"p_c", crossover_probability},
          {"p_m", mutation_probability},
          {"similarity_threshold", similarity_threshold},
          {"seed", seed}};
}

bool InitialPool::Contains(const ControlFlowGene& gene) const {
  return std::find(cf_pool.begin(), cf_pool.end(), gene) != cf_pool.end();
}

InitialPool BuildInitialPool(const EncodedInstance& x, const EventLog& log,
                             std::size_t k, const GaConfig& config,
                             std::string_view exclude_case) {
  const LogSchema& schema = log.schema();
  InitialPool pool;
  pool.instances.push_back(x);
  const auto threshold = static_cast<std::size_t>(config.similarity_threshold);
  const auto x_sequence = x.control_flow.sequence();

  std::vector<ActivityId> sequence;
  for (const auto& trace : log.traces()) {
    if (trace.size() <= k || trace.case_id == exclude_case) continue;
    sequence.clear();
    for (std::size_t i = 0; i < k; ++i) {
      sequence.push_back(
          static_cast<ActivityId>(*schema.ActivityIndex(trace.events[i].activity)));
    }
    if (Levenshtein(std::span<const ActivityId>(sequence), x_sequence) > threshold) {
      continue;
    }
    pool.instances.push_back(Encode(TakePrefix(trace, k), schema));
  }

  std::set<ControlFlowGene> seen;
  for (const auto& instance : pool.instances) {
    if (seen.insert(instance.control_flow).second) {
      pool.cf_pool.push_back(instance.control_flow);
    }
  }

  pool.attr_empirical.resize(schema.attributes.size());
  for (std::size_t a = 0; a < schema.attributes.size(); ++a) {
    const AttributeSpec& spec = schema.attributes[a];
    auto& values = pool.attr_empirical[a];
    for (const auto& trace : log.traces()) {
      if (spec.scope == AttributeScope::kCase) {
        auto it = trace.case_attributes.find(spec.name);
        if (it != trace.case_attributes.end()) values.push_back(it->second);
      } else {
        for (const auto& event : trace.events) {
          auto it = event.attributes.find(spec.name);
          if (it != event.attributes.end()) values.push_back(it->second);
        }
      }
    }
  }
  return pool;
}

double Fitness(const EncodedInstance& x, const EncodedInstance& z,
               const OutcomeLabel& target, const OutcomeLabel& label_of_z,
               std::span<const AttributeStats> stats) {
  const double hit = label_of_z == target ? 1.0 : 0.0;
  const double same = x == z ? 1.0 : 0.0;
  return hit + (1.0 - Distance(x, z, stats)) - same;
}

std::pair<EncodedInstance, EncodedInstance> CrossoverSegment(
    const EncodedInstance& a, const EncodedInstance& b, std::size_t begin,
    std::size_t end) {
  EncodedInstance left = a;
  EncodedInstance right = b;
  end = std::min(end, a.gene_count());
  for (std::size_t gene = begin; gene < end; ++gene) {
    if (gene == 0) {
      std::swap(left.control_flow, right.control_flow);
    } else {
      std::swap(left.attr_genes[gene - 1], right.attr_genes[gene - 1]);
    }
  }
  if (begin < end) {
    left.provenance = Provenance::kSynthetic;
    right.provenance = Provenance::kSynthetic;
  }
  return {std::move(left), std::move(right)};
}

std::pair<EncodedInstance, EncodedInstance> Crossover(const EncodedInstance& a,
                                                      const EncodedInstance& b,
                                                      RandomEngine& rng) {
  const std::size_t boundaries = a.gene_count() + 1;
  std::size_t first = UniformIndex(rng, boundaries);
  std::size_t second = UniformIndex(rng, boundaries);
  if (first > second) std::swap(first, second);
  return CrossoverSegment(a, b, first, second);
}

EncodedInstance Mutate(const EncodedInstance& instance, const InitialPool& pool,
                       double p_m, RandomEngine& rng) {
  EncodedInstance out = instance;
  bool changed = false;
  if (!pool.cf_pool.empty() && Bernoulli(rng, p_m)) {
    out.control_flow = pool.cf_pool[UniformIndex(rng, pool.cf_pool.size())];
    changed = true;
  }
  for (std::size_t i = 0; i < out.attr_genes.size(); ++i) {
    if (!Bernoulli(rng, p_m)) continue;
    if (i >= pool.attr_empirical.size() || pool.attr_empirical[i].empty()) continue;
    const auto& values = pool.attr_empirical[i];
    out.attr_genes[i].value = values[UniformIndex(rng, values.size())];
    out.attr_genes[i].absent = false;
    changed = true;
  }
  if (changed) out.provenance = Provenance::kSynthetic;
  return out;
}

std::vector<std::size_t> SelectFittest(std::span<const double> fitness,
                                       std::size_t count) {
  std::vector<std::size_t> order(fitness.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return fitness[a] > fitness[b];
  });
  order.resize(std::min(count, order.size()));
  return order;
}

std::size_t Neighborhood::ClassSize(const OutcomeLabel& label) const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), label));
}

Neighborhood GenerateNeighborhood(const EncodedInstance& x, const InitialPool& pool,
                                  Predictor& black_box,
                                  std::shared_ptr<const FeatureLayout> layout,
                                  const GaConfig& config,
                                  const GenerationObserver& observer) {
  config.Validate();
  if (pool.instances.empty()) throw std::invalid_argument("empty initial pool");
  const auto n = static_cast<std::size_t>(config.population);
  const std::size_t parents = (n + 1) / 2;
  const auto stats = layout->stats();

  Neighborhood out;
  out.classes = black_box.outcome_set();

  auto label_all = [&](const std::vector<EncodedInstance>& population) {
    auto labels = black_box.PredictBatch(Flatten(population, layout));
    if (labels.size() != population.size()) {
      throw PredictorError("black box returned " + std::to_string(labels.size()) +
                           " labels for " + std::to_string(population.size()) +
                           " rows");
    }
    return labels;
  };

  std::vector<EncodedInstance> generated;
  std::vector<OutcomeLabel> generated_labels;
  for (std::size_t c = 0; c < out.classes.size(); ++c) {
    const OutcomeLabel& target = out.classes[c];
    RandomEngine rng = SubStream(config.seed, "ga", c);

    std::vector<EncodedInstance> population;
    population.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      population.push_back(pool.instances[UniformIndex(rng, pool.instances.size())]);
    }

    for (int generation = 0; generation < config.generations; ++generation) {
      const auto labels = label_all(population);
      std::vector<double> fitness(n);
      for (std::size_t i = 0; i < n; ++i) {
        fitness[i] = Fitness(x, population[i], target, labels[i], stats);
      }
      const auto selected = SelectFittest(fitness, parents);
      if (observer) {
        observer(GenerationSnapshot{target, generation, population, labels, fitness,
                                    selected});
      }

      std::vector<std::size_t> order(selected.begin(), selected.end());
      std::shuffle(order.begin(), order.end(), rng);
      std::size_t cursor = 0;
      std::vector<EncodedInstance> offspring;
      offspring.reserve(n + 1);
      while (offspring.size() < n) {
        if (cursor + 1 >= order.size()) {
          std::shuffle(order.begin(), order.end(), rng);
          cursor = 0;
        }
        const EncodedInstance& a = population[order[cursor]];
        const EncodedInstance& b = population[order[cursor + 1]];
        cursor += 2;
        if (Bernoulli(rng, config.crossover_probability)) {
          auto [first, second] = Crossover(a, b, rng);
          offspring.push_back(std::move(first));
          if (offspring.size() < n) offspring.push_back(std::move(second));
        } else {
          offspring.push_back(a);
          if (offspring.size() < n) offspring.push_back(b);
        }
      }
      for (auto& instance : offspring) {
        instance = Mutate(instance, pool, config.mutation_probability, rng);
      }
      population = std::move(offspring);
    }

    const auto labels = label_all(population);
    if (observer) {
      observer(GenerationSnapshot{target, config.generations, population, labels,
                                  {}, {}});
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (std::find(out.classes.begin(), out.classes.end(), labels[i]) ==
          out.classes.end()) {
        throw PredictorError("black box returned label '" + labels[i] +
                             "' outside its outcome set");
      }
      generated.push_back(std::move(population[i]));
      generated_labels.push_back(labels[i]);
    }
  }

  // Bin by actual label, dropping exact duplicates.
  std::set<const EncodedInstance*, GenesLess> seen;
  std::vector<std::vector<std::size_t>> members(out.classes.size());
  for (std::size_t c = 0; c < out.classes.size(); ++c) {
    for (std::size_t i = 0; i < generated.size(); ++i) {
      if (generated_labels[i] != out.classes[c]) continue;
      if (!seen.insert(&generated[i]).second) continue;
      members[c].push_back(out.instances.size());
      out.instances.push_back(generated[i]);
      out.labels.push_back(generated_labels[i]);
    }
    if (!members[c].empty()) out.reachable_classes.push_back(out.classes[c]);
  }

  RandomEngine split_rng = SubStream(config.seed, "split");
  std::vector<std::vector<std::size_t>> train_parts(members.size());
  for (std::size_t c = 0; c < members.size(); ++c) {
    auto shuffled = members[c];
    std::shuffle(shuffled.begin(), shuffled.end(), split_rng);
    const std::size_t n_test = shuffled.size() / 5;
    out.test.insert(out.test.end(), shuffled.begin(), shuffled.begin() + n_test);
    train_parts[c].assign(shuffled.begin() + n_test, shuffled.end());
  }
  if (out.test.empty() && out.instances.size() >= 3) {
    auto largest = std::max_element(
        train_parts.begin(), train_parts.end(),
        [](const auto& a, const auto& b) { return a.size() < b.size(); });
    out.test.push_back(largest->front());
    largest->erase(largest->begin());
  }
  for (const auto& part : train_parts) {
    out.train.insert(out.train.end(), part.begin(), part.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

}  // namespace procf
