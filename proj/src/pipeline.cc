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

#include "procf/pipeline.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include <spdlog/spdlog.h>

#include "procf/errors.h"
#include "procf/rng.h"

namespace procf {

std::uint64_t PrefixSeed(std::uint64_t seed, std::string_view case_id, std::size_t k) {
  RandomEngine rng = SubStream(seed, "prefix:" + std::string(case_id), k);
  return rng();
}

ExplainResult ExplainPrefix(const EventLog& log,
                            std::shared_ptr<const FeatureLayout> layout,
                            Predictor& black_box, const std::string& case_id,
                            std::size_t prefix_length, const ExplainOptions& options) {
  const Trace* trace = log.FindTrace(case_id);
  if (!trace) throw InputError("unknown case '" + case_id + "'");
  if (prefix_length < 1 || prefix_length >= trace->size()) {
    throw InputError("prefix length " + std::to_string(prefix_length) + " for case '" +
                     case_id + "' must lie in [1, " + std::to_string(trace->size() - 1) +
                     "] (the trace has " + std::to_string(trace->size()) + " events)");
  }
  const LogSchema& schema = log.schema();
  const Prefix prefix = TakePrefix(*trace, prefix_length);
  const EncodedInstance x = Encode(prefix, schema);

  GaConfig ga = options.ga;
  ga.seed = PrefixSeed(options.seed, case_id, prefix_length);
  ga.Validate();

  const InitialPool pool = BuildInitialPool(x, log, prefix_length, ga, case_id);
  FeatureMatrix x_matrix(layout);
  x_matrix.AppendRow(FlattenOne(x, *layout));
  const std::vector<OutcomeLabel> x_label = black_box.PredictBatch(x_matrix);
  if (x_label.size() != 1) throw PredictorError("black box did not label the instance");

  const Neighborhood z = GenerateNeighborhood(x, pool, black_box, layout, ga);
  if (z.train.size() < 2 || z.test.empty()) {
    throw InputError("neighborhood of case '" + case_id + "' at length " +
                     std::to_string(prefix_length) + " has only " +
                     std::to_string(z.instances.size()) + " distinct instances");
  }
  const FeatureMatrix all = Flatten(z.instances, layout);
  const FeatureMatrix train = all.Select(z.train);
  const FeatureMatrix test = all.Select(z.test);
  std::vector<OutcomeLabel> train_labels, test_labels;
  for (std::size_t i : z.train) train_labels.push_back(z.labels[i]);
  for (std::size_t i : z.test) test_labels.push_back(z.labels[i]);

  auto tree = std::make_unique<SurrogateTree>(FitTree(train, train_labels, options.tree));

  Explanation e;
  e.case_id = case_id;
  e.prefix_length = prefix_length;
  for (const auto& event : prefix.events) e.prefix_activities.push_back(event.activity);
  for (const auto& gene : x.attr_genes) {
    if (!gene.absent) e.attributes.emplace(gene.name, gene.value);
  }
  e.prediction = x_label[0];
  const std::span<const double> x_row = x_matrix.row(0);
  e.factual = ExtractFactual(*tree, x_row);
  e.counterfactuals = ExtractCounterfactuals(*tree, x_row, options.max_rules);
  for (std::size_t i = 0; i < e.counterfactuals.size(); ++i) {
    const Rule& rule = e.counterfactuals[i];
    RandomEngine rng = SubStream(ga.seed, "counterfactual", i);
    CounterfactualCheck check;
    const auto samples = SampleCounterfactualInstances(
        rule, x, pool, *layout, options.counterfactual_samples, rng, &check.diagnostic);
    check.samples = samples.size();
    if (!samples.empty()) {
      const FeatureMatrix rows = Flatten(samples, layout);
      const auto bb = black_box.PredictBatch(rows);
      if (bb.size() != rows.rows()) {
        throw PredictorError("black box returned the wrong number of labels");
      }
      std::size_t surrogate_hits = 0, black_box_hits = 0;
      for (std::size_t r = 0; r < rows.rows(); ++r) {
        surrogate_hits += tree->Predict(rows.row(r)) == rule.outcome ? 1 : 0;
        black_box_hits += bb[r] == rule.outcome ? 1 : 0;
      }
      const auto n = static_cast<double>(rows.rows());
      check.surrogate_agreement = static_cast<double>(surrogate_hits) / n;
      check.black_box_agreement = static_cast<double>(black_box_hits) / n;
    }
    e.checks.push_back(std::move(check));
  }
  e.fidelity = Fidelity(*tree, test_labels, test);
  e.importance = Importance(*tree);
  for (const auto& label : z.classes) e.neighborhood.class_sizes[label] = z.ClassSize(label);
  e.neighborhood.reachable_classes = z.reachable_classes;
  e.neighborhood.train_size = z.train.size();
  e.neighborhood.test_size = z.test.size();
  e.neighborhood.pool_size = pool.instances.size();
  e.neighborhood.cf_pool_size = pool.cf_pool.size();
  e.tree_leaves = tree->leaf_count();
  e.tree_depth = tree->depth();
  e.config = options.config;
  e.config["prefix_seed"] = ga.seed;
  e.seed = options.seed;
  return {std::move(e), std::move(tree)};
}

nlohmann::json EvaluationResult::ToJson() const {
  auto row_json = [](const FidelityRow& row) {
    nlohmann::json doc = {{"prefix_length", row.prefix_length},
                          {"n_prefixes", row.n_prefixes}};
    doc["mean_fidelity"] =
        row.n_prefixes > 0 ? nlohmann::json(row.mean_fidelity) : nlohmann::json();
    return doc;
  };
  nlohmann::json doc;
  doc["test_cases"] = test_cases.size();
  doc["rows"] = nlohmann::json::array();
  for (const auto& row : rows) doc["rows"].push_back(row_json(row));
  doc["weighted_average"] = row_json(total);
  doc["weighted_average"].erase("prefix_length");
  auto& items = doc["prefixes"] = nlohmann::json::array();
  for (const auto& p : prefixes) {
    nlohmann::json item = {{"case_id", p.case_id}, {"prefix_length", p.prefix_length}};
    if (p.error.empty()) {
      item["prediction"] = p.explanation.prediction;
      item["fidelity"] = p.explanation.fidelity.fidelity;
      item["test_size"] = p.explanation.fidelity.test_size;
      item["factual"] = p.explanation.factual.ToString();
      item["importance"] = p.explanation.importance.ToJson();
    } else {
      item["error"] = p.error;
    }
    items.push_back(std::move(item));
  }
  return doc;
}

std::vector<std::string> TestCases(const EventLog& log, std::uint64_t seed,
                                   double test_fraction) {
  if (!(test_fraction > 0.0 && test_fraction <= 1.0)) {
    throw InputError("test fraction must lie in (0, 1]");
  }
  std::vector<std::string> cases;
  for (const auto& trace : log.traces()) cases.push_back(trace.case_id);
  std::sort(cases.begin(), cases.end());
  RandomEngine rng = SubStream(seed, "trace-split");
  std::shuffle(cases.begin(), cases.end(), rng);
  const auto n_test = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(test_fraction * static_cast<double>(cases.size()))));
  cases.resize(std::min(n_test, cases.size()));
  std::sort(cases.begin(), cases.end());
  return cases;
}

EvaluationResult EvaluatePrefixes(const EventLog& log,
                                  std::shared_ptr<const FeatureLayout> layout,
                                  const PredictorFactory& factory,
                                  const EvaluateOptions& options) {
  if (options.prefix_lengths.empty()) throw InputError("no prefix lengths requested");
  const auto start = std::chrono::steady_clock::now();
  EvaluationResult result;
  result.test_cases = TestCases(log, options.explain.seed, options.test_fraction);

  std::vector<std::size_t> lengths = options.prefix_lengths;
  std::sort(lengths.begin(), lengths.end());
  lengths.erase(std::unique(lengths.begin(), lengths.end()), lengths.end());
  for (std::size_t k : lengths) {
    if (k < 1) throw InputError("prefix lengths must be positive");
    std::size_t taken = 0;
    for (const auto& case_id : result.test_cases) {
      if (options.max_prefixes > 0 && taken >= options.max_prefixes) break;
      if (log.FindTrace(case_id)->size() <= k) continue;
      result.prefixes.push_back({case_id, k, {}, {}});
      ++taken;
    }
  }

  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::atomic<bool> abort{false};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    try {
      std::unique_ptr<Predictor> predictor = factory();
      while (!abort) {
        const std::size_t i = next++;
        if (i >= result.prefixes.size()) break;
        PrefixResult& p = result.prefixes[i];
        try {
          p.explanation = ExplainPrefix(log, layout, *predictor, p.case_id,
                                        p.prefix_length, options.explain)
                              .explanation;
        } catch (const InputError& e) {
          p.error = e.what();
        } catch (const std::invalid_argument& e) {
          p.error = e.what();
        }
        const std::size_t finished = ++done;
        if (finished % 25 == 0) {
          spdlog::info("explained {}/{} prefixes", finished, result.prefixes.size());
        }
      }
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      abort = true;
    }
  };
  const auto jobs = static_cast<std::size_t>(std::max(1, options.jobs));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (std::size_t j = 0; j < std::min(jobs, result.prefixes.size()); ++j) {
      threads.emplace_back(worker);
    }
    for (auto& t : threads) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  double total_sum = 0.0;
  for (std::size_t k : lengths) {
    FidelityRow row{k, 0, std::numeric_limits<double>::quiet_NaN()};
    double sum = 0.0;
    for (const auto& p : result.prefixes) {
      if (p.prefix_length != k || !p.error.empty()) continue;
      ++row.n_prefixes;
      sum += p.explanation.fidelity.fidelity;
    }
    if (row.n_prefixes > 0) row.mean_fidelity = sum / static_cast<double>(row.n_prefixes);
    result.total.n_prefixes += row.n_prefixes;
    total_sum += sum;
    result.rows.push_back(row);
  }
  result.total.mean_fidelity =
      result.total.n_prefixes > 0
          ? total_sum / static_cast<double>(result.total.n_prefixes)
          : std::numeric_limits<double>::quiet_NaN();
  result.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace procf
