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

#ifndef PROCF_SYNTHETIC_LOG_H_
#define PROCF_SYNTHETIC_LOG_H_

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "procf/event_log.h"
#include "procf/rng.h"

namespace procf {

// Directed control-flow edge. Several edges leaving one activity form an XOR
// choice weighted by `weight`.
struct Transition {
  std::string from;
  std::string to;
  double weight = 1.0;
};

struct UniformNumeric {
  double lo = 0.0;
  double hi = 1.0;
  bool integral = false;
};

struct WeightedCategorical {
  std::vector<std::pair<std::string, double>> levels;
};

struct AttributeGenerator {
  std::string name;
  AttributeScope scope = AttributeScope::kCase;
  // For event attributes: the activity whose events carry the attribute.
  std::string emitted_by;
  std::variant<UniformNumeric, WeightedCategorical> distribution;
};

// Picks the terminal activity when every enabled successor is an outcome
// activity. Returning nullopt falls back to the transition weights.
using OutcomeRule = std::function<std::optional<std::string>(
    const Trace& partial, std::span<const std::string> candidates,
    RandomEngine& rng)>;

struct ProcessSpec {
  std::string start;
  std::vector<Transition> transitions;
  // Upper bound on how often an activity may occur in one trace; 1 when not
  // listed. Values above 1 turn back-edges into bounded loops.
  std::map<std::string, int> max_visits;
  std::vector<AttributeGenerator> attributes;
  // terminal activity -> outcome label; terminal activities have no
  // outgoing transitions.
  std::vector<std::pair<std::string, OutcomeLabel>> outcomes;
  OutcomeRule outcome_rule;

  // Activities in order of first mention (start first).
  std::vector<std::string> Activities() const;
  // Schema describing logs generated from this spec.
  LogSchema Schema() const;
  // Throws InputError on dangling edges, dead ends or unreachable outcomes.
  void Validate() const;
};

// Deterministic for a fixed seed. Throws InputError for n_traces <= 0 or an
// invalid spec.
EventLog GenerateSyntheticLog(const ProcessSpec& spec, int n_traces,
                              std::uint64_t seed);

// True iff `activities` is a complete walk of the spec's control-flow graph
// that respects visit bounds and ends in exactly one outcome activity.
bool ReplayAccepts(const ProcessSpec& spec,
                   std::span<const std::string> activities);

}  // namespace procf

#endif  // PROCF_SYNTHETIC_LOG_H_
