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

#include "procf/synthetic_log.h"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>

#include "procf/errors.h"

namespace procf {
namespace {

bool IsOutcome(const ProcessSpec& spec, const std::string& activity) {
  return std::any_of(spec.outcomes.begin(), spec.outcomes.end(),
                     [&](const auto& o) { return o.first == activity; });
}

int VisitBound(const ProcessSpec& spec, const std::string& activity) {
  auto it = spec.max_visits.find(activity);
  return it == spec.max_visits.end() ? 1 : it->second;
}

AttrValue Draw(const AttributeGenerator& generator, RandomEngine& rng) {
  if (const auto* numeric = std::get_if<UniformNumeric>(&generator.distribution)) {
    if (numeric->integral) {
      return static_cast<double>(std::uniform_int_distribution<long long>(
          std::llround(numeric->lo), std::llround(numeric->hi))(rng));
    }
    return std::uniform_real_distribution<double>(numeric->lo, numeric->hi)(rng);
  }
  const auto& categorical = std::get<WeightedCategorical>(generator.distribution);
  std::vector<double> weights;
  for (const auto& [level, weight] : categorical.levels) weights.push_back(weight);
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
  return categorical.levels[pick(rng)].first;
}

}  // namespace

std::vector<std::string> ProcessSpec::Activities() const {
  std::vector<std::string> out;
  auto add = [&](const std::string& activity) {
    if (std::find(out.begin(), out.end(), activity) == out.end()) {
      out.push_back(activity);
    }
  };
  add(start);
  for (const auto& t : transitions) {
    add(t.from);
    add(t.to);
  }
  for (const auto& [activity, label] : outcomes) add(activity);
  return out;
}

LogSchema ProcessSpec::Schema() const {
  LogSchema schema;
  schema.activities = Activities();
  schema.closed_alphabet = true;
  for (const auto scope : {AttributeScope::kEvent, AttributeScope::kCase}) {
    for (const auto& generator : attributes) {
      if (generator.scope != scope) continue;
      AttributeSpec spec;
      spec.name = generator.name;
      spec.scope = scope;
      if (const auto* categorical =
              std::get_if<WeightedCategorical>(&generator.distribution)) {
        spec.type = AttributeType::kCategorical;
        for (const auto& [level, weight] : categorical->levels) {
          spec.levels.push_back(level);
        }
        spec.default_value = std::string();
      } else {
        spec.type = AttributeType::kNumeric;
        spec.default_value = 0.0;
      }
      schema.attributes.push_back(std::move(spec));
    }
  }
  schema.outcomes = outcomes;
  return schema;
}

void ProcessSpec::Validate() const {
  if (start.empty()) throw InputError("process spec has no start activity");
  if (outcomes.empty()) throw InputError("process spec declares no outcomes");
  for (const auto& t : transitions) {
    if (!(t.weight > 0.0)) {
      throw InputError("transition " + t.from + " -> " + t.to +
                       " needs a positive weight");
    }
    if (IsOutcome(*this, t.from)) {
      throw InputError("outcome activity '" + t.from +
                       "' must not have outgoing transitions");
    }
  }
  for (const auto& activity : Activities()) {
    if (IsOutcome(*this, activity)) continue;
    const bool has_successor =
        std::any_of(transitions.begin(), transitions.end(),
                    [&](const Transition& t) { return t.from == activity; });
    if (!has_successor) {
      throw InputError("activity '" + activity +
                       "' is a dead end (no successor and not an outcome)");
    }
  }
  std::set<std::string> reachable{start};
  std::deque<std::string> frontier{start};
  while (!frontier.empty()) {
    const std::string current = frontier.front();
    frontier.pop_front();
    for (const auto& t : transitions) {
      if (t.from == current && reachable.insert(t.to).second) {
        frontier.push_back(t.to);
      }
    }
  }
  for (const auto& [activity, label] : outcomes) {
    if (!reachable.contains(activity)) {
      throw InputError("outcome activity '" + activity +
                       "' is unreachable from '" + start + "'");
    }
  }
  const auto known = Activities();
  for (const auto& generator : attributes) {
    if (generator.scope == AttributeScope::kEvent &&
        std::find(known.begin(), known.end(), generator.emitted_by) ==
            known.end()) {
      throw InputError("attribute '" + generator.name +
                       "' is emitted by unknown activity '" +
                       generator.emitted_by + "'");
    }
  }
}

EventLog GenerateSyntheticLog(const ProcessSpec& spec, int n_traces,
                              std::uint64_t seed) {
  if (n_traces <= 0) throw InputError("n_traces must be positive");
  spec.Validate();
  RandomEngine rng = SubStream(seed, "synthetic-log");
  const int width =
      std::max<int>(4, static_cast<int>(std::to_string(n_traces - 1).size()));
  const Timestamp base =
      std::chrono::sys_days{std::chrono::year{2026} / 1 / 1};

  std::vector<Trace> traces;
  traces.reserve(static_cast<std::size_t>(n_traces));
  for (int i = 0; i < n_traces; ++i) {
    std::string number = std::to_string(i);
    Trace trace;
    trace.case_id =
        "case_" + std::string(width - static_cast<int>(number.size()), '0') + number;
    for (const auto& generator : spec.attributes) {
      if (generator.scope == AttributeScope::kCase) {
        trace.case_attributes.emplace(generator.name, Draw(generator, rng));
      }
    }

    Timestamp clock = base + std::chrono::hours{i};
    std::map<std::string, int> visits;
    std::string current = spec.start;
    while (true) {
      Event event;
      event.activity = current;
      event.case_id = trace.case_id;
      event.timestamp = clock;
      for (const auto& generator : spec.attributes) {
        if (generator.scope == AttributeScope::kEvent &&
            generator.emitted_by == current) {
          event.attributes.emplace(generator.name, Draw(generator, rng));
        }
      }
      trace.events.push_back(std::move(event));
      ++visits[current];
      if (IsOutcome(spec, current)) break;

      std::vector<const Transition*> enabled;
      for (const auto& t : spec.transitions) {
        if (t.from == current && visits[t.to] < VisitBound(spec, t.to)) {
          enabled.push_back(&t);
        }
      }
      if (enabled.empty()) {
        throw InputError("every successor of '" + current +
                         "' exceeds its visit bound");
      }
      const bool all_terminal =
          std::all_of(enabled.begin(), enabled.end(),
                      [&](const Transition* t) { return IsOutcome(spec, t->to); });
      std::optional<std::string> next;
      if (all_terminal && spec.outcome_rule) {
        std::vector<std::string> candidates;
        for (const auto* t : enabled) candidates.push_back(t->to);
        next = spec.outcome_rule(trace, candidates, rng);
        if (next && std::find(candidates.begin(), candidates.end(), *next) ==
                        candidates.end()) {
          throw InputError("outcome rule chose '" + *next +
                           "', which is not an enabled successor of '" +
                           current + "'");
        }
      }
      if (!next) {
        std::vector<double> weights;
        for (const auto* t : enabled) weights.push_back(t->weight);
        std::discrete_distribution<std::size_t> pick(weights.begin(),
                                                     weights.end());
        next = enabled[pick(rng)]->to;
      }
      current = *next;
      clock += std::chrono::minutes{
          std::uniform_int_distribution<int>(1, 120)(rng)};
    }
    traces.push_back(std::move(trace));
  }
  return EventLog(spec.Schema(), std::move(traces));
}

bool ReplayAccepts(const ProcessSpec& spec,
                   std::span<const std::string> activities) {
  if (activities.empty() || activities.front() != spec.start) return false;
  std::map<std::string, int> visits;
  for (std::size_t i = 0; i < activities.size(); ++i) {
    const std::string& activity = activities[i];
    if (++visits[activity] > VisitBound(spec, activity)) return false;
    const bool last = i + 1 == activities.size();
    if (IsOutcome(spec, activity) != last) return false;
    if (!last) {
      const std::string& next = activities[i + 1];
      const bool edge = std::any_of(
          spec.transitions.begin(), spec.transitions.end(),
          [&](const Transition& t) { return t.from == activity && t.to == next; });
      if (!edge) return false;
    }
  }
  return true;
}

}  // namespace procf
