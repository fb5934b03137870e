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

#include "procf/demo.h"

#include <algorithm>
#include <random>

namespace procf {
namespace {

double NumberOr(const std::map<std::string, AttrValue>& attrs, const std::string& name,
                double fallback) {
  auto it = attrs.find(name);
  if (it == attrs.end()) return fallback;
  const double* d = std::get_if<double>(&it->second);
  return d ? *d : fallback;
}

std::string TextOr(const std::map<std::string, AttrValue>& attrs, const std::string& name) {
  auto it = attrs.find(name);
  if (it == attrs.end()) return {};
  const std::string* s = std::get_if<std::string>(&it->second);
  return s ? *s : std::string();
}

// Ground-truth outcome of a finished application, with 10% label noise.
std::optional<std::string> LoanOutcome(const Trace& partial,
                                       std::span<const std::string> candidates,
                                       RandomEngine& rng) {
  if (Bernoulli(rng, 0.1)) return candidates[UniformIndex(rng, candidates.size())];
  double credit = 0.0;
  int calls = 0;
  for (const auto& event : partial.events) {
    credit = NumberOr(event.attributes, "CreditScore", credit);
    calls += event.activity == "W_Call" ? 1 : 0;
  }
  const auto& ca = partial.case_attributes;
  if (credit > 600) return "A_Pending";
  if (TextOr(ca, "ApplicationType") == "Limit raise") return "A_Pending";
  if (calls >= 2) return "A_Canceled";
  if (TextOr(ca, "LoanGoal") == "Existing loan takeover" && credit <= 300) {
    return "A_Denied";
  }
  if (NumberOr(ca, "RequestedAmount", 0.0) > 40000) return "A_Denied";
  return "A_Canceled";
}

}  // namespace

ProcessSpec LoanProcess() {
  ProcessSpec spec;
  spec.start = "A_Create";
  spec.transitions = {
      {"A_Create", "A_Submitted", 0.6},  {"A_Create", "A_Concept", 0.4},
      {"A_Submitted", "A_Concept", 1.0}, {"A_Concept", "A_Accepted", 1.0},
      {"A_Accepted", "W_Complete", 1.0}, {"W_Complete", "W_Call", 0.5},
      {"W_Complete", "O_Create", 0.5},   {"W_Call", "W_Complete", 1.0},
      {"O_Create", "O_Sent", 1.0},       {"O_Sent", "A_Validating", 1.0},
      {"A_Validating", "A_Pending", 1.0}, {"A_Validating", "A_Denied", 1.0},
      {"A_Validating", "A_Canceled", 1.0},
  };
  spec.max_visits = {{"W_Complete", 4}, {"W_Call", 3}};
  spec.attributes = {
      {"LoanGoal", AttributeScope::kCase, "",
       WeightedCategorical{{{"Car", 0.3},
                            {"Home improvement", 0.3},
                            {"Existing loan takeover", 0.25},
                            {"Other", 0.15}}}},
      {"ApplicationType", AttributeScope::kCase, "",
       WeightedCategorical{{{"New credit", 0.8}, {"Limit raise", 0.2}}}},
      {"RequestedAmount", AttributeScope::kCase, "", UniformNumeric{1000, 50000, true}},
      {"CreditScore", AttributeScope::kEvent, "O_Create", UniformNumeric{0, 1000, true}},
      {"OfferedAmount", AttributeScope::kEvent, "O_Create",
       UniformNumeric{1000, 50000, true}},
  };
  spec.outcomes = {
      {"A_Pending", "A_Pending"}, {"A_Denied", "A_Denied"}, {"A_Canceled", "A_Canceled"}};
  spec.outcome_rule = LoanOutcome;
  return spec;
}

RuleOracle LoanOracle() {
  using Op = CompareOp;
  std::vector<OracleRule> rules = {
      {{{"CreditScore", Op::kGreater, 0.6}}, "A_Pending"},
      {{{"ApplicationType=Limit raise", Op::kGreater, 0.5}}, "A_Pending"},
      {{{"count(W_Call)", Op::kGreaterEqual, 2}}, "A_Canceled"},
      {{{"LoanGoal=Existing loan takeover", Op::kGreater, 0.5},
        {"CreditScore", Op::kLessEqual, 0.3}},
       "A_Denied"},
      {{{"RequestedAmount", Op::kGreater, 0.8}}, "A_Denied"},
  };
  return RuleOracle(std::move(rules), "A_Canceled",
                    {"A_Canceled", "A_Denied", "A_Pending"});
}

}  // namespace procf
