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

#include <set>
#include <sstream>
#include <string>

#include "gtest/gtest.h"
#include "procf/demo.h"
#include "procf/errors.h"

namespace procf {
namespace {

std::vector<std::string> Activities(const Trace& trace) {
  std::vector<std::string> out;
  for (const auto& e : trace.events) out.push_back(e.activity);
  return out;
}

ProcessSpec Linear() {
  ProcessSpec spec;
  spec.start = "A";
  spec.transitions = {{"A", "B", 1.0}, {"B", "End", 1.0}};
  spec.outcomes = {{"End", "done"}};
  return spec;
}

ProcessSpec Xor() {
  ProcessSpec spec;
  spec.start = "A";
  spec.transitions = {{"A", "B", 1.0}, {"A", "C", 1.0}, {"B", "Yes", 1.0},
                      {"C", "No", 1.0}};
  spec.outcomes = {{"Yes", "yes"}, {"No", "no"}};
  return spec;
}

TEST(SyntheticLogTest, LinearSpecGivesIdenticalControlFlows) {
  const EventLog log = GenerateSyntheticLog(Linear(), 5, 1);
  ASSERT_EQ(log.traces().size(), 5u);
  for (const auto& trace : log.traces()) {
    EXPECT_EQ(Activities(trace), (std::vector<std::string>{"A", "B", "End"}));
  }
  EXPECT_EQ(log.traces()[0].case_id, "case_0000");
}

TEST(SyntheticLogTest, SameSeedGivesByteIdenticalLogs) {
  std::ostringstream a, b, c;
  WriteLogCsv(GenerateSyntheticLog(LoanProcess(), 50, 9), a);
  WriteLogCsv(GenerateSyntheticLog(LoanProcess(), 50, 9), b);
  WriteLogCsv(GenerateSyntheticLog(LoanProcess(), 50, 10), c);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_NE(a.str(), c.str());
}

TEST(SyntheticLogTest, UniformXorSplitsEvenly) {
  const EventLog log = GenerateSyntheticLog(Xor(), 1000, 3);
  int b_traces = 0;
  for (const auto& trace : log.traces()) b_traces += trace.events[1].activity == "B" ? 1 : 0;
  // Binomial(1000, 0.5) has standard deviation ~0.016.
  EXPECT_NEAR(b_traces / 1000.0, 0.5, 0.05);
}

TEST(SyntheticLogTest, EveryLoanTraceIsAValidWalk) {
  const ProcessSpec spec = LoanProcess();
  const EventLog log = GenerateSyntheticLog(spec, 500, 4);
  std::set<std::string> outcomes;
  std::size_t longest = 0;
  for (const auto& trace : log.traces()) {
    EXPECT_TRUE(ReplayAccepts(spec, Activities(trace))) << trace.case_id;
    outcomes.insert(log.OutcomeOf(trace));
    longest = std::max(longest, trace.size());
    int calls = 0;
    for (const auto& e : trace.events) calls += e.activity == "W_Call" ? 1 : 0;
    EXPECT_LE(calls, 3);
  }
  EXPECT_EQ(outcomes.size(), 3u);
  EXPECT_GT(longest, 9u);  // the loop is exercised
  EXPECT_EQ(log.schema().attributes.size(), 5u);
}

TEST(SyntheticLogTest, EventAttributesComeFromTheirEmitter) {
  const EventLog log = GenerateSyntheticLog(LoanProcess(), 100, 5);
  for (const auto& trace : log.traces()) {
    for (const auto& e : trace.events) {
      EXPECT_EQ(e.attributes.contains("CreditScore"), e.activity == "O_Create");
    }
    EXPECT_TRUE(trace.case_attributes.contains("LoanGoal"));
  }
}

TEST(SyntheticLogTest, ReplayRejectsInvalidWalks) {
  const ProcessSpec spec = Xor();
  EXPECT_TRUE(ReplayAccepts(spec, std::vector<std::string>{"A", "B", "Yes"}));
  EXPECT_FALSE(ReplayAccepts(spec, std::vector<std::string>{"A", "B", "No"}));
  EXPECT_FALSE(ReplayAccepts(spec, std::vector<std::string>{"A", "B"}));
  EXPECT_FALSE(ReplayAccepts(spec, std::vector<std::string>{"B", "Yes"}));
  const ProcessSpec loan = LoanProcess();
  EXPECT_FALSE(ReplayAccepts(
      loan, std::vector<std::string>{"A_Create", "A_Concept", "A_Accepted", "W_Complete",
                                     "W_Call", "W_Complete", "W_Call", "W_Complete",
                                     "W_Call", "W_Complete", "W_Call", "W_Complete",
                                     "O_Create", "O_Sent", "A_Validating", "A_Denied"}));
}

TEST(SyntheticLogTest, RejectsBrokenSpecs) {
  ProcessSpec unreachable = Xor();
  unreachable.outcomes.emplace_back("Maybe", "maybe");
  EXPECT_THROW(GenerateSyntheticLog(unreachable, 1, 0), InputError);

  ProcessSpec dead_end = Xor();
  dead_end.transitions.push_back({"A", "D", 1.0});
  EXPECT_THROW(dead_end.Validate(), InputError);

  ProcessSpec weightless = Xor();
  weightless.transitions[0].weight = 0.0;
  EXPECT_THROW(weightless.Validate(), InputError);

  ProcessSpec bad_emitter = Xor();
  bad_emitter.attributes.push_back(
      {"x", AttributeScope::kEvent, "Nowhere", UniformNumeric{0, 1, false}});
  EXPECT_THROW(bad_emitter.Validate(), InputError);

  EXPECT_THROW(GenerateSyntheticLog(Xor(), 0, 0), InputError);
  EXPECT_THROW(GenerateSyntheticLog(Xor(), -3, 0), InputError);
}

TEST(SyntheticLogTest, OutcomeRuleChoosesTheTerminal) {
  ProcessSpec spec;
  spec.start = "A";
  spec.transitions = {{"A", "Yes", 1.0}, {"A", "No", 1.0}};
  spec.outcomes = {{"Yes", "yes"}, {"No", "no"}};
  spec.outcome_rule = [](const Trace&, std::span<const std::string>, RandomEngine&) {
    return std::optional<std::string>("No");
  };
  const EventLog log = GenerateSyntheticLog(spec, 20, 0);
  for (const auto& trace : log.traces()) EXPECT_EQ(log.OutcomeOf(trace), "no");
}

}  // namespace
}  // namespace procf
