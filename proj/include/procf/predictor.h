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

// Black-box predictors. Prediction is batched only: one call labels every row
// of a FeatureMatrix.
//
// Out-of-process predictors speak newline-delimited JSON over the child's
// stdin/stdout:
//
//   child  -> engine  {"type":"hello","columns":[...],"labels":[...]}
//   engine -> child   {"type":"predict","id":<int>,"rows":[[...],...]}
//   child  -> engine  {"type":"prediction","id":<int>,"labels":[...]}
//   engine -> child   {"type":"shutdown"}

#ifndef PROCF_PREDICTOR_H_
#define PROCF_PREDICTOR_H_

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <sys/types.h>

#include "json.hpp"
#include "procf/encoding.h"
#include "procf/event_log.h"

namespace procf {

class Predictor {
 public:
  virtual ~Predictor() = default;

  // The finite label set I.
  virtual const std::vector<OutcomeLabel>& outcome_set() const = 0;
  // Exactly one label per row, each in outcome_set().
  virtual std::vector<OutcomeLabel> PredictBatch(const FeatureMatrix& rows) = 0;
};

enum class CompareOp { kLess, kLessEqual, kGreater, kGreaterEqual, kEqual, kNotEqual };

struct FeatureCondition {
  std::string column;
  CompareOp op = CompareOp::kGreater;
  double value = 0.0;

  bool Holds(double x) const;
};

struct OracleRule {
  std::vector<FeatureCondition> conditions;
  OutcomeLabel label;
};

// Transparent ground-truth model: ordered rules over named feature columns,
// first match wins, default label otherwise.
//
// JSON form:
//   {"labels": [...], "default": "L",
//    "rules": [{"when": [{"column": "c", "op": ">", "value": 0.5}],
//               "label": "P"}]}
class RuleOracle : public Predictor {
 public:
  // `labels` defaults to the sorted set of rule labels plus the default.
  RuleOracle(std::vector<OracleRule> rules, OutcomeLabel default_label,
             std::vector<OutcomeLabel> labels = {});

  static RuleOracle FromJson(const nlohmann::json& doc);
  static RuleOracle Load(const std::filesystem::path& path);
  nlohmann::json ToJson() const;

  const std::vector<OutcomeLabel>& outcome_set() const override { return labels_; }
  // Throws PredictorError when a rule names a column the matrix lacks.
  std::vector<OutcomeLabel> PredictBatch(const FeatureMatrix& rows) override;

  // Evaluates one row given the names of its columns.
  const OutcomeLabel& Evaluate(std::span<const std::string> column_names,
                               std::span<const double> row) const;

  std::span<const OracleRule> rules() const { return rules_; }
  const OutcomeLabel& default_label() const { return default_label_; }

 private:
  std::vector<OracleRule> rules_;
  OutcomeLabel default_label_;
  std::vector<OutcomeLabel> labels_;
};

// Child process implementing the wire protocol. One request in flight.
class ExternalPredictor : public Predictor {
 public:
  struct Options {
    std::chrono::milliseconds timeout{30000};
  };

  // Launches `command` through /bin/sh, waits for hello and checks that the
  // announced columns equal `expected_columns` (name and count). Throws
  // PredictorError on timeout, early exit (with captured stderr) or mismatch.
  static std::unique_ptr<ExternalPredictor> Spawn(
      const std::string& command, std::vector<std::string> expected_columns,
      Options options);
  static std::unique_ptr<ExternalPredictor> Spawn(
      const std::string& command, std::vector<std::string> expected_columns) {
    return Spawn(command, std::move(expected_columns), Options{});
  }

  // Sends shutdown and reaps the child.
  ~ExternalPredictor() override;
  ExternalPredictor(const ExternalPredictor&) = delete;
  ExternalPredictor& operator=(const ExternalPredictor&) = delete;

  const std::vector<OutcomeLabel>& outcome_set() const override { return labels_; }
  std::vector<OutcomeLabel> PredictBatch(const FeatureMatrix& rows) override;

  const std::vector<std::string>& columns() const { return columns_; }
  std::int64_t requests_sent() const { return next_id_ - 1; }

 private:
  ExternalPredictor(pid_t pid, int to_child, int from_child, int child_stderr,
                    Options options);

  void SendLine(const std::string& line);
  // Next stdout line; throws PredictorError on EOF or timeout.
  std::string ReadLine(std::string_view waiting_for);
  void DrainStderr();
  [[noreturn]] void Fail(const std::string& message);

  pid_t pid_;
  int to_child_;
  int from_child_;
  int child_stderr_;
  Options options_;
  std::string stdout_buffer_;
  std::string stderr_tail_;
  std::vector<std::string> columns_;
  std::vector<OutcomeLabel> labels_;
  std::int64_t next_id_ = 1;
  bool dead_ = false;
};

// Serves `predictor` over the wire protocol on the given streams until
// shutdown or EOF. Used by the oracle server tool and by tests.
int ServeProtocol(Predictor& predictor, std::shared_ptr<const FeatureLayout> layout,
                  std::istream& in, std::ostream& out);

}  // namespace procf

#endif  // PROCF_PREDICTOR_H_
