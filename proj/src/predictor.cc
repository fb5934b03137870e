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

#include "procf/predictor.h"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <thread>

#include <spdlog/spdlog.h>

#include "procf/errors.h"

namespace procf {
namespace {

constexpr std::size_t kStderrTail = 4096;

struct OpName {
  CompareOp op;
  std::string_view text;
};
constexpr OpName kOpNames[] = {
    {CompareOp::kLess, "<"},         {CompareOp::kLessEqual, "<="},
    {CompareOp::kGreater, ">"},      {CompareOp::kGreaterEqual, ">="},
    {CompareOp::kEqual, "=="},       {CompareOp::kNotEqual, "!="},
};

CompareOp ParseOp(std::string_view text) {
  if (text == "=") return CompareOp::kEqual;
  for (const auto& entry : kOpNames) {
    if (entry.text == text) return entry.op;
  }
  throw InputError("unknown comparison operator '" + std::string(text) + "'");
}

std::string_view OpText(CompareOp op) {
  for (const auto& entry : kOpNames) {
    if (entry.op == op) return entry.text;
  }
  return "?";
}

void CloseFd(int& fd) {
  if (fd >= 0) {
    ::close(fd);
    fd = -1;
  }
}

}  // namespace

bool FeatureCondition::Holds(double x) const {
  switch (op) {
    case CompareOp::kLess:
      return x < value;
    case CompareOp::kLessEqual:
      return x <= value;
    case CompareOp::kGreater:
      return x > value;
    case CompareOp::kGreaterEqual:
      return x >= value;
    case CompareOp::kEqual:
      return x == value;
    case CompareOp::kNotEqual:
      return x != value;
  }
  return false;
}

RuleOracle::RuleOracle(std::vector<OracleRule> rules, OutcomeLabel default_label,
                       std::vector<OutcomeLabel> labels)
    : rules_(std::move(rules)),
      default_label_(std::move(default_label)),
      labels_(std::move(labels)) {
  std::set<OutcomeLabel> used{default_label_};
  for (const auto& rule : rules_) used.insert(rule.label);
  if (labels_.empty()) {
    labels_.assign(used.begin(), used.end());
  } else {
    std::set<OutcomeLabel> declared(labels_.begin(), labels_.end());
    if (declared.size() != labels_.size()) {
      throw InputError("oracle labels must be distinct");
    }
    for (const auto& label : used) {
      if (!declared.contains(label)) {
        throw InputError("oracle rule label '" + label +
                         "' is not among the declared labels");
      }
    }
  }
}

RuleOracle RuleOracle::FromJson(const nlohmann::json& doc) {
  try {
    std::vector<OracleRule> rules;
    for (const auto& item : doc.at("rules")) {
      OracleRule rule;
      rule.label = item.at("label").get<std::string>();
      for (const auto& cond : item.at("when")) {
        rule.conditions.push_back(
            FeatureCondition{cond.at("column").get<std::string>(),
                             ParseOp(cond.at("op").get<std::string>()),
                             cond.at("value").get<double>()});
      }
      rules.push_back(std::move(rule));
    }
    std::vector<OutcomeLabel> labels;
    if (doc.contains("labels")) {
      labels = doc.at("labels").get<std::vector<std::string>>();
    }
    return RuleOracle(std::move(rules), doc.at("default").get<std::string>(),
                      std::move(labels));
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("invalid oracle definition: ") + e.what());
  }
}

RuleOracle RuleOracle::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open oracle file " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw InputError("oracle file " + path.string() + " is not valid JSON: " +
                     e.what());
  }
  return FromJson(doc);
}

nlohmann::json RuleOracle::ToJson() const {
  nlohmann::json doc;
  doc["labels"] = labels_;
  doc["default"] = default_label_;
  doc["rules"] = nlohmann::json::array();
  for (const auto& rule : rules_) {
    nlohmann::json item;
    item["label"] = rule.label;
    item["when"] = nlohmann::json::array();
    for (const auto& cond : rule.conditions) {
      item["when"].push_back({{"column", cond.column},
                              {"op", std::string(OpText(cond.op))},
                              {"value", cond.value}});
    }
    doc["rules"].push_back(std::move(item));
  }
  return doc;
}

const OutcomeLabel& RuleOracle::Evaluate(std::span<const std::string> column_names,
                                         std::span<const double> row) const {
  for (const auto& rule : rules_) {
    bool match = true;
    for (const auto& cond : rule.conditions) {
      auto it = std::find(column_names.begin(), column_names.end(), cond.column);
      if (it == column_names.end()) {
        throw PredictorError("oracle rule references unknown column '" +
                             cond.column + "'");
      }
      if (!cond.Holds(row[static_cast<std::size_t>(it - column_names.begin())])) {
        match = false;
        break;
      }
    }
    if (match) return rule.label;
  }
  return default_label_;
}

std::vector<OutcomeLabel> RuleOracle::PredictBatch(const FeatureMatrix& rows) {
  const FeatureLayout& layout = rows.layout();
  std::vector<std::vector<std::size_t>> bound(rules_.size());
  for (std::size_t r = 0; r < rules_.size(); ++r) {
    for (const auto& cond : rules_[r].conditions) {
      auto index = layout.ColumnIndex(cond.column);
      if (!index) {
        throw PredictorError("oracle rule references unknown column '" +
                             cond.column + "'");
      }
      bound[r].push_back(*index);
    }
  }
  std::vector<OutcomeLabel> labels;
  labels.reserve(rows.rows());
  for (std::size_t i = 0; i < rows.rows(); ++i) {
    const auto row = rows.row(i);
    const OutcomeLabel* label = &default_label_;
    for (std::size_t r = 0; r < rules_.size(); ++r) {
      bool match = true;
      for (std::size_t c = 0; c < bound[r].size() && match; ++c) {
        match = rules_[r].conditions[c].Holds(row[bound[r][c]]);
      }
      if (match) {
        label = &rules_[r].label;
        break;
      }
    }
    labels.push_back(*label);
  }
  return labels;
}

ExternalPredictor::ExternalPredictor(pid_t pid, int to_child, int from_child,
                                     int child_stderr, Options options)
    : pid_(pid),
      to_child_(to_child),
      from_child_(from_child),
      child_stderr_(child_stderr),
      options_(options) {}

std::unique_ptr<ExternalPredictor> ExternalPredictor::Spawn(
    const std::string& command, std::vector<std::string> expected_columns,
    Options options) {
  // stdin and stdout share one socket so that writes can use MSG_NOSIGNAL.
  int channel[2];
  if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, channel) != 0) {
    throw PredictorError(std::string("socketpair failed: ") + std::strerror(errno));
  }
  int err_pipe[2];
  if (::pipe2(err_pipe, O_CLOEXEC) != 0) {
    ::close(channel[0]);
    ::close(channel[1]);
    throw PredictorError(std::string("pipe failed: ") + std::strerror(errno));
  }
  const pid_t pid = ::fork();
  if (pid < 0) {
    for (int fd : {channel[0], channel[1], err_pipe[0], err_pipe[1]}) ::close(fd);
    throw PredictorError(std::string("fork failed: ") + std::strerror(errno));
  }
  if (pid == 0) {
    ::dup2(channel[1], STDIN_FILENO);
    ::dup2(channel[1], STDOUT_FILENO);
    ::dup2(err_pipe[1], STDERR_FILENO);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(channel[1]);
  ::close(err_pipe[1]);
  ::fcntl(err_pipe[0], F_SETFL, ::fcntl(err_pipe[0], F_GETFL) | O_NONBLOCK);

  std::unique_ptr<ExternalPredictor> predictor(
      new ExternalPredictor(pid, channel[0], channel[0], err_pipe[0], options));
  spdlog::debug("spawned predictor pid {}: {}", pid, command);

  const std::string line = predictor->ReadLine("hello");
  nlohmann::json hello;
  try {
    hello = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception&) {
    predictor->Fail("handshake line is not JSON: " + line);
  }
  if (!hello.is_object() || hello.value("type", "") != "hello" ||
      !hello.contains("columns") || !hello["columns"].is_array() ||
      !hello.contains("labels") || !hello["labels"].is_array()) {
    predictor->Fail("malformed hello: " + line);
  }
  try {
    predictor->columns_ = hello["columns"].get<std::vector<std::string>>();
    predictor->labels_ = hello["labels"].get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception&) {
    predictor->Fail("hello columns and labels must be string arrays");
  }
  std::set<std::string> distinct(predictor->labels_.begin(),
                                 predictor->labels_.end());
  if (predictor->labels_.empty() || distinct.size() != predictor->labels_.size()) {
    predictor->Fail("hello must announce a nonempty set of distinct labels");
  }
  if (predictor->columns_.size() != expected_columns.size()) {
    predictor->Fail("schema mismatch: predictor announced " +
                    std::to_string(predictor->columns_.size()) +
                    " columns, engine expects " +
                    std::to_string(expected_columns.size()));
  }
  for (std::size_t i = 0; i < expected_columns.size(); ++i) {
    if (predictor->columns_[i] != expected_columns[i]) {
      predictor->Fail("schema mismatch at column " + std::to_string(i) +
                      ": predictor has '" + predictor->columns_[i] +
                      "', engine expects '" + expected_columns[i] + "'");
    }
  }
  return predictor;
}

ExternalPredictor::~ExternalPredictor() {
  if (!dead_) {
    try {
      SendLine(R"({"type":"shutdown"})");
    } catch (const PredictorError&) {
    }
    ::shutdown(to_child_, SHUT_WR);
    int status = 0;
    bool reaped = false;
    for (int i = 0; i < 200 && !reaped; ++i) {
      reaped = ::waitpid(pid_, &status, WNOHANG) == pid_;
      if (!reaped) std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    if (!reaped) {
      ::kill(pid_, SIGKILL);
      ::waitpid(pid_, &status, 0);
    }
  }
  CloseFd(child_stderr_);
  if (from_child_ != to_child_) CloseFd(from_child_);
  CloseFd(to_child_);
}

void ExternalPredictor::Fail(const std::string& message) {
  DrainStderr();
  if (!dead_) {
    dead_ = true;
    ::kill(pid_, SIGKILL);
    int status = 0;
    ::waitpid(pid_, &status, 0);
  }
  DrainStderr();
  std::string full = message;
  if (!stderr_tail_.empty()) full += "; predictor stderr: " + stderr_tail_;
  throw PredictorError(full);
}

void ExternalPredictor::DrainStderr() {
  if (child_stderr_ < 0) return;
  char buffer[4096];
  while (true) {
    const ssize_t n = ::read(child_stderr_, buffer, sizeof(buffer));
    if (n <= 0) break;
    stderr_tail_.append(buffer, static_cast<std::size_t>(n));
  }
  if (stderr_tail_.size() > kStderrTail) {
    stderr_tail_.erase(0, stderr_tail_.size() - kStderrTail);
  }
}

void ExternalPredictor::SendLine(const std::string& line) {
  std::string payload = line + "\n";
  std::size_t sent = 0;
  while (sent < payload.size()) {
    const ssize_t n = ::send(to_child_, payload.data() + sent,
                             payload.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw PredictorError(std::string("write to predictor failed: ") +
                           std::strerror(errno));
    }
    sent += static_cast<std::size_t>(n);
  }
}

std::string ExternalPredictor::ReadLine(std::string_view waiting_for) {
  using Clock = std::chrono::steady_clock;
  const auto deadline = Clock::now() + options_.timeout;
  while (true) {
    const auto newline = stdout_buffer_.find('\n');
    if (newline != std::string::npos) {
      std::string line = stdout_buffer_.substr(0, newline);
      stdout_buffer_.erase(0, newline + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      return line;
    }
    const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - Clock::now());
    if (remaining.count() <= 0) {
      Fail("timed out after " + std::to_string(options_.timeout.count()) +
           " ms waiting for " + std::string(waiting_for));
    }
    pollfd fds[2] = {{from_child_, POLLIN, 0}, {child_stderr_, POLLIN, 0}};
    const int ready = ::poll(fds, child_stderr_ >= 0 ? 2 : 1,
                             static_cast<int>(remaining.count()));
    if (ready < 0) {
      if (errno == EINTR) continue;
      Fail(std::string("poll failed: ") + std::strerror(errno));
    }
    if (child_stderr_ >= 0 && (fds[1].revents & (POLLIN | POLLHUP)) != 0) {
      char buffer[4096];
      const ssize_t n = ::read(child_stderr_, buffer, sizeof(buffer));
      if (n > 0) {
        stderr_tail_.append(buffer, static_cast<std::size_t>(n));
        if (stderr_tail_.size() > kStderrTail) {
          stderr_tail_.erase(0, stderr_tail_.size() - kStderrTail);
        }
      } else if (n == 0) {
        CloseFd(child_stderr_);
      }
    }
    if ((fds[0].revents & (POLLIN | POLLHUP | POLLERR)) != 0) {
      char buffer[65536];
      const ssize_t n = ::recv(from_child_, buffer, sizeof(buffer), 0);
      if (n < 0) {
        if (errno == EINTR || errno == EAGAIN) continue;
        Fail(std::string("read from predictor failed: ") + std::strerror(errno));
      }
      if (n == 0) {
        Fail("predictor exited before sending " + std::string(waiting_for));
      }
      stdout_buffer_.append(buffer, static_cast<std::size_t>(n));
    }
  }
}

std::vector<OutcomeLabel> ExternalPredictor::PredictBatch(const FeatureMatrix& rows) {
  if (dead_) throw PredictorError("predictor process is no longer running");
  if (rows.cols() != columns_.size()) {
    throw PredictorError("matrix has " + std::to_string(rows.cols()) +
                         " columns, predictor expects " +
                         std::to_string(columns_.size()));
  }
  if (rows.rows() == 0) return {};

  const std::int64_t id = next_id_++;
  nlohmann::json request;
  request["type"] = "predict";
  request["id"] = id;
  auto& payload = request["rows"] = nlohmann::json::array();
  for (std::size_t r = 0; r < rows.rows(); ++r) {
    const auto row = rows.row(r);
    payload.push_back(std::vector<double>(row.begin(), row.end()));
  }
  try {
    SendLine(request.dump());
  } catch (const PredictorError& e) {
    Fail(e.what());
  }

  const std::string line = ReadLine("prediction " + std::to_string(id));
  nlohmann::json response;
  try {
    response = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception&) {
    Fail("malformed response: " + line);
  }
  if (!response.is_object()) Fail("malformed response: " + line);
  const std::string type = response.value("type", "");
  if (type == "error") {
    Fail("predictor reported an error: " + response.value("message", line));
  }
  if (type != "prediction" || !response.contains("id") ||
      !response["id"].is_number_integer() ||
      response["id"].get<std::int64_t>() != id || !response.contains("labels") ||
      !response["labels"].is_array()) {
    Fail("response does not answer request " + std::to_string(id) + ": " + line);
  }
  std::vector<OutcomeLabel> labels;
  labels.reserve(rows.rows());
  for (const auto& item : response["labels"]) {
    if (!item.is_string()) Fail("non-string label in response: " + line);
    labels.push_back(item.get<std::string>());
    if (std::find(labels_.begin(), labels_.end(), labels.back()) == labels_.end()) {
      Fail("label '" + labels.back() + "' is not in the handshake label set");
    }
  }
  if (labels.size() != rows.rows()) {
    Fail("expected " + std::to_string(rows.rows()) + " labels, got " +
         std::to_string(labels.size()));
  }
  return labels;
}

int ServeProtocol(Predictor& predictor, std::shared_ptr<const FeatureLayout> layout,
                  std::istream& in, std::ostream& out) {
  nlohmann::json hello;
  hello["type"] = "hello";
  hello["columns"] = layout->ColumnNames();
  hello["labels"] = predictor.outcome_set();
  out << hello.dump() << '\n' << std::flush;

  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json request;
    nlohmann::json id = nullptr;
    try {
      request = nlohmann::json::parse(line);
      if (request.contains("id")) id = request["id"];
      const std::string type = request.at("type").get<std::string>();
      if (type == "shutdown") return 0;
      if (type != "predict") throw InputError("unknown request type '" + type + "'");
      FeatureMatrix matrix(layout);
      for (const auto& row : request.at("rows")) {
        matrix.AppendRow(row.get<std::vector<double>>());
      }
      nlohmann::json response;
      response["type"] = "prediction";
      response["id"] = id;
      response["labels"] = predictor.PredictBatch(matrix);
      out << response.dump() << '\n' << std::flush;
    } catch (const std::exception& e) {
      nlohmann::json error;
      error["type"] = "error";
      error["id"] = id;
      error["message"] = e.what();
      out << error.dump() << '\n' << std::flush;
    }
  }
  return 0;
}

}  // namespace procf
