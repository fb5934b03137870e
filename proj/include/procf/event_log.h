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

// Process data model: events, traces, event logs and trace prefixes, plus the
// CSV reader/writer and the JSON schema sidecar that types the CSV columns.
//
// CSV layout (one row per event):
//
//   case_id,activity,timestamp,ev_<name>...,case_<name>...
//
// Timestamps are ISO-8601 (`2026-01-31T08:15:00Z`, fractional seconds and
// `+hh:mm` offsets accepted). An empty `ev_` cell means the event does not
// carry that attribute. Case attributes may be repeated on every row of a case
// or given once; conflicting non-empty values are rejected.

#ifndef PROCF_EVENT_LOG_H_
#define PROCF_EVENT_LOG_H_

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"

namespace procf {

using OutcomeLabel = std::string;
using Timestamp = std::chrono::sys_time<std::chrono::milliseconds>;

// Numeric or categorical attribute value.
using AttrValue = std::variant<double, std::string>;

enum class AttributeType { kNumeric, kCategorical };
enum class AttributeScope { kEvent, kCase };

struct AttributeSpec {
  std::string name;
  AttributeType type = AttributeType::kNumeric;
  AttributeScope scope = AttributeScope::kEvent;
  // Categorical levels. Empty means "use the levels observed in the log".
  std::vector<std::string> levels;
  // Value used when an event attribute never occurs in a prefix or a case
  // attribute is missing.
  AttrValue default_value;

  bool operator==(const AttributeSpec&) const = default;
};

struct LogSchema {
  std::vector<std::string> activities;
  // When false, activities missing from `activities` are appended in order of
  // first appearance instead of being rejected.
  bool closed_alphabet = true;
  // Feature order: event attributes first, then case attributes, each in
  // declaration order.
  std::vector<AttributeSpec> attributes;
  // terminal activity -> outcome label
  std::vector<std::pair<std::string, OutcomeLabel>> outcomes;

  static LogSchema FromJson(const nlohmann::json& doc);
  static LogSchema Load(const std::filesystem::path& path);
  nlohmann::json ToJson() const;

  // Distinct outcome labels, sorted.
  std::vector<OutcomeLabel> OutcomeLabels() const;
  std::optional<std::size_t> ActivityIndex(std::string_view activity) const;
  std::optional<std::size_t> AttributeIndex(std::string_view name) const;
  std::optional<OutcomeLabel> OutcomeOf(std::string_view activity) const;

  bool operator==(const LogSchema&) const = default;
};

struct Event {
  std::string activity;
  std::string case_id;
  Timestamp timestamp{};
  std::map<std::string, AttrValue> attributes;

  bool operator==(const Event&) const = default;
};

struct Trace {
  std::string case_id;
  std::vector<Event> events;
  std::map<std::string, AttrValue> case_attributes;

  std::size_t size() const { return events.size(); }
  bool operator==(const Trace&) const = default;
};

// The first k events of a trace together with its case attributes.
struct Prefix {
  std::string case_id;
  std::vector<Event> events;
  std::map<std::string, AttrValue> case_attributes;

  std::size_t size() const { return events.size(); }
  bool operator==(const Prefix&) const = default;
};

// Per-attribute statistics computed once at load time.
struct AttributeStats {
  double min = 0.0;
  double max = 0.0;
  std::vector<std::string> levels;

  // max - min, or 1 for constant (or never observed) attributes.
  double Range() const { return max > min ? max - min : 1.0; }
  bool operator==(const AttributeStats&) const = default;
};

// An immutable, validated set of completed traces.
class EventLog {
 public:
  // Validates every trace against `schema` and computes attribute statistics.
  // Throws InputError on violations.
  EventLog(LogSchema schema, std::vector<Trace> traces);

  const LogSchema& schema() const { return schema_; }
  std::span<const Trace> traces() const { return traces_; }
  // Aligned with schema().attributes.
  std::span<const AttributeStats> stats() const { return stats_; }

  const Trace* FindTrace(std::string_view case_id) const;
  // Label of the last terminal activity in the trace.
  const OutcomeLabel& OutcomeOf(const Trace& trace) const;
  OutcomeLabel OutcomeOf(std::size_t trace_index) const {
    return outcomes_[trace_index];
  }

  bool operator==(const EventLog&) const = default;

 private:
  LogSchema schema_;
  std::vector<Trace> traces_;
  std::vector<AttributeStats> stats_;
  std::vector<OutcomeLabel> outcomes_;
};

std::optional<Timestamp> ParseTimestamp(std::string_view text);
std::string FormatTimestamp(Timestamp ts);

// Reads the CSV event log. Errors carry the offending line number.
EventLog ParseLog(std::istream& source, const LogSchema& schema);
EventLog LoadLog(const std::filesystem::path& path, const LogSchema& schema);
void WriteLogCsv(const EventLog& log, std::ostream& out);

// 0 < k < length is required; throws InputError otherwise.
Prefix TakePrefix(const Trace& trace, std::size_t k);
Prefix TakePrefix(const Prefix& prefix, std::size_t k);

std::string AttrValueToString(const AttrValue& value);

}  // namespace procf

#endif  // PROCF_EVENT_LOG_H_
