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

#include "procf/event_log.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <unordered_map>

#include "procf/errors.h"

namespace procf {
namespace {

constexpr std::string_view kEventPrefix = "ev_";
constexpr std::string_view kCasePrefix = "case_";

std::string_view TypeName(AttributeType type) {
  return type == AttributeType::kNumeric ? "numeric" : "categorical";
}

AttributeSpec AttributeFromJson(const nlohmann::json& doc,
                                AttributeScope scope) {
  AttributeSpec spec;
  spec.scope = scope;
  spec.name = doc.at("name").get<std::string>();
  const auto type = doc.at("type").get<std::string>();
  if (type == "numeric") {
    spec.type = AttributeType::kNumeric;
    spec.default_value = 0.0;
  } else if (type == "categorical") {
    spec.type = AttributeType::kCategorical;
    spec.default_value = std::string();
  } else {
    throw InputError("attribute '" + spec.name + "' has unknown type '" +
                     type + "' (expected numeric or categorical)");
  }
  if (doc.contains("levels")) {
    if (spec.type != AttributeType::kCategorical) {
      throw InputError("numeric attribute '" + spec.name +
                       "' cannot declare levels");
    }
    spec.levels = doc.at("levels").get<std::vector<std::string>>();
    std::set<std::string> unique(spec.levels.begin(), spec.levels.end());
    if (unique.size() != spec.levels.size()) {
      throw InputError("attribute '" + spec.name + "' repeats a level");
    }
  }
  if (doc.contains("default")) {
    const auto& value = doc.at("default");
    if (spec.type == AttributeType::kNumeric) {
      if (!value.is_number()) {
        throw InputError("default of numeric attribute '" + spec.name +
                         "' must be a number");
      }
      spec.default_value = value.get<double>();
    } else {
      if (!value.is_string()) {
        throw InputError("default of categorical attribute '" + spec.name +
                         "' must be a string");
      }
      spec.default_value = value.get<std::string>();
    }
  }
  return spec;
}

nlohmann::json AttributeToJson(const AttributeSpec& spec) {
  nlohmann::json doc;
  doc["name"] = spec.name;
  doc["type"] = std::string(TypeName(spec.type));
  if (!spec.levels.empty()) doc["levels"] = spec.levels;
  if (const auto* number = std::get_if<double>(&spec.default_value)) {
    doc["default"] = *number;
  } else {
    doc["default"] = std::get<std::string>(spec.default_value);
  }
  return doc;
}

// Splits one CSV record. Quoted fields may contain commas and doubled quotes
// but not line breaks.
std::optional<std::vector<std::string>> SplitCsvLine(std::string_view line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  bool field_started_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      if (!field.empty() || field_started_quoted) return std::nullopt;
      quoted = true;
      field_started_quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
      field_started_quoted = false;
    } else {
      if (field_started_quoted) return std::nullopt;
      field.push_back(c);
    }
  }
  if (quoted) return std::nullopt;
  fields.push_back(std::move(field));
  return fields;
}

void WriteCsvField(std::ostream& out, std::string_view value) {
  if (value.find_first_of(",\"\n\r") == std::string_view::npos) {
    out << value;
    return;
  }
  out << '"';
  for (char c : value) {
    if (c == '"') out << '"';
    out << c;
  }
  out << '"';
}

std::optional<double> ParseNumber(std::string_view text) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = text.data() + text.size();
  if (!text.empty() && *begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

template <typename Int>
bool ParseFixedInt(std::string_view text, std::size_t pos, std::size_t width,
                   Int* out) {
  if (pos + width > text.size()) return false;
  for (std::size_t i = pos; i < pos + width; ++i) {
    if (text[i] < '0' || text[i] > '9') return false;
  }
  auto [ptr, ec] =
      std::from_chars(text.data() + pos, text.data() + pos + width, *out);
  return ec == std::errc();
}

bool ValueMatches(const AttributeSpec& spec, const AttrValue& value) {
  if (spec.type == AttributeType::kNumeric) {
    return std::holds_alternative<double>(value);
  }
  if (!std::holds_alternative<std::string>(value)) return false;
  if (spec.levels.empty()) return true;
  const auto& level = std::get<std::string>(value);
  return std::find(spec.levels.begin(), spec.levels.end(), level) !=
         spec.levels.end();
}

}  // namespace

LogSchema LogSchema::FromJson(const nlohmann::json& doc) {
  LogSchema schema;
  try {
    schema.activities = doc.at("activities").get<std::vector<std::string>>();
    schema.closed_alphabet = doc.value("closed_alphabet", true);
    if (doc.contains("event_attributes")) {
      for (const auto& item : doc.at("event_attributes")) {
        schema.attributes.push_back(
            AttributeFromJson(item, AttributeScope::kEvent));
      }
    }
    if (doc.contains("case_attributes")) {
      for (const auto& item : doc.at("case_attributes")) {
        schema.attributes.push_back(
            AttributeFromJson(item, AttributeScope::kCase));
      }
    }
    for (const auto& [activity, label] : doc.at("outcomes").items()) {
      schema.outcomes.emplace_back(activity, label.get<std::string>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("invalid schema: ") + e.what());
  }

  std::set<std::string> seen(schema.activities.begin(),
                             schema.activities.end());
  if (seen.size() != schema.activities.size()) {
    throw InputError("schema repeats an activity");
  }
  std::set<std::string> names;
  for (const auto& attribute : schema.attributes) {
    if (attribute.name.empty()) throw InputError("attribute with empty name");
    if (!names.insert(attribute.name).second) {
      throw InputError("attribute '" + attribute.name +
                       "' declared more than once");
    }
  }
  for (const auto& [activity, label] : schema.outcomes) {
    if (schema.closed_alphabet && !seen.contains(activity)) {
      throw InputError("outcome activity '" + activity +
                       "' is not in the activity alphabet");
    }
  }
  if (schema.OutcomeLabels().size() < 2) {
    throw InputError("schema must map terminal activities to at least two "
                     "distinct outcome labels");
  }
  return schema;
}

LogSchema LogSchema::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open schema file " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw InputError("schema file " + path.string() +
                     " is not valid JSON: " + e.what());
  }
  return FromJson(doc);
}

nlohmann::json LogSchema::ToJson() const {
  nlohmann::json doc;
  doc["activities"] = activities;
  doc["closed_alphabet"] = closed_alphabet;
  doc["event_attributes"] = nlohmann::json::array();
  doc["case_attributes"] = nlohmann::json::array();
  for (const auto& attribute : attributes) {
    doc[attribute.scope == AttributeScope::kEvent ? "event_attributes"
                                                   : "case_attributes"]
        .push_back(AttributeToJson(attribute));
  }
  doc["outcomes"] = nlohmann::json::object();
  for (const auto& [activity, label] : outcomes) doc["outcomes"][activity] = label;
  return doc;
}

std::vector<OutcomeLabel> LogSchema::OutcomeLabels() const {
  std::set<OutcomeLabel> labels;
  for (const auto& [activity, label] : outcomes) labels.insert(label);
  return {labels.begin(), labels.end()};
}

std::optional<std::size_t> LogSchema::ActivityIndex(
    std::string_view activity) const {
  auto it = std::find(activities.begin(), activities.end(), activity);
  if (it == activities.end()) return std::nullopt;
  return static_cast<std::size_t>(it - activities.begin());
}

std::optional<std::size_t> LogSchema::AttributeIndex(
    std::string_view name) const {
  for (std::size_t i = 0; i < attributes.size(); ++i) {
    if (attributes[i].name == name) return i;
  }
  return std::nullopt;
}

std::optional<OutcomeLabel> LogSchema::OutcomeOf(
    std::string_view activity) const {
  for (const auto& [terminal, label] : outcomes) {
    if (terminal == activity) return label;
  }
  return std::nullopt;
}

EventLog::EventLog(LogSchema schema, std::vector<Trace> traces)
    : schema_(std::move(schema)), traces_(std::move(traces)) {
  std::set<std::string> case_ids;
  for (const auto& trace : traces_) {
    if (trace.events.empty()) {
      throw InputError("trace '" + trace.case_id + "' has zero events");
    }
    if (!case_ids.insert(trace.case_id).second) {
      throw InputError("case id '" + trace.case_id + "' appears in two traces");
    }
    for (std::size_t i = 0; i < trace.events.size(); ++i) {
      const Event& event = trace.events[i];
      if (event.case_id != trace.case_id) {
        throw InputError("trace '" + trace.case_id +
                         "' contains an event of case '" + event.case_id + "'");
      }
      if (i > 0 && event.timestamp < trace.events[i - 1].timestamp) {
        throw InputError("trace '" + trace.case_id +
                         "' is not ordered by timestamp");
      }
      if (!schema_.ActivityIndex(event.activity)) {
        if (schema_.closed_alphabet) {
          throw InputError("unknown activity '" + event.activity +
                           "' in case '" + trace.case_id + "'");
        }
        schema_.activities.push_back(event.activity);
      }
      for (const auto& [name, value] : event.attributes) {
        auto index = schema_.AttributeIndex(name);
        if (!index || schema_.attributes[*index].scope != AttributeScope::kEvent) {
          throw InputError("undeclared event attribute '" + name + "'");
        }
        if (!ValueMatches(schema_.attributes[*index], value)) {
          throw InputError("event attribute '" + name + "' of case '" +
                           trace.case_id + "' does not match its schema type");
        }
      }
    }
    for (const auto& [name, value] : trace.case_attributes) {
      auto index = schema_.AttributeIndex(name);
      if (!index || schema_.attributes[*index].scope != AttributeScope::kCase) {
        throw InputError("undeclared case attribute '" + name + "'");
      }
      if (!ValueMatches(schema_.attributes[*index], value)) {
        throw InputError("case attribute '" + name + "' of case '" +
                         trace.case_id + "' does not match its schema type");
      }
    }
  }

  outcomes_.reserve(traces_.size());
  for (const auto& trace : traces_) {
    std::optional<OutcomeLabel> label;
    for (const auto& event : trace.events) {
      if (auto mapped = schema_.OutcomeOf(event.activity)) label = mapped;
    }
    if (!label) {
      throw InputError("trace '" + trace.case_id +
                       "' contains no terminal outcome activity");
    }
    outcomes_.push_back(*label);
  }

  stats_.resize(schema_.attributes.size());
  for (std::size_t a = 0; a < schema_.attributes.size(); ++a) {
    const AttributeSpec& spec = schema_.attributes[a];
    AttributeStats& stats = stats_[a];
    bool any = false;
    std::set<std::string> observed;
    auto visit = [&](const AttrValue& value) {
      if (const auto* number = std::get_if<double>(&value)) {
        stats.min = any ? std::min(stats.min, *number) : *number;
        stats.max = any ? std::max(stats.max, *number) : *number;
        any = true;
      } else {
        observed.insert(std::get<std::string>(value));
      }
    };
    for (const auto& trace : traces_) {
      if (spec.scope == AttributeScope::kCase) {
        auto it = trace.case_attributes.find(spec.name);
        if (it != trace.case_attributes.end()) visit(it->second);
      } else {
        for (const auto& event : trace.events) {
          auto it = event.attributes.find(spec.name);
          if (it != event.attributes.end()) visit(it->second);
        }
      }
    }
    if (spec.type == AttributeType::kCategorical) {
      stats.levels = spec.levels.empty()
                         ? std::vector<std::string>(observed.begin(),
                                                    observed.end())
                         : spec.levels;
    }
  }
}

const Trace* EventLog::FindTrace(std::string_view case_id) const {
  for (const auto& trace : traces_) {
    if (trace.case_id == case_id) return &trace;
  }
  return nullptr;
}

const OutcomeLabel& EventLog::OutcomeOf(const Trace& trace) const {
  const auto index = static_cast<std::size_t>(&trace - traces_.data());
  if (index >= traces_.size()) {
    throw std::invalid_argument("trace does not belong to this log");
  }
  return outcomes_[index];
}

std::optional<Timestamp> ParseTimestamp(std::string_view text) {
  using namespace std::chrono;
  int year = 0;
  unsigned month = 0, day = 0;
  if (!ParseFixedInt(text, 0, 4, &year) || text.size() < 10 ||
      text[4] != '-' || !ParseFixedInt(text, 5, 2, &month) || text[7] != '-' ||
      !ParseFixedInt(text, 8, 2, &day)) {
    return std::nullopt;
  }
  const year_month_day date{std::chrono::year{year}, std::chrono::month{month},
                            std::chrono::day{day}};
  if (!date.ok()) return std::nullopt;
  milliseconds time_of_day{0};
  std::size_t pos = 10;
  if (pos < text.size() && (text[pos] == 'T' || text[pos] == ' ')) {
    int hh = 0, mm = 0, ss = 0;
    if (!ParseFixedInt(text, pos + 1, 2, &hh) || text.size() < pos + 9 ||
        text[pos + 3] != ':' || !ParseFixedInt(text, pos + 4, 2, &mm) ||
        text[pos + 6] != ':' || !ParseFixedInt(text, pos + 7, 2, &ss) ||
        hh > 23 || mm > 59 || ss > 60) {
      return std::nullopt;
    }
    time_of_day = hours{hh} + minutes{mm} + seconds{ss};
    pos += 9;
    if (pos < text.size() && text[pos] == '.') {
      ++pos;
      int millis = 0;
      int scale = 100;
      std::size_t digits = 0;
      while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') {
        millis += (text[pos] - '0') * scale;
        scale /= 10;
        ++pos;
        ++digits;
      }
      if (digits == 0) return std::nullopt;
      time_of_day += milliseconds{millis};
    }
    if (pos < text.size()) {
      if (text[pos] == 'Z') {
        ++pos;
      } else if (text[pos] == '+' || text[pos] == '-') {
        const int sign = text[pos] == '+' ? 1 : -1;
        int oh = 0, om = 0;
        if (!ParseFixedInt(text, pos + 1, 2, &oh)) return std::nullopt;
        pos += 3;
        if (pos < text.size() && text[pos] == ':') ++pos;
        if (!ParseFixedInt(text, pos, 2, &om)) return std::nullopt;
        pos += 2;
        time_of_day -= sign * (hours{oh} + minutes{om});
      }
    }
  }
  if (pos != text.size()) return std::nullopt;
  return Timestamp{sys_days{date}} + time_of_day;
}

std::string FormatTimestamp(Timestamp ts) {
  using namespace std::chrono;
  const auto day = floor<days>(ts);
  const year_month_day date{day};
  const auto since_midnight = ts - day;
  const auto hh = duration_cast<hours>(since_midnight).count();
  const auto mm = duration_cast<minutes>(since_midnight).count() % 60;
  const auto ss = duration_cast<seconds>(since_midnight).count() % 60;
  const auto ms = since_midnight.count() % 1000;
  char buffer[40];
  int n = std::snprintf(buffer, sizeof(buffer), "%04d-%02u-%02uT%02d:%02d:%02d",
                        static_cast<int>(date.year()),
                        static_cast<unsigned>(date.month()),
                        static_cast<unsigned>(date.day()), static_cast<int>(hh),
                        static_cast<int>(mm), static_cast<int>(ss));
  if (ms != 0) {
    n += std::snprintf(buffer + n, sizeof(buffer) - n, ".%03d",
                       static_cast<int>(ms));
  }
  std::snprintf(buffer + n, sizeof(buffer) - n, "Z");
  return buffer;
}

std::string AttrValueToString(const AttrValue& value) {
  if (const auto* text = std::get_if<std::string>(&value)) return *text;
  char buffer[64];
  auto [ptr, ec] =
      std::to_chars(buffer, buffer + sizeof(buffer), std::get<double>(value));
  return std::string(buffer, ptr);
}

EventLog ParseLog(std::istream& source, const LogSchema& schema) {
  enum class Role { kEventAttr, kCaseAttr };
  struct ColumnBinding {
    Role role;
    std::size_t attribute;
  };

  std::string line;
  std::size_t line_number = 0;
  std::vector<ColumnBinding> bindings;
  std::size_t expected_fields = 0;

  // Header.
  while (std::getline(source, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto header = SplitCsvLine(line);
    if (!header || header->size() < 3 || (*header)[0] != "case_id" ||
        (*header)[1] != "activity" || (*header)[2] != "timestamp") {
      throw ParseError(
          "header must start with case_id,activity,timestamp", line_number);
    }
    expected_fields = header->size();
    std::set<std::string> seen;
    for (std::size_t c = 3; c < header->size(); ++c) {
      const std::string& column = (*header)[c];
      if (!seen.insert(column).second) {
        throw ParseError("duplicate column '" + column + "'", line_number);
      }
      std::string_view name = column;
      Role role;
      if (name.starts_with(kEventPrefix)) {
        role = Role::kEventAttr;
        name.remove_prefix(kEventPrefix.size());
      } else if (name.starts_with(kCasePrefix)) {
        role = Role::kCaseAttr;
        name.remove_prefix(kCasePrefix.size());
      } else {
        throw ParseError("column '" + column +
                             "' must be prefixed with ev_ or case_",
                         line_number);
      }
      auto index = schema.AttributeIndex(name);
      const auto scope =
          role == Role::kEventAttr ? AttributeScope::kEvent : AttributeScope::kCase;
      if (!index || schema.attributes[*index].scope != scope) {
        throw ParseError("column '" + column + "' is not declared in the schema",
                         line_number);
      }
      bindings.push_back({role, *index});
    }
    break;
  }

  std::vector<Trace> traces;
  std::unordered_map<std::string, std::size_t> trace_index;

  while (std::getline(source, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = SplitCsvLine(line);
    if (!fields) throw ParseError("malformed quoting", line_number);
    if (fields->size() != expected_fields) {
      throw ParseError("expected " + std::to_string(expected_fields) +
                           " fields, found " + std::to_string(fields->size()),
                       line_number);
    }
    Event event;
    event.case_id = (*fields)[0];
    event.activity = (*fields)[1];
    if (event.case_id.empty()) throw ParseError("empty case_id", line_number);
    if (event.activity.empty()) throw ParseError("empty activity", line_number);
    if (schema.closed_alphabet && !schema.ActivityIndex(event.activity)) {
      throw ParseError("unknown activity '" + event.activity + "'", line_number);
    }
    auto ts = ParseTimestamp((*fields)[2]);
    if (!ts) {
      throw ParseError("invalid timestamp '" + (*fields)[2] + "'", line_number);
    }
    event.timestamp = *ts;

    auto [it, inserted] = trace_index.try_emplace(event.case_id, traces.size());
    if (inserted) {
      traces.emplace_back();
      traces.back().case_id = event.case_id;
    }
    Trace& trace = traces[it->second];

    for (std::size_t c = 0; c < bindings.size(); ++c) {
      const std::string& cell = (*fields)[c + 3];
      if (cell.empty()) continue;
      const AttributeSpec& spec = schema.attributes[bindings[c].attribute];
      AttrValue value;
      if (spec.type == AttributeType::kNumeric) {
        auto number = ParseNumber(cell);
        if (!number) {
          throw ParseError("attribute '" + spec.name + "' expects a number, got '" +
                               cell + "'",
                           line_number);
        }
        value = *number;
      } else {
        value = cell;
        if (!ValueMatches(spec, value)) {
          throw ParseError("attribute '" + spec.name + "' has undeclared level '" +
                               cell + "'",
                           line_number);
        }
      }
      if (bindings[c].role == Role::kEventAttr) {
        event.attributes.emplace(spec.name, std::move(value));
      } else {
        auto [existing, fresh] =
            trace.case_attributes.try_emplace(spec.name, value);
        if (!fresh && existing->second != value) {
          throw ParseError("case attribute '" + spec.name +
                               "' changes value within case '" + trace.case_id +
                               "'",
                           line_number);
        }
      }
    }
    trace.events.push_back(std::move(event));
  }

  for (auto& trace : traces) {
    std::stable_sort(trace.events.begin(), trace.events.end(),
                     [](const Event& a, const Event& b) {
                       return a.timestamp < b.timestamp;
                     });
  }
  return EventLog(schema, std::move(traces));
}

EventLog LoadLog(const std::filesystem::path& path, const LogSchema& schema) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open log file " + path.string());
  return ParseLog(in, schema);
}

void WriteLogCsv(const EventLog& log, std::ostream& out) {
  const auto& attributes = log.schema().attributes;
  out << "case_id,activity,timestamp";
  for (const auto& spec : attributes) {
    if (spec.scope == AttributeScope::kEvent) out << ",ev_" << spec.name;
  }
  for (const auto& spec : attributes) {
    if (spec.scope == AttributeScope::kCase) out << ",case_" << spec.name;
  }
  out << '\n';
  auto write_cell = [&](const std::map<std::string, AttrValue>& values,
                        const std::string& name) {
    out << ',';
    auto it = values.find(name);
    if (it != values.end()) WriteCsvField(out, AttrValueToString(it->second));
  };
  for (const auto& trace : log.traces()) {
    for (const auto& event : trace.events) {
      WriteCsvField(out, event.case_id);
      out << ',';
      WriteCsvField(out, event.activity);
      out << ',' << FormatTimestamp(event.timestamp);
      for (const auto& spec : attributes) {
        if (spec.scope == AttributeScope::kEvent) {
          write_cell(event.attributes, spec.name);
        }
      }
      for (const auto& spec : attributes) {
        if (spec.scope == AttributeScope::kCase) {
          write_cell(trace.case_attributes, spec.name);
        }
      }
      out << '\n';
    }
  }
}

Prefix TakePrefix(const Trace& trace, std::size_t k) {
  if (k == 0 || k >= trace.size()) {
    throw InputError("prefix length " + std::to_string(k) + " out of range for case '" +
                     trace.case_id + "': must satisfy 0 < k < " +
                     std::to_string(trace.size()));
  }
  return Prefix{trace.case_id,
                std::vector<Event>(trace.events.begin(),
                                   trace.events.begin() + static_cast<long>(k)),
                trace.case_attributes};
}

Prefix TakePrefix(const Prefix& prefix, std::size_t k) {
  if (k == 0 || k >= prefix.size()) {
    throw InputError("prefix length " + std::to_string(k) +
                     " out of range: must satisfy 0 < k < " +
                     std::to_string(prefix.size()));
  }
  return Prefix{prefix.case_id,
                std::vector<Event>(prefix.events.begin(),
                                   prefix.events.begin() + static_cast<long>(k)),
                prefix.case_attributes};
}

}  // namespace procf
