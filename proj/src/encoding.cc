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

#include "procf/encoding.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <spdlog/spdlog.h>

#include "procf/errors.h"
#include "procf/levenshtein.h"

namespace procf {

ControlFlowGene::ControlFlowGene(std::vector<ActivityId> sequence,
                                 std::size_t alphabet_size)
    : sequence_(std::move(sequence)), frequencies_(alphabet_size, 0) {
  for (ActivityId activity : sequence_) {
    if (activity < 0 || static_cast<std::size_t>(activity) >= alphabet_size) {
      throw std::out_of_range("activity id outside the alphabet");
    }
    ++frequencies_[static_cast<std::size_t>(activity)];
  }
}

EncodedInstance Encode(const Prefix& prefix, const LogSchema& schema) {
  std::vector<ActivityId> sequence;
  sequence.reserve(prefix.events.size());
  for (const auto& event : prefix.events) {
    auto id = schema.ActivityIndex(event.activity);
    if (!id) {
      throw InputError("prefix of case '" + prefix.case_id +
                       "' contains unknown activity '" + event.activity + "'");
    }
    sequence.push_back(static_cast<ActivityId>(*id));
  }

  EncodedInstance instance;
  instance.control_flow =
      ControlFlowGene(std::move(sequence), schema.activities.size());
  instance.provenance = Provenance::kReal;
  instance.attr_genes.reserve(schema.attributes.size());

  for (const auto& spec : schema.attributes) {
    AttrGene gene{spec.name, spec.default_value, spec.scope, true};
    const AttrValue* found = nullptr;
    if (spec.scope == AttributeScope::kEvent) {
      for (const auto& event : prefix.events) {
        auto it = event.attributes.find(spec.name);
        if (it != event.attributes.end()) found = &it->second;
      }
    } else {
      auto it = prefix.case_attributes.find(spec.name);
      if (it != prefix.case_attributes.end()) found = &it->second;
    }
    if (found != nullptr) {
      const bool numeric = std::holds_alternative<double>(*found);
      if (numeric != (spec.type == AttributeType::kNumeric)) {
        throw InputError("attribute '" + spec.name + "' of case '" +
                         prefix.case_id + "' violates its schema type");
      }
      gene.value = *found;
      gene.absent = false;
    }
    instance.attr_genes.push_back(std::move(gene));
  }
  return instance;
}

FeatureLayout::FeatureLayout(LogSchema schema, std::vector<AttributeStats> stats)
    : schema_(std::move(schema)), stats_(std::move(stats)) {
  if (stats_.size() != schema_.attributes.size()) {
    throw std::invalid_argument("stats must align with schema attributes");
  }
  for (std::size_t a = 0; a < schema_.activities.size(); ++a) {
    const std::string& activity = schema_.activities[a];
    columns_.push_back(Column{"count(" + activity + ")", ColumnKind::kFrequency,
                              std::string(kControlFlowAttribute), activity, a,
                              0.0, 1.0});
  }
  for (std::size_t i = 0; i < schema_.attributes.size(); ++i) {
    const AttributeSpec& spec = schema_.attributes[i];
    if (spec.type == AttributeType::kNumeric) {
      columns_.push_back(Column{spec.name, ColumnKind::kNumeric, spec.name, "",
                                i, stats_[i].min, stats_[i].Range()});
    } else {
      for (const auto& level : stats_[i].levels) {
        columns_.push_back(Column{spec.name + "=" + level, ColumnKind::kOneHot,
                                  spec.name, level, i, 0.0, 1.0});
      }
    }
  }
}

FeatureLayout::FeatureLayout(std::vector<Column> columns)
    : columns_(std::move(columns)) {}

FeatureLayout FeatureLayout::FromLog(const EventLog& log) {
  return FeatureLayout(log.schema(), std::vector<AttributeStats>(
                                         log.stats().begin(), log.stats().end()));
}

std::vector<std::string> FeatureLayout::ColumnNames() const {
  std::vector<std::string> names;
  names.reserve(columns_.size());
  for (const auto& column : columns_) names.push_back(column.name);
  return names;
}

std::optional<std::size_t> FeatureLayout::ColumnIndex(std::string_view name) const {
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (columns_[i].name == name) return i;
  }
  return std::nullopt;
}

std::vector<std::string> FeatureLayout::SourceAttributes() const {
  std::vector<std::string> names;
  for (const auto& column : columns_) {
    if (std::find(names.begin(), names.end(), column.attribute) == names.end()) {
      names.push_back(column.attribute);
    }
  }
  return names;
}

std::vector<std::size_t> FeatureLayout::OneHotColumns(
    std::string_view attribute) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (columns_[i].kind == ColumnKind::kOneHot &&
        columns_[i].attribute == attribute) {
      out.push_back(i);
    }
  }
  return out;
}

FeatureMatrix::FeatureMatrix(std::shared_ptr<const FeatureLayout> layout)
    : layout_(std::move(layout)) {
  if (!layout_) throw std::invalid_argument("FeatureMatrix needs a layout");
}

void FeatureMatrix::AppendRow(std::span<const double> values) {
  if (values.size() != cols()) {
    throw std::invalid_argument("row width does not match the layout");
  }
  data_.insert(data_.end(), values.begin(), values.end());
  ++rows_;
}

FeatureMatrix FeatureMatrix::Select(std::span<const std::size_t> rows) const {
  FeatureMatrix out(layout_);
  out.data_.reserve(rows.size() * cols());
  for (std::size_t r : rows) out.AppendRow(row(r));
  return out;
}

std::vector<double> FlattenOne(const EncodedInstance& instance,
                               const FeatureLayout& layout) {
  const LogSchema& schema = layout.schema();
  if (instance.attr_genes.size() != schema.attributes.size()) {
    throw std::invalid_argument("instance does not match the layout schema");
  }
  std::vector<double> row(layout.size(), 0.0);
  const auto frequencies = instance.control_flow.frequencies();
  std::size_t c = 0;
  for (; c < layout.size() && layout.column(c).kind == ColumnKind::kFrequency;
       ++c) {
    const std::size_t activity = layout.column(c).source;
    row[c] = activity < frequencies.size() ? frequencies[activity] : 0.0;
  }
  for (std::size_t i = 0; i < schema.attributes.size(); ++i) {
    const AttrGene& gene = instance.attr_genes[i];
    const AttributeStats& stats = layout.stats()[i];
    if (schema.attributes[i].type == AttributeType::kNumeric) {
      const double raw = std::get<double>(gene.value);
      row[c++] = std::clamp((raw - stats.min) / stats.Range(), 0.0, 1.0);
    } else {
      const auto& level = std::get<std::string>(gene.value);
      bool matched = false;
      for (const auto& known : stats.levels) {
        if (known == level) {
          row[c] = 1.0;
          matched = true;
        }
        ++c;
      }
      if (!matched && !level.empty()) {
        spdlog::warn("unknown level '{}' of attribute '{}' encoded as all zeros",
                     level, gene.name);
      }
    }
  }
  return row;
}

FeatureMatrix Flatten(std::span<const EncodedInstance> instances,
                      std::shared_ptr<const FeatureLayout> layout) {
  FeatureMatrix matrix(std::move(layout));
  for (const auto& instance : instances) {
    matrix.AppendRow(FlattenOne(instance, matrix.layout()));
  }
  return matrix;
}

double Distance(const EncodedInstance& x, const EncodedInstance& z,
                std::span<const AttributeStats> stats) {
  const auto xs = x.control_flow.sequence();
  const auto zs = z.control_flow.sequence();
  const double longest =
      static_cast<double>(std::max<std::size_t>({xs.size(), zs.size(), 1}));
  double total = static_cast<double>(Levenshtein(xs, zs)) / longest;

  const std::size_t n = std::min(x.attr_genes.size(), z.attr_genes.size());
  for (std::size_t i = 0; i < n; ++i) {
    const AttrValue& a = x.attr_genes[i].value;
    const AttrValue& b = z.attr_genes[i].value;
    const auto* na = std::get_if<double>(&a);
    const auto* nb = std::get_if<double>(&b);
    if (na != nullptr && nb != nullptr) {
      const double range = i < stats.size() ? stats[i].Range() : 1.0;
      total += std::min(1.0, std::abs(*na - *nb) / range);
    } else {
      total += a == b ? 0.0 : 1.0;
    }
  }
  return total / static_cast<double>(1 + n);
}

std::vector<std::string> ActivityNames(const ControlFlowGene& gene,
                                       const LogSchema& schema) {
  std::vector<std::string> names;
  for (ActivityId id : gene.sequence()) {
    names.push_back(schema.activities.at(static_cast<std::size_t>(id)));
  }
  return names;
}

}  // namespace procf
