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

// Gene-structured encoding of trace prefixes.
//
// An EncodedInstance is the vector of genes [control_flow, attr_1, ..., attr_n].
// The control-flow gene bundles the activity sequence with its frequency
// vector so that genetic operators can only ever move or replace it whole.
// FeatureMatrix is the flat numeric view consumed by black boxes and by the
// surrogate tree:
//
//   count(<activity>) ...   raw occurrence counts, alphabet order
//   <numeric attr>          min-max scaled by the log range, clamped to [0,1]
//   <categorical>=<level>   one-hot, one column per level

#ifndef PROCF_ENCODING_H_
#define PROCF_ENCODING_H_

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "procf/event_log.h"

namespace procf {

using ActivityId = int;

// Attribute name that frequency columns are attributed to.
inline constexpr std::string_view kControlFlowAttribute = "control_flow";

class ControlFlowGene {
 public:
  ControlFlowGene() = default;
  ControlFlowGene(std::vector<ActivityId> sequence, std::size_t alphabet_size);

  std::span<const ActivityId> sequence() const { return sequence_; }
  std::span<const int> frequencies() const { return frequencies_; }

  bool operator==(const ControlFlowGene&) const = default;
  auto operator<=>(const ControlFlowGene&) const = default;

 private:
  std::vector<ActivityId> sequence_;
  std::vector<int> frequencies_;
};

enum class Provenance { kReal, kSynthetic };

struct AttrGene {
  std::string name;
  AttrValue value;
  AttributeScope scope = AttributeScope::kEvent;
  // Event attribute never observed in the prefix; value holds the default.
  bool absent = false;

  // Genes compare by name and value only.
  friend bool operator==(const AttrGene& a, const AttrGene& b) {
    return a.name == b.name && a.value == b.value;
  }
};

struct EncodedInstance {
  ControlFlowGene control_flow;
  std::vector<AttrGene> attr_genes;
  Provenance provenance = Provenance::kReal;

  std::size_t gene_count() const { return 1 + attr_genes.size(); }

  // Gene-wise equality; provenance is ignored.
  friend bool operator==(const EncodedInstance& a, const EncodedInstance& b) {
    return a.control_flow == b.control_flow && a.attr_genes == b.attr_genes;
  }
};

// Encodes a prefix: frequency histogram, last-state event attributes and case
// attributes. Throws InputError on type violations or unknown activities.
EncodedInstance Encode(const Prefix& prefix, const LogSchema& schema);

enum class ColumnKind { kFrequency, kNumeric, kOneHot };

struct Column {
  std::string name;
  ColumnKind kind = ColumnKind::kNumeric;
  // Source attribute; kControlFlowAttribute for frequency columns.
  std::string attribute;
  // One-hot level, or the activity for frequency columns.
  std::string level;
  // Attribute index for numeric/one-hot columns, activity id for frequency.
  std::size_t source = 0;
  // Column value v corresponds to raw value raw_min + v * raw_range.
  double raw_min = 0.0;
  double raw_range = 1.0;

  double ToRaw(double value) const { return raw_min + value * raw_range; }
  bool operator==(const Column&) const = default;
};

// Column layout shared by every instance of a run.
class FeatureLayout {
 public:
  FeatureLayout(LogSchema schema, std::vector<AttributeStats> stats);
  static FeatureLayout FromLog(const EventLog& log);
  // Bare layout for matrices that do not come from a log.
  explicit FeatureLayout(std::vector<Column> columns);

  std::span<const Column> columns() const { return columns_; }
  const Column& column(std::size_t i) const { return columns_[i]; }
  std::size_t size() const { return columns_.size(); }
  std::vector<std::string> ColumnNames() const;
  std::optional<std::size_t> ColumnIndex(std::string_view name) const;

  const LogSchema& schema() const { return schema_; }
  std::span<const AttributeStats> stats() const { return stats_; }

  // Source attributes in column order, each once: control_flow first if any
  // frequency column exists, then schema attributes.
  std::vector<std::string> SourceAttributes() const;
  // One-hot columns of a categorical attribute, in level order.
  std::vector<std::size_t> OneHotColumns(std::string_view attribute) const;

  bool operator==(const FeatureLayout&) const = default;

 private:
  LogSchema schema_;
  std::vector<AttributeStats> stats_;
  std::vector<Column> columns_;
};

// Dense row-major matrix whose columns follow a FeatureLayout.
class FeatureMatrix {
 public:
  explicit FeatureMatrix(std::shared_ptr<const FeatureLayout> layout);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return layout_->size(); }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols(), cols()};
  }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }
  void AppendRow(std::span<const double> values);
  // Matrix made of the given rows, in order.
  FeatureMatrix Select(std::span<const std::size_t> rows) const;

  const FeatureLayout& layout() const { return *layout_; }
  const std::shared_ptr<const FeatureLayout>& layout_ptr() const {
    return layout_;
  }

 private:
  std::shared_ptr<const FeatureLayout> layout_;
  std::vector<double> data_;
  std::size_t rows_ = 0;
};

// Flattens instances with the layout's schema and ranges. Unknown categorical
// levels map to an all-zero one-hot block and log a warning.
FeatureMatrix Flatten(std::span<const EncodedInstance> instances,
                      std::shared_ptr<const FeatureLayout> layout);
std::vector<double> FlattenOne(const EncodedInstance& instance,
                               const FeatureLayout& layout);

// Mixed distance in [0,1]: normalized Levenshtein on the control flow, simple
// matching on categoricals, range-normalized absolute difference on numerics,
// each gene weighted equally. `stats` is aligned with the attribute genes.
double Distance(const EncodedInstance& x, const EncodedInstance& z,
                std::span<const AttributeStats> stats);

// Activity names of a control-flow gene.
std::vector<std::string> ActivityNames(const ControlFlowGene& gene,
                                       const LogSchema& schema);

}  // namespace procf

#endif  // PROCF_ENCODING_H_
