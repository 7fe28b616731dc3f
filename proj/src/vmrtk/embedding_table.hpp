// Copyright 2026 The vmrtk Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Labeled N x D embedding tables and their on-disk formats. The `.emb`
// binary format is the wire format of the external-refiner protocol:
//
//   one JSON header line  {"version":1,"count":N,"dim":D,"labels":[...]}\n
//   followed by N*D little-endian IEEE-754 float32 values, row-major.
//
// The CSV format is `label,v0,...,v{D-1}` with no header row (UTF-8).
// In-memory arithmetic is always double precision; files quantize to
// float32, so binary round-trips are bit-exact only for float32-clean rows.

#include <optional>
#include <string>
#include <vector>

#include "vmrtk/common.hpp"

namespace vmrtk {

enum class TableFormat { binary, csv };

/// Infer a format from the file name (`.csv` -> csv, anything else binary).
TableFormat guess_table_format(const std::string& path);

class EmbeddingTable {
 public:
  EmbeddingTable() = default;

  /// Takes ownership of rows; validates label uniqueness, shape and
  /// finiteness (the full type invariant).
  EmbeddingTable(std::vector<std::string> labels, std::size_t dim,
                 std::vector<double> row_major);

  std::size_t count() const { return labels_.size(); }
  std::size_t dim() const { return dim_; }
  const std::vector<std::string>& labels() const { return labels_; }
  const std::vector<double>& values() const { return values_; }
  const double* row(std::size_t i) const { return values_.data() + i * dim_; }

  /// Index of a label, or nullopt when absent.
  std::optional<std::size_t> find(const std::string& label) const;

  bool same_layout(const EmbeddingTable& other) const {
    return dim_ == other.dim_ && labels_ == other.labels_;
  }

 private:
  std::vector<std::string> labels_;
  std::size_t dim_ = 0;
  std::vector<double> values_;  // row-major, count x dim
};

EmbeddingTable load_table(const std::string& path, TableFormat format);
void save_table(const EmbeddingTable& table, const std::string& path,
                TableFormat format);

/// Each row rescaled to unit L2 norm. A zero row is an error naming its label.
EmbeddingTable normalize(const EmbeddingTable& table);

/// N x N matrix of pairwise dot products. Requires rows already unit-norm
/// (within 1e-6); entries are clamped into [-1, 1].
Matrix similarity_matrix(const EmbeddingTable& table);

/// Cosine of two rows regardless of their norms; errors on zero rows.
double cosine(const EmbeddingTable& table, std::size_t i, std::size_t j);

}  // namespace vmrtk
