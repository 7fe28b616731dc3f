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

#include "vmrtk/embedding_table.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

namespace vmrtk {

namespace {

using nlohmann::json;

std::uint32_t float_to_le_bits(float f) {
  std::uint32_t u;
  std::memcpy(&u, &f, sizeof u);
  return u;
}

float le_bits_to_float(std::uint32_t u) {
  float f;
  std::memcpy(&f, &u, sizeof f);
  return f;
}

}  // namespace

TableFormat guess_table_format(const std::string& path) {
  if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0)
    return TableFormat::csv;
  return TableFormat::binary;
}

EmbeddingTable::EmbeddingTable(std::vector<std::string> labels,
                               std::size_t dim, std::vector<double> row_major)
    : labels_(std::move(labels)), dim_(dim), values_(std::move(row_major)) {
  if (dim_ == 0) fail(ErrorCode::invalid_argument, "table dim must be >= 1");
  if (values_.size() != labels_.size() * dim_)
    fail(ErrorCode::invalid_argument,
         "table has " + std::to_string(labels_.size()) + " labels but " +
             std::to_string(values_.size()) + " values for dim " +
             std::to_string(dim_));
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (!seen.insert(labels_[i]).second)
      fail(ErrorCode::invalid_argument,
           "duplicate label \"" + labels_[i] + "\" at row " + std::to_string(i));
  }
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    for (std::size_t j = 0; j < dim_; ++j) {
      if (!std::isfinite(values_[i * dim_ + j]))
        fail(ErrorCode::invalid_argument,
             "non-finite value at row " + std::to_string(i) + " (label \"" +
                 labels_[i] + "\"), column " + std::to_string(j));
    }
  }
}

std::optional<std::size_t> EmbeddingTable::find(const std::string& label) const {
  auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - labels_.begin());
}

namespace {

EmbeddingTable load_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io, "cannot open " + path);
  std::string header;
  if (!std::getline(in, header))
    fail(ErrorCode::parse, path + ": missing header line");
  json h = json::parse(header, nullptr, false);
  if (h.is_discarded() || !h.is_object())
    fail(ErrorCode::parse, path + ": malformed header");
  if (!h.contains("version") || h["version"].get<int>() != 1)
    fail(ErrorCode::parse, path + ": unsupported version");
  if (!h.contains("count") || !h.contains("dim") || !h.contains("labels"))
    fail(ErrorCode::parse, path + ": header missing count/dim/labels");
  const auto count = h["count"].get<std::size_t>();
  const auto dim = h["dim"].get<std::size_t>();
  auto labels = h["labels"].get<std::vector<std::string>>();
  if (labels.size() != count)
    fail(ErrorCode::parse, path + ": header count " + std::to_string(count) +
                               " does not match " +
                               std::to_string(labels.size()) + " labels");

  std::vector<unsigned char> raw(count * dim * 4);
  in.read(reinterpret_cast<char*>(raw.data()),
          static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size())
    fail(ErrorCode::parse, path + ": truncated payload (expected " +
                               std::to_string(raw.size()) + " bytes)");

  std::vector<double> values(count * dim);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::uint32_t u = static_cast<std::uint32_t>(raw[4 * i]) |
                            (static_cast<std::uint32_t>(raw[4 * i + 1]) << 8) |
                            (static_cast<std::uint32_t>(raw[4 * i + 2]) << 16) |
                            (static_cast<std::uint32_t>(raw[4 * i + 3]) << 24);
    const float f = le_bits_to_float(u);
    if (!std::isfinite(f))
      fail(ErrorCode::parse, path + ": non-finite value at row " +
                                 std::to_string(i / dim) + ", column " +
                                 std::to_string(i % dim));
    values[i] = static_cast<double>(f);
  }
  return EmbeddingTable(std::move(labels), dim, std::move(values));
}

EmbeddingTable load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot open " + path);
  std::vector<std::string> labels;
  std::vector<double> values;
  std::size_t dim = 0;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t pos = 0;
    while (true) {
      const std::size_t comma = line.find(',', pos);
      cells.push_back(line.substr(pos, comma - pos));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    if (cells.size() < 2)
      fail(ErrorCode::parse,
           path + ": row " + std::to_string(row) + " has no values");
    if (dim == 0)
      dim = cells.size() - 1;
    else if (cells.size() - 1 != dim)
      fail(ErrorCode::parse, path + ": row " + std::to_string(row) + " has " +
                                 std::to_string(cells.size() - 1) +
                                 " values, expected " + std::to_string(dim));
    labels.push_back(cells[0]);
    for (std::size_t j = 1; j < cells.size(); ++j) {
      try {
        std::size_t used = 0;
        const double v = std::stod(cells[j], &used);
        if (used != cells[j].size()) throw std::invalid_argument(cells[j]);
        values.push_back(v);
      } catch (const std::exception&) {
        fail(ErrorCode::parse, path + ": row " + std::to_string(row) +
                                   ": cannot parse \"" + cells[j] + "\"");
      }
    }
    ++row;
  }
  if (row == 0) fail(ErrorCode::parse, path + ": empty csv table");
  return EmbeddingTable(std::move(labels), dim, std::move(values));
}

}  // namespace

EmbeddingTable load_table(const std::string& path, TableFormat format) {
  return format == TableFormat::binary ? load_binary(path) : load_csv(path);
}

void save_table(const EmbeddingTable& table, const std::string& path,
                TableFormat format) {
  std::ofstream out(path, format == TableFormat::binary
                              ? std::ios::binary | std::ios::trunc
                              : std::ios::trunc);
  if (!out) fail(ErrorCode::io, "cannot write " + path);
  if (format == TableFormat::binary) {
    json h;
    h["version"] = 1;
    h["count"] = table.count();
    h["dim"] = table.dim();
    h["labels"] = table.labels();
    out << h.dump() << "\n";
    std::vector<unsigned char> raw;
    raw.reserve(table.values().size() * 4);
    for (double v : table.values()) {
      const std::uint32_t u = float_to_le_bits(static_cast<float>(v));
      raw.push_back(static_cast<unsigned char>(u & 0xff));
      raw.push_back(static_cast<unsigned char>((u >> 8) & 0xff));
      raw.push_back(static_cast<unsigned char>((u >> 16) & 0xff));
      raw.push_back(static_cast<unsigned char>((u >> 24) & 0xff));
    }
    out.write(reinterpret_cast<const char*>(raw.data()),
              static_cast<std::streamsize>(raw.size()));
  } else {
    std::ostringstream buf;
    buf.precision(17);
    for (std::size_t i = 0; i < table.count(); ++i) {
      const std::string& label = table.labels()[i];
      if (label.find(',') != std::string::npos ||
          label.find('\n') != std::string::npos)
        fail(ErrorCode::invalid_argument,
             "label \"" + label + "\" cannot be stored in csv");
      buf << label;
      for (std::size_t j = 0; j < table.dim(); ++j)
        buf << ',' << table.row(i)[j];
      buf << '\n';
    }
    out << buf.str();
  }
  if (!out) fail(ErrorCode::io, "short write to " + path);
}

EmbeddingTable normalize(const EmbeddingTable& table) {
  std::vector<double> values(table.values());
  const std::size_t d = table.dim();
  for (std::size_t i = 0; i < table.count(); ++i) {
    const double n = l2_norm(values.data() + i * d, d);
    if (n <= 0.0)
      fail(ErrorCode::numeric,
           "zero-vector row for label \"" + table.labels()[i] + "\"");
    for (std::size_t j = 0; j < d; ++j) values[i * d + j] /= n;
  }
  return EmbeddingTable(table.labels(), d, std::move(values));
}

Matrix similarity_matrix(const EmbeddingTable& table) {
  const std::size_t n = table.count(), d = table.dim();
  for (std::size_t i = 0; i < n; ++i) {
    const double norm = l2_norm(table.row(i), d);
    if (std::abs(norm - 1.0) > 1e-6)
      fail(ErrorCode::invalid_argument,
           "similarity_matrix requires a normalized table; row \"" +
               table.labels()[i] + "\" has norm " + std::to_string(norm));
  }
  Matrix sim(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const double s =
          std::clamp(dot(table.row(i), table.row(j), d), -1.0, 1.0);
      sim.at(i, j) = s;
      sim.at(j, i) = s;
    }
  }
  return sim;
}

double cosine(const EmbeddingTable& table, std::size_t i, std::size_t j) {
  const std::size_t d = table.dim();
  const double ni = l2_norm(table.row(i), d);
  const double nj = l2_norm(table.row(j), d);
  if (ni <= 0.0 || nj <= 0.0)
    fail(ErrorCode::numeric,
         "cosine undefined for zero-vector row \"" +
             table.labels()[ni <= 0.0 ? i : j] + "\"");
  return std::clamp(dot(table.row(i), table.row(j), d) / (ni * nj), -1.0, 1.0);
}

}  // namespace vmrtk
