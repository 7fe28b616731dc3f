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

#include <memory>
#include <string>
#include <vector>

#include "vmrtk/embedding_table.hpp"

namespace vmrtk {

/// Embedding-to-embedding transform. Implementations must hand back a table
/// with identical labels, order, and dimension, and finite values; callers
/// (the refine study) verify this and treat violations as contract errors.
class Refiner {
 public:
  virtual ~Refiner() = default;
  virtual std::string name() const = 0;
  virtual EmbeddingTable refine(const EmbeddingTable& in) = 0;
};

class IdentityRefiner : public Refiner {
 public:
  std::string name() const override { return "identity"; }
  EmbeddingTable refine(const EmbeddingTable& in) override { return in; }
};

/// One scaled-dot-product self-attention layer over table rows (rows are the
/// tokens) with a residual connection: Y = X + softmax(Q Kᵀ / sqrt(H)) V Wo.
struct AttentionLayer {
  Matrix wq;  // D x H
  Matrix wk;  // D x H
  Matrix wv;  // D x H
  Matrix wo;  // H x D
};

EmbeddingTable toy_attention_refine(const EmbeddingTable& table,
                                    const AttentionLayer& weights);

/// Stack of attention layers applied in order; use_layers < layer count runs
/// only the leading subset (a stand-in for picking intermediate depths of a
/// larger encoder).
class ToyAttentionRefiner : public Refiner {
 public:
  ToyAttentionRefiner(std::vector<AttentionLayer> layers,
                      std::size_t use_layers);
  static ToyAttentionRefiner from_json_file(const std::string& path);
  static ToyAttentionRefiner random(std::size_t dim, std::size_t head_dim,
                                    std::size_t n_layers, std::uint64_t seed);

  std::string name() const override { return "toy-attention"; }
  EmbeddingTable refine(const EmbeddingTable& in) override;
  std::size_t layer_count() const { return layers_.size(); }

 private:
  std::vector<AttentionLayer> layers_;
  std::size_t use_layers_;
};

/// Runs `<command> <input.emb> <output.emb>` through the shell in a scratch
/// directory and reads the result back. Non-zero exit or timeout is an error;
/// contract validation stays with the caller.
class ExternalRefiner : public Refiner {
 public:
  explicit ExternalRefiner(std::string command, double timeout_seconds = 300.0);

  std::string name() const override { return "external:" + command_; }
  EmbeddingTable refine(const EmbeddingTable& in) override;

 private:
  std::string command_;
  double timeout_seconds_;
};

/// Builds a refiner from a CLI-style spec: "identity", "toy:<weights.json>",
/// "toy-random:<seed>[:<layers>]", or "external:<command>".
std::unique_ptr<Refiner> make_refiner(const std::string& spec);

}  // namespace vmrtk
