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

#include "vmrtk/refiner.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <limits>
#include <thread>

#include <json.hpp>

#include "vmrtk/rng.hpp"

namespace vmrtk {

namespace {

Matrix matmul(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = a.at(i, k);
      for (std::size_t j = 0; j < b.cols; ++j)
        out.at(i, j) += aik * b.at(k, j);
    }
  return out;
}

void check_layer(const AttentionLayer& w, std::size_t dim) {
  const std::size_t head = w.wq.cols;
  if (head < 1 || w.wq.rows != dim || w.wk.rows != dim || w.wv.rows != dim ||
      w.wk.cols != head || w.wv.cols != head || w.wo.rows != head ||
      w.wo.cols != dim)
    fail(ErrorCode::invalid_argument,
         "attention weight shapes do not fit a table of dim " +
             std::to_string(dim));
  for (const Matrix* m : {&w.wq, &w.wk, &w.wv, &w.wo})
    for (double v : m->data)
      if (!std::isfinite(v))
        fail(ErrorCode::invalid_argument, "non-finite attention weight");
}

}  // namespace

EmbeddingTable toy_attention_refine(const EmbeddingTable& table,
                                    const AttentionLayer& weights) {
  const std::size_t n = table.count(), d = table.dim();
  check_layer(weights, d);
  const std::size_t head = weights.wq.cols;

  Matrix x(n, d);
  std::copy(table.values().begin(), table.values().end(), x.data.begin());
  const Matrix q = matmul(x, weights.wq);
  const Matrix k = matmul(x, weights.wk);
  const Matrix v = matmul(x, weights.wv);

  const double scale = 1.0 / std::sqrt(static_cast<double>(head));
  Matrix attn(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      attn.at(i, j) = dot(q.row(i), k.row(j), head) * scale;
      mx = std::max(mx, attn.at(i, j));
    }
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      attn.at(i, j) = std::exp(attn.at(i, j) - mx);
      z += attn.at(i, j);
    }
    for (std::size_t j = 0; j < n; ++j) attn.at(i, j) /= z;
  }

  const Matrix mixed = matmul(matmul(attn, v), weights.wo);
  std::vector<double> out(n * d);
  for (std::size_t i = 0; i < n * d; ++i) out[i] = x.data[i] + mixed.data[i];
  return EmbeddingTable(table.labels(), d, std::move(out));
}

ToyAttentionRefiner::ToyAttentionRefiner(std::vector<AttentionLayer> layers,
                                         std::size_t use_layers)
    : layers_(std::move(layers)), use_layers_(use_layers) {
  if (layers_.empty())
    fail(ErrorCode::invalid_argument, "toy refiner needs at least one layer");
  if (use_layers_ < 1 || use_layers_ > layers_.size())
    fail(ErrorCode::invalid_argument,
         "use_layers must be in [1, layer count]");
}

EmbeddingTable ToyAttentionRefiner::refine(const EmbeddingTable& in) {
  EmbeddingTable cur = in;
  for (std::size_t l = 0; l < use_layers_; ++l)
    cur = toy_attention_refine(cur, layers_[l]);
  return cur;
}

namespace {

Matrix matrix_from_json(const nlohmann::json& j, const std::string& what) {
  if (!j.is_array() || j.empty() || !j[0].is_array())
    fail(ErrorCode::parse, what + " must be a non-empty 2-D array");
  Matrix m(j.size(), j[0].size());
  for (std::size_t r = 0; r < m.rows; ++r) {
    if (!j[r].is_array() || j[r].size() != m.cols)
      fail(ErrorCode::parse, what + " row " + std::to_string(r) +
                                 " has inconsistent length");
    for (std::size_t c = 0; c < m.cols; ++c) {
      if (!j[r][c].is_number())
        fail(ErrorCode::parse, what + " has a non-numeric entry");
      m.at(r, c) = j[r][c].get<double>();
    }
  }
  return m;
}

}  // namespace

ToyAttentionRefiner ToyAttentionRefiner::from_json_file(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot open attention weights: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::parse, "attention weights " + path + ": " + e.what());
  }
  if (!j.contains("layers") || !j["layers"].is_array() || j["layers"].empty())
    fail(ErrorCode::parse, "attention weights need a non-empty layers array");
  std::vector<AttentionLayer> layers;
  for (const auto& lj : j["layers"]) {
    AttentionLayer l;
    l.wq = matrix_from_json(lj.at("wq"), "wq");
    l.wk = matrix_from_json(lj.at("wk"), "wk");
    l.wv = matrix_from_json(lj.at("wv"), "wv");
    l.wo = matrix_from_json(lj.at("wo"), "wo");
    layers.push_back(std::move(l));
  }
  const std::size_t use_layers =
      j.contains("use_layers") ? j["use_layers"].get<std::size_t>()
                               : layers.size();
  return ToyAttentionRefiner(std::move(layers), use_layers);
}

ToyAttentionRefiner ToyAttentionRefiner::random(std::size_t dim,
                                                std::size_t head_dim,
                                                std::size_t n_layers,
                                                std::uint64_t seed) {
  if (dim < 1 || head_dim < 1 || n_layers < 1)
    fail(ErrorCode::invalid_argument, "toy refiner dims must be >= 1");
  std::vector<AttentionLayer> layers;
  const double in_scale = 1.0 / std::sqrt(static_cast<double>(dim));
  const double out_scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
  for (std::size_t l = 0; l < n_layers; ++l) {
    AttentionLayer layer;
    Matrix* mats[4] = {&layer.wq, &layer.wk, &layer.wv, &layer.wo};
    for (int m = 0; m < 4; ++m) {
      const bool is_out = (m == 3);
      *mats[m] = Matrix(is_out ? head_dim : dim, is_out ? dim : head_dim);
      Rng rng(derive_seed(seed, l * 4 + static_cast<std::size_t>(m)));
      const double scale = is_out ? out_scale : in_scale;
      for (double& v : mats[m]->data) v = scale * rng.normal();
    }
    layers.push_back(std::move(layer));
  }
  return ToyAttentionRefiner(std::move(layers), n_layers);
}

ExternalRefiner::ExternalRefiner(std::string command, double timeout_seconds)
    : command_(std::move(command)), timeout_seconds_(timeout_seconds) {
  if (command_.empty())
    fail(ErrorCode::invalid_argument, "external refiner needs a command");
  if (!(timeout_seconds_ > 0.0))
    fail(ErrorCode::invalid_argument, "external refiner timeout must be > 0");
}

namespace {

std::filesystem::path make_scratch_dir() {
  static std::atomic<std::uint64_t> counter{0};
  const auto base = std::filesystem::temp_directory_path();
  const std::uint64_t tag =
      splitmix64((static_cast<std::uint64_t>(::getpid()) << 20) ^
                 counter.fetch_add(1));
  const auto dir = base / ("vmrtk-refine-" + std::to_string(tag));
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec)
    fail(ErrorCode::io, "cannot create scratch directory " + dir.string());
  return dir;
}

void run_shell_with_timeout(const std::string& command, double timeout_seconds) {
  const pid_t pid = ::fork();
  if (pid < 0) fail(ErrorCode::internal, "fork failed");
  if (pid == 0) {
    ::execl("/bin/sh", "sh", "-c", command.c_str(),
            static_cast<char*>(nullptr));
    ::_exit(127);
  }
  const auto deadline = std::chrono::steady_clock::now() +
                        std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                            std::chrono::duration<double>(timeout_seconds));
  int status = 0;
  while (true) {
    const pid_t r = ::waitpid(pid, &status, WNOHANG);
    if (r == pid) break;
    if (r < 0) fail(ErrorCode::internal, "waitpid failed");
    if (std::chrono::steady_clock::now() >= deadline) {
      ::kill(pid, SIGKILL);
      ::waitpid(pid, &status, 0);
      fail(ErrorCode::contract,
           "external refiner timed out after " +
               std::to_string(timeout_seconds) + " s: " + command);
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
  }
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0)
    fail(ErrorCode::contract,
         "external refiner exited with status " +
             std::to_string(WIFEXITED(status) ? WEXITSTATUS(status) : -1) +
             ": " + command);
}

}  // namespace

EmbeddingTable ExternalRefiner::refine(const EmbeddingTable& in) {
  const auto dir = make_scratch_dir();
  const auto input = dir / "input.emb";
  const auto output = dir / "output.emb";
  EmbeddingTable result;
  try {
    save_table(in, input.string(), TableFormat::binary);
    run_shell_with_timeout(
        command_ + " '" + input.string() + "' '" + output.string() + "'",
        timeout_seconds_);
    if (!std::filesystem::exists(output))
      fail(ErrorCode::contract,
           "external refiner produced no output file: " + command_);
    result = load_table(output.string(), TableFormat::binary);
  } catch (...) {
    std::error_code ec;
    std::filesystem::remove_all(dir, ec);
    throw;
  }
  std::error_code ec;
  std::filesystem::remove_all(dir, ec);
  return result;
}

std::unique_ptr<Refiner> make_refiner(const std::string& spec) {
  if (spec == "identity") return std::make_unique<IdentityRefiner>();
  if (spec.rfind("toy:", 0) == 0) {
    return std::make_unique<ToyAttentionRefiner>(
        ToyAttentionRefiner::from_json_file(spec.substr(4)));
  }
  if (spec.rfind("toy-random:", 0) == 0) {
    const std::string rest = spec.substr(11);
    const auto colon = rest.find(':');
    std::uint64_t seed = 0;
    std::size_t layers = 1;
    try {
      seed = std::stoull(colon == std::string::npos ? rest
                                                    : rest.substr(0, colon));
      if (colon != std::string::npos)
        layers = std::stoull(rest.substr(colon + 1));
    } catch (const std::exception&) {
      fail(ErrorCode::invalid_argument,
           "toy-random spec must be toy-random:<seed>[:<layers>]");
    }
    // Dimensions resolve lazily against the first refined table.
    class LazyToy : public Refiner {
     public:
      LazyToy(std::uint64_t seed, std::size_t layers)
          : seed_(seed), layers_(layers) {}
      std::string name() const override { return "toy-random"; }
      EmbeddingTable refine(const EmbeddingTable& in) override {
        if (!inner_ || dim_ != in.dim()) {
          dim_ = in.dim();
          inner_ = std::make_unique<ToyAttentionRefiner>(
              ToyAttentionRefiner::random(dim_, std::max<std::size_t>(1, dim_ / 4),
                                          layers_, seed_));
        }
        return inner_->refine(in);
      }

     private:
      std::uint64_t seed_;
      std::size_t layers_;
      std::size_t dim_ = 0;
      std::unique_ptr<ToyAttentionRefiner> inner_;
    };
    return std::make_unique<LazyToy>(seed, layers);
  }
  if (spec.rfind("external:", 0) == 0) {
    return std::make_unique<ExternalRefiner>(spec.substr(9));
  }
  fail(ErrorCode::invalid_argument,
       "unknown refiner spec '" + spec +
           "' (expected identity, toy:<weights.json>, "
           "toy-random:<seed>[:<layers>], or external:<command>)");
}

}  // namespace vmrtk
