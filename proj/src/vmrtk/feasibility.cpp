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

#include "vmrtk/feasibility.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "vmrtk/rng.hpp"

namespace vmrtk {

std::vector<Triplet> load_triplets(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot open triplet file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::parse, "triplet file " + path + ": " + e.what());
  }
  if (!j.is_array())
    fail(ErrorCode::parse, "triplet file must hold a JSON array");
  std::vector<Triplet> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& e = j[i];
    if (!e.is_object() || !e.contains("paired") || !e.contains("outlier") ||
        !e["paired"].is_array() || e["paired"].size() != 2 ||
        !e["paired"][0].is_string() || !e["paired"][1].is_string() ||
        !e["outlier"].is_string())
      fail(ErrorCode::parse, "triplet " + std::to_string(i) +
                                 " must be {\"paired\": [a, b], \"outlier\": c}");
    Triplet t{e["paired"][0].get<std::string>(),
              e["paired"][1].get<std::string>(),
              e["outlier"].get<std::string>()};
    if (t.paired_a == t.paired_b || t.paired_a == t.outlier ||
        t.paired_b == t.outlier)
      fail(ErrorCode::parse,
           "triplet " + std::to_string(i) + " repeats a label");
    out.push_back(std::move(t));
  }
  return out;
}

void save_triplets(const std::vector<Triplet>& triplets,
                   const std::string& path) {
  nlohmann::json j = nlohmann::json::array();
  for (const Triplet& t : triplets)
    j.push_back({{"paired", {t.paired_a, t.paired_b}}, {"outlier", t.outlier}});
  std::ofstream out(path);
  if (!out) fail(ErrorCode::io, "cannot write triplet file: " + path);
  out << j.dump(2) << "\n";
}

namespace {

std::size_t require_label(const EmbeddingTable& table,
                          const std::string& label) {
  const auto idx = table.find(label);
  if (!idx)
    fail(ErrorCode::invalid_argument,
         "label '" + label + "' is not in the table");
  return *idx;
}

double cosine_checked(const EmbeddingTable& t, std::size_t i, std::size_t j) {
  const double na = l2_norm(t.row(i), t.dim());
  const double nb = l2_norm(t.row(j), t.dim());
  if (na == 0.0 || nb == 0.0)
    fail(ErrorCode::numeric,
         "cosine undefined: zero-norm row '" +
             t.labels()[na == 0.0 ? i : j] + "'");
  return dot(t.row(i), t.row(j), t.dim()) / (na * nb);
}

}  // namespace

TripletVerdict classify_triplet(const EmbeddingTable& table, const Triplet& t) {
  if (t.paired_a == t.paired_b || t.paired_a == t.outlier ||
      t.paired_b == t.outlier)
    fail(ErrorCode::invalid_argument, "triplet labels must be distinct");
  const std::size_t a = require_label(table, t.paired_a);
  const std::size_t b = require_label(table, t.paired_b);
  const std::size_t o = require_label(table, t.outlier);
  TripletVerdict v;
  v.paired_sim = cosine_checked(table, a, b);
  v.max_unpaired_sim =
      std::max(cosine_checked(table, a, o), cosine_checked(table, b, o));
  v.reasonable = v.paired_sim > v.max_unpaired_sim;  // ties are unreasonable
  return v;
}

EmbeddingTable synth_nontextual(const std::vector<std::string>& labels,
                                std::size_t dim, std::uint64_t seed) {
  if (dim < 2)
    fail(ErrorCode::invalid_argument, "synthetic embeddings need dim >= 2");
  std::vector<double> rows;
  rows.reserve(labels.size() * dim);
  for (const std::string& label : labels) {
    Rng rng(derive_seed(seed, label));
    const std::vector<double> v = rng.unit_vector(dim);
    rows.insert(rows.end(), v.begin(), v.end());
  }
  return EmbeddingTable(labels, dim, std::move(rows));
}

EmbeddingTable distort(const EmbeddingTable& table, double p,
                       std::uint64_t seed) {
  if (!(p >= 0.0 && p <= 1.0))
    fail(ErrorCode::invalid_argument, "distortion probability must be in [0,1]");
  std::vector<double> rows(table.values());
  for (std::size_t i = 0; i < table.count(); ++i) {
    Rng rng(derive_seed(seed, i));
    for (std::size_t j = 0; j < table.dim(); ++j)
      if (rng.uniform() < p) rows[i * table.dim() + j] = 0.0;
  }
  return EmbeddingTable(table.labels(), table.dim(), std::move(rows));
}

EmbeddingTable fuse(const EmbeddingTable& text, const EmbeddingTable& nontext,
                    double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0))
    fail(ErrorCode::invalid_argument, "fusion alpha must be in [0,1]");
  if (!text.same_layout(nontext))
    fail(ErrorCode::invalid_argument,
         "fuse requires identical labels, order, and dim");
  std::vector<double> rows(text.values().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    rows[i] = (1.0 - alpha) * text.values()[i] + alpha * nontext.values()[i];
  return EmbeddingTable(text.labels(), text.dim(), std::move(rows));
}

namespace {

void fill_unit(Rng& rng, std::vector<double>& v) {
  double norm = 0.0;
  do {
    norm = 0.0;
    for (auto& x : v) {
      x = rng.normal();
      norm += x * x;
    }
    norm = std::sqrt(norm);
  } while (norm < 1e-12);
  const double inv = 1.0 / norm;
  for (auto& x : v) x *= inv;
}

}  // namespace

ScalingCheck expectation_scaling_check(std::size_t dim, double alpha,
                                       std::size_t n_pairs, std::uint64_t seed,
                                       double rho) {
  return scaling_curve(dim, {alpha}, n_pairs, seed, rho).front();
}

std::vector<ScalingCheck> scaling_curve(std::size_t dim,
                                        const std::vector<double>& alphas,
                                        std::size_t n_pairs,
                                        std::uint64_t seed, double rho) {
  if (dim < 2) fail(ErrorCode::invalid_argument, "scaling check needs dim >= 2");
  if (n_pairs < 1000)
    fail(ErrorCode::invalid_argument, "scaling check needs n_pairs >= 1000");
  if (alphas.empty())
    fail(ErrorCode::invalid_argument, "scaling check needs at least one alpha");
  for (double alpha : alphas)
    if (!(alpha >= 0.0 && alpha <= 1.0))
      fail(ErrorCode::invalid_argument, "alpha must be in [0,1]");
  if (!(rho > -1.0 && rho < 1.0))
    fail(ErrorCode::invalid_argument, "rho must be in (-1,1)");

  Rng rng(derive_seed(seed, "scaling-check"));
  const double mix = std::sqrt(1.0 - rho * rho);
  double sum_base = 0.0;
  std::vector<double> sum_fused(alphas.size(), 0.0);
  std::vector<double> c1(dim), c2(dim), eps(dim), c1p(dim), c2p(dim);
  for (std::size_t k = 0; k < n_pairs; ++k) {
    fill_unit(rng, c1);
    fill_unit(rng, eps);
    for (std::size_t j = 0; j < dim; ++j) c2[j] = rho * c1[j] + mix * eps[j];
    const double n2 = l2_norm(c2.data(), dim);
    for (std::size_t j = 0; j < dim; ++j) c2[j] /= n2;
    fill_unit(rng, c1p);
    fill_unit(rng, c2p);
    // sim(fused1, fused2) expanded bilinearly, so every alpha shares the
    // four base dot products of this pair.
    const double d11 = dot(c1.data(), c2.data(), dim);
    const double d12 = dot(c1.data(), c2p.data(), dim);
    const double d21 = dot(c1p.data(), c2.data(), dim);
    const double d22 = dot(c1p.data(), c2p.data(), dim);
    sum_base += d11;
    for (std::size_t a = 0; a < alphas.size(); ++a) {
      const double al = alphas[a], om = 1.0 - alphas[a];
      sum_fused[a] += om * om * d11 + om * al * (d12 + d21) + al * al * d22;
    }
  }
  const double mean_base = sum_base / static_cast<double>(n_pairs);
  if (std::abs(mean_base) < 0.05)
    fail(ErrorCode::numeric,
         "mean base similarity " + std::to_string(mean_base) +
             " is too close to zero for a stable ratio; sample with a rho "
             "biased away from 0");
  std::vector<ScalingCheck> out(alphas.size());
  for (std::size_t a = 0; a < alphas.size(); ++a) {
    out[a].mean_base = mean_base;
    out[a].mean_fused = sum_fused[a] / static_cast<double>(n_pairs);
    out[a].predicted = (1.0 - alphas[a]) * (1.0 - alphas[a]);
    out[a].empirical_ratio = out[a].mean_fused / mean_base;
  }
  return out;
}

std::vector<RefineReport> run_refine_study(const EmbeddingTable& text,
                                           const std::vector<Triplet>& triplets,
                                           Refiner& refiner,
                                           const std::vector<double>& alphas,
                                           const std::vector<double>& ps,
                                           std::uint64_t seed) {
  if (triplets.empty())
    fail(ErrorCode::invalid_argument, "refine study needs triplets");
  if (alphas.empty() || ps.empty())
    fail(ErrorCode::invalid_argument, "refine study needs alphas and ps");
  for (const Triplet& t : triplets) {
    require_label(text, t.paired_a);
    require_label(text, t.paired_b);
    require_label(text, t.outlier);
  }

  const EmbeddingTable textn = normalize(text);
  const EmbeddingTable nontext =
      synth_nontextual(text.labels(), text.dim(), seed);
  const std::uint64_t distort_root = derive_seed(seed, "distort");

  std::vector<RefineReport> out;
  for (std::size_t ai = 0; ai < alphas.size(); ++ai) {
    for (std::size_t pi = 0; pi < ps.size(); ++pi) {
      const double alpha = alphas[ai];
      const double p = ps[pi];
      const std::size_t cell = ai * ps.size() + pi;
      const auto cell_name = [&] {
        std::ostringstream s;
        s << "(alpha=" << alpha << ", p=" << p << ")";
        return s.str();
      }();

      const EmbeddingTable fused =
          fuse(textn, distort(nontext, p, derive_seed(distort_root, cell)),
               alpha);
      EmbeddingTable refined;
      try {
        refined = refiner.refine(fused);
      } catch (const Error& e) {
        fail(e.code(), "refiner '" + refiner.name() + "' failed at cell " +
                           cell_name + ": " + e.what());
      }
      if (!refined.same_layout(fused))
        fail(ErrorCode::contract,
             "refiner '" + refiner.name() +
                 "' changed labels, order, or dim at cell " + cell_name);

      RefineReport r;
      r.alpha = alpha;
      r.p = p;
      r.n_triplets = triplets.size();
      for (const Triplet& t : triplets) {
        const bool before = classify_triplet(fused, t).reasonable;
        const bool after = classify_triplet(refined, t).reasonable;
        if (!before) {
          ++r.n_unreasonable_before;
          if (after) ++r.n_improved;
        } else if (!after) {
          ++r.n_deteriorated;
        }
      }
      const std::size_t n_reasonable = r.n_triplets - r.n_unreasonable_before;
      r.improved_proportion =
          r.n_unreasonable_before == 0
              ? 0.0
              : static_cast<double>(r.n_improved) /
                    static_cast<double>(r.n_unreasonable_before);
      r.deteriorated_proportion =
          n_reasonable == 0 ? 0.0
                            : static_cast<double>(r.n_deteriorated) /
                                  static_cast<double>(n_reasonable);
      out.push_back(r);
    }
  }
  return out;
}

namespace {

// Orthonormal triple from the generator; redraws on near-degenerate draws.
void orthonormal_triple(Rng& rng, std::size_t dim, std::vector<double>& u1,
                        std::vector<double>& u2, std::vector<double>& u3) {
  u1 = rng.unit_vector(dim);
  auto project_off = [dim](std::vector<double>& v,
                           const std::vector<double>& u) {
    const double c = dot(v.data(), u.data(), dim);
    for (std::size_t j = 0; j < dim; ++j) v[j] -= c * u[j];
  };
  for (;;) {
    u2 = rng.normal_vector(dim);
    project_off(u2, u1);
    const double n = l2_norm(u2.data(), dim);
    if (n > 1e-6) {
      for (double& x : u2) x /= n;
      break;
    }
  }
  for (;;) {
    u3 = rng.normal_vector(dim);
    project_off(u3, u1);
    project_off(u3, u2);
    const double n = l2_norm(u3.data(), dim);
    if (n > 1e-6) {
      for (double& x : u3) x /= n;
      break;
    }
  }
}

}  // namespace

EmbeddingTable make_triplet_geometry(const std::vector<Triplet>& triplets,
                                     std::size_t dim, double unreasonable_frac,
                                     std::uint64_t seed) {
  if (dim < 3)
    fail(ErrorCode::invalid_argument, "triplet geometry needs dim >= 3");
  if (!(unreasonable_frac >= 0.0 && unreasonable_frac <= 1.0))
    fail(ErrorCode::invalid_argument, "unreasonable_frac must be in [0,1]");

  const std::size_t n_unreasonable = static_cast<std::size_t>(
      std::floor(unreasonable_frac * static_cast<double>(triplets.size())));
  std::vector<std::string> labels;
  std::vector<double> rows;
  std::vector<double> u1, u2, u3;
  for (std::size_t k = 0; k < triplets.size(); ++k) {
    const Triplet& t = triplets[k];
    Rng rng(derive_seed(derive_seed(seed, "triplet-geometry"), k));
    orthonormal_triple(rng, dim, u1, u2, u3);

    // Pairwise cosine targets with wide verdict margins: sim(a,b) is either
    // clearly above (reasonable) or clearly below (unreasonable) the largest
    // outlier similarity.
    const bool unreasonable = k < n_unreasonable;
    const double s_ab = unreasonable ? rng.uniform(0.25, 0.40)
                                     : rng.uniform(0.70, 0.85);
    const double s_ao = unreasonable ? rng.uniform(0.55, 0.70)
                                     : rng.uniform(0.20, 0.40);
    const double s_bo = unreasonable ? rng.uniform(0.10, 0.30)
                                     : rng.uniform(0.20, 0.40);
    const double sin_ab = std::sqrt(1.0 - s_ab * s_ab);
    const double sin_ao = std::sqrt(1.0 - s_ao * s_ao);
    const double cos_phi = (s_bo - s_ab * s_ao) / (sin_ab * sin_ao);
    const double sin_phi = std::sqrt(1.0 - cos_phi * cos_phi);

    auto push = [&](const std::string& label, double c1, double c2,
                    double c3) {
      labels.push_back(label);
      for (std::size_t j = 0; j < dim; ++j)
        rows.push_back(c1 * u1[j] + c2 * u2[j] + c3 * u3[j]);
    };
    push(t.paired_a, 1.0, 0.0, 0.0);
    push(t.paired_b, s_ab, sin_ab, 0.0);
    push(t.outlier, s_ao, sin_ao * cos_phi, sin_ao * sin_phi);
  }
  return EmbeddingTable(std::move(labels), dim, std::move(rows));
}

}  // namespace vmrtk
