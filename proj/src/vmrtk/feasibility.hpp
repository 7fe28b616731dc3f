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

#include <cstdint>
#include <string>
#include <vector>

#include "vmrtk/embedding_table.hpp"
#include "vmrtk/refiner.hpp"

namespace vmrtk {

/// Two concepts that belong together plus one that does not.
struct Triplet {
  std::string paired_a;
  std::string paired_b;
  std::string outlier;
};

/// Reads a JSON array of {"paired": [a, b], "outlier": c} objects; labels
/// within a triplet must be distinct.
std::vector<Triplet> load_triplets(const std::string& path);
void save_triplets(const std::vector<Triplet>& triplets,
                   const std::string& path);

struct TripletVerdict {
  bool reasonable = false;
  double paired_sim = 0.0;
  double max_unpaired_sim = 0.0;
};

/// Cosine similarity verdict: reasonable iff sim(a, b) strictly exceeds both
/// sim(a, outlier) and sim(b, outlier). Rows are normalized inside the
/// similarity computation, so the table itself need not be unit-norm.
TripletVerdict classify_triplet(const EmbeddingTable& table, const Triplet& t);

/// One unit-norm pseudo-random vector per label, a pure function of
/// (label, seed): reordering or subsetting the label list never changes any
/// vector.
EmbeddingTable synth_nontextual(const std::vector<std::string>& labels,
                                std::size_t dim, std::uint64_t seed);

/// Independently zeroes each entry with probability p (seeded). Rows are not
/// renormalized.
EmbeddingTable distort(const EmbeddingTable& table, double p,
                       std::uint64_t seed);

/// Entrywise (1 - alpha) * text + alpha * nontext; layouts must match.
EmbeddingTable fuse(const EmbeddingTable& text, const EmbeddingTable& nontext,
                    double alpha);

struct ScalingCheck {
  double empirical_ratio = 0.0;
  double predicted = 0.0;  // (1 - alpha)^2
  double mean_base = 0.0;
  double mean_fused = 0.0;
};

/// Monte-Carlo check that fusing both sides of a similar pair with
/// independent random vectors rescales the expected dot product by
/// (1 - alpha)^2. Pairs are drawn with controlled base similarity rho so the
/// denominator stays away from zero; a near-zero mean base similarity is an
/// error telling the caller to pick a biased sampler.
ScalingCheck expectation_scaling_check(std::size_t dim, double alpha,
                                       std::size_t n_pairs, std::uint64_t seed,
                                       double rho = 0.5);

/// Same check for a whole list of alphas from one shared sample. The random
/// draws never depend on alpha, so each entry is bit-identical to a separate
/// expectation_scaling_check call with the same seed, at a fifth of the cost
/// for a typical five-point curve.
std::vector<ScalingCheck> scaling_curve(std::size_t dim,
                                        const std::vector<double>& alphas,
                                        std::size_t n_pairs,
                                        std::uint64_t seed, double rho = 0.5);

struct RefineReport {
  double alpha = 0.0;
  double p = 0.0;
  std::size_t n_triplets = 0;
  std::size_t n_unreasonable_before = 0;
  std::size_t n_improved = 0;      // unreasonable -> reasonable
  std::size_t n_deteriorated = 0;  // reasonable -> unreasonable
  double improved_proportion = 0.0;
  double deteriorated_proportion = 0.0;
};

/// Full (alpha, p) grid: synthesize non-textual vectors once from the seed,
/// then per cell distort (cell-derived seed), fuse, classify, refine, and
/// re-classify. Reports come back in alpha-major order. A refiner that
/// changes labels, order, or dim, or produces non-finite values, is a
/// contract error naming the offending cell.
std::vector<RefineReport> run_refine_study(const EmbeddingTable& text,
                                           const std::vector<Triplet>& triplets,
                                           Refiner& refiner,
                                           const std::vector<double>& alphas,
                                           const std::vector<double>& ps,
                                           std::uint64_t seed);

/// Builds an embedding table over every label in the triplet list whose
/// verdicts are known by construction: the first floor(frac * n) triplets are
/// unreasonable, the rest reasonable, with similarity margins wide enough to
/// survive float32 round trips. Labels must be unique across the list.
EmbeddingTable make_triplet_geometry(const std::vector<Triplet>& triplets,
                                     std::size_t dim, double unreasonable_frac,
                                     std::uint64_t seed);

}  // namespace vmrtk
