// Copyright 2026 The AdaCGD Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Contractive compressors and three point compressors (3PC).
//
// A contractive compressor C satisfies E||C(x) - x||^2 <= (1 - alpha)||x||^2.
// A three point compressor C_{h,y}(x) takes the previous estimate h, the
// previous true vector y and the new true vector x, and satisfies
//   E||C_{h,y}(x) - x||^2 <= (1 - A)||h - y||^2 + B||x - y||^2.
//
// Supported rules:
//   EF21    h + C(x - h)
//   LAG     h if ||x - h||^2 <= zeta||x - y||^2, else x
//   CLAG    h + C(x - h) if ||x - h||^2 > zeta||x - y||^2, else h
//   AdaCGD  skip, or the first of h + C_j(x - h), j = 1..m (ascending alpha),
//           whose error passes ||x - v_j||^2 <= zeta||x - y||^2; falls back
//           to v_m
//   Ada3PC  predicate-dispatched chain of any of the above
//
// Randomness: every rule receives one SeededRng for its (round, worker) slot.
// A rule that owns a single contractor draws from rng.derive(1); AdaCGD
// candidate j and Ada3PC branch j draw from rng.derive(j). The EF21 rule is
// the exception: it uses the stream it is handed as-is, so that an EF21 branch
// inside a chain consumes exactly the stream its guard predicate used.

#ifndef ADACGD_COMPRESSORS_H_
#define ADACGD_COMPRESSORS_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "adacgd/core_types.h"

namespace adacgd {

enum class ContractorKind { kTopK, kRandK, kIdentity };

struct ContractorSpec {
  ContractorKind kind = ContractorKind::kIdentity;
  std::size_t k = 0;  // unused for kIdentity

  static ContractorSpec top_k(std::size_t k);
  static ContractorSpec rand_k(std::size_t k);
  static ContractorSpec identity();

  // k/d for sparsifiers, 1 for identity. Throws if k > dim.
  double alpha(std::size_t dim) const;
  bool randomized() const { return kind == ContractorKind::kRandK; }
  // True when C(x) = x for every x of this dimension.
  bool is_identity_at(std::size_t dim) const;

  // "top3", "rand3", "id".
  std::string to_string() const;

  friend bool operator==(const ContractorSpec&, const ContractorSpec&) = default;
};

// Top-K keeps the K largest-magnitude entries (ties to the lowest index).
// Rand-K keeps K uniformly chosen coordinates, unscaled.
// Throws std::invalid_argument if k > x.dim() or k == 0.
DenseVector apply_contractor(const ContractorSpec& c, const DenseVector& x,
                             SeededRng& rng);

// Coordinates kept by the contractor, ascending.
std::vector<std::uint32_t> contractor_support(const ContractorSpec& c,
                                              const DenseVector& x,
                                              SeededRng& rng);

struct SkipPayload {
  friend bool operator==(const SkipPayload&, const SkipPayload&) = default;
};
// Coordinate updates applied on top of h.
struct SparsePayload {
  std::vector<std::uint32_t> indices;
  std::vector<double> values;
  friend bool operator==(const SparsePayload&, const SparsePayload&) = default;
};
// The whole output vector is sent.
struct FullPayload {
  friend bool operator==(const FullPayload&, const FullPayload&) = default;
};
using Payload = std::variant<SkipPayload, SparsePayload, FullPayload>;

struct CompressionOutcome {
  DenseVector vector;
  // 0 is the skip branch for LAG/CLAG/AdaCGD; for Ada3PC the chosen branch.
  std::size_t branch_index = 0;
  Payload payload;
  // Number of selectable branches for adaptive rules (m), 0 otherwise. Drives
  // the branch-id header in the bit accounting.
  std::size_t adaptive_branches = 0;
};

// What the receiver rebuilds from its copy of h and the payload.
DenseVector reconstruct(const DenseVector& h, const CompressionOutcome& out);

enum class PredicateKind {
  kLazy,            // ||x - h||^2 <= zeta ||x - y||^2
  kCompressedLazy,  // ||x - (h + C(x - h))||^2 <= zeta ||x - y||^2
  kAbsolute,        // ||x - h||^2 <= tau
};

struct TriggerPredicate {
  PredicateKind kind = PredicateKind::kLazy;
  double threshold = 0.0;  // zeta or tau
  ContractorSpec contractor;

  static TriggerPredicate lazy(double zeta);
  static TriggerPredicate compressed_lazy(ContractorSpec c, double zeta);
  static TriggerPredicate absolute(double tau);

  // Evaluated on (h, y, x) only. kCompressedLazy consumes `rng` exactly as
  // ef21_compress would.
  bool evaluate(const DenseVector& h, const DenseVector& y,
                const DenseVector& x, SeededRng& rng) const;

  std::string to_string() const;
};

enum class ThreePCKind { kIdentity, kEF21, kLAG, kCLAG, kAdaCGD, kAda3PC };

struct ThreePCSpec {
  ThreePCKind kind = ThreePCKind::kIdentity;
  std::vector<ContractorSpec> contractors;  // EF21/CLAG: one; AdaCGD: m
  double zeta = 0.0;
  std::vector<ThreePCSpec> branches;         // Ada3PC
  std::vector<TriggerPredicate> predicates;  // Ada3PC, branches.size() - 1

  static ThreePCSpec identity();
  static ThreePCSpec ef21(ContractorSpec c);
  static ThreePCSpec lag(double zeta);
  static ThreePCSpec clag(ContractorSpec c, double zeta);
  // Contractors must be sorted by ascending alpha (Top/Rand by k, identity
  // last). Throws std::invalid_argument otherwise or when empty.
  static ThreePCSpec adacgd(std::vector<ContractorSpec> contractors,
                            double zeta);
  // Throws unless predicates.size() + 1 == branches.size().
  static ThreePCSpec ada3pc(std::vector<ThreePCSpec> branches,
                            std::vector<TriggerPredicate> predicates);

  // Structural checks at a concrete dimension (k <= dim, arity, zeta >= 0).
  void validate(std::size_t dim) const;
  bool randomized() const;
  bool adaptive() const {
    return kind == ThreePCKind::kAdaCGD || kind == ThreePCKind::kAda3PC;
  }
  // Size of the branch histogram: largest branch_index + 1.
  std::size_t branch_count() const;
  // Strongest contractor reachable in the spec; identity when there is none.
  ContractorSpec strongest_contractor() const;

  std::string to_string() const;
};

// The explicit LAG + EF21 chain equivalent to an AdaCGD spec.
ThreePCSpec adacgd_as_ada3pc(const ThreePCSpec& adacgd_spec);

CompressionOutcome ef21_compress(const ContractorSpec& c, const DenseVector& h,
                                 const DenseVector& y, const DenseVector& x,
                                 SeededRng& rng);
CompressionOutcome lag_compress(double zeta, const DenseVector& h,
                                const DenseVector& y, const DenseVector& x);
CompressionOutcome clag_compress(const ContractorSpec& c, double zeta,
                                 const DenseVector& h, const DenseVector& y,
                                 const DenseVector& x, SeededRng& rng);
CompressionOutcome adacgd_compress(const std::vector<ContractorSpec>& cs,
                                   double zeta, const DenseVector& h,
                                   const DenseVector& y, const DenseVector& x,
                                   SeededRng& rng);
CompressionOutcome ada3pc_compress(const ThreePCSpec& spec,
                                   const DenseVector& h, const DenseVector& y,
                                   const DenseVector& x, SeededRng& rng);

// Dispatch on spec.kind.
CompressionOutcome compress(const ThreePCSpec& spec, const DenseVector& h,
                            const DenseVector& y, const DenseVector& x,
                            SeededRng& rng);

// (A, B) certified for `spec` applied in dimension `dim`.
//   Identity   (1, 0)
//   EF21       (1 - sqrt(1 - a), (1 - a) / (1 - sqrt(1 - a))), (1, 0) at a = 1
//   LAG        (1, zeta)
//   CLAG       (A_EF21, max{zeta, B_EF21})
//   AdaCGD     combine over {(1, zeta)} and every EF21 branch
//   Ada3PC     combine over branches
ThreePCConstants certified_constants(const ThreePCSpec& spec, std::size_t dim);

// Empirical check of the 3PC inequality with the certified constants.
struct ConstantsEstimate {
  // Tightest constants consistent with the samples, each fitted with the other
  // held at its certified value.
  ThreePCConstants empirical;
  ThreePCConstants certified;
  std::size_t trials = 0;
  std::size_t violations = 0;
  // min over samples of (rhs - lhs) / max(rhs, floor); negative on violation.
  double worst_margin = 0.0;
  bool pass = false;
};

inline constexpr std::size_t kInnerDraws = 256;
inline constexpr double kConstantsRelTol = 1e-9;

// Samples triples from a mixture of Gaussian, sparse, collinear (x = y),
// coincident (h = y) and near-coincident configurations at random scales.
// Randomized specs are averaged over kInnerDraws inner draws per triple.
ConstantsEstimate estimate_constants(const ThreePCSpec& spec, std::size_t dim,
                                     std::size_t trials, SeededRng& rng);

}  // namespace adacgd

#endif  // ADACGD_COMPRESSORS_H_
