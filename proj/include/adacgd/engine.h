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

// Distributed compressed gradient descent with worker and master 3PC
// compression. One round:
//
//   x+      = x - gamma * g
//   gt_i+   = C^W_{gt_i, grad_i(x)}(grad_i(x+))     on every worker
//   gt+     = mean_i gt_i+                           on the server
//   g+      = C^M_{g, gt}(gt+)                       broadcast
//
// With an identity master this is the unidirectional method (g == gt).

#ifndef ADACGD_ENGINE_H_
#define ADACGD_ENGINE_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "adacgd/compressors.h"
#include "adacgd/core_types.h"
#include "adacgd/problems.h"

namespace adacgd {

struct EngineState {
  DenseVector x;
  DenseVector g_master;        // g: what workers step with
  DenseVector g_tilde_master;  // mean of worker estimates
  std::vector<DenseVector> worker_estimates;   // gt_i
  std::vector<DenseVector> worker_prev_grads;  // grad f_i(x), the y-slot
  std::size_t round = 0;
  std::uint64_t uplink_bits_total = 0;
  std::uint64_t downlink_bits_total = 0;
};

struct StepsizeRule {
  enum class Kind {
    kConvexThm1,         // 1 / (L- + L+ sqrt(2B/A))
    kNonconvexUni,       // 1 / (L- + L+ sqrt(B/A))
    kPL,                 // min{1 / (L- + L+ sqrt(2B/A)), A / (2 mu)}
    kBidirectionalThm2,  // see theoretical_stepsize
    kManual,
  };
  Kind kind = Kind::kConvexThm1;
  std::optional<double> mu;  // kPL; falls back to SmoothnessConstants::mu
  double gamma = 0.0;        // kManual
  double multiplier = 1.0;

  static StepsizeRule of(Kind kind) {
    StepsizeRule r;
    r.kind = kind;
    return r;
  }
  static StepsizeRule convex() { return of(Kind::kConvexThm1); }
  static StepsizeRule nonconvex() { return of(Kind::kNonconvexUni); }
  static StepsizeRule pl(std::optional<double> mu = std::nullopt) {
    StepsizeRule r = of(Kind::kPL);
    r.mu = mu;
    return r;
  }
  static StepsizeRule bidirectional() { return of(Kind::kBidirectionalThm2); }
  static StepsizeRule manual(double gamma);
  StepsizeRule multiplied(double factor) const;
};

// Condition-number readouts of a (worker) constant pair:
//   M1 = max{L- + L+ sqrt(2B/A), 1/A},  M2 = L- + L+ sqrt(B/A).
double condition_m1(const SmoothnessConstants& sc, const ThreePCConstants& c);
double condition_m2(const SmoothnessConstants& sc, const ThreePCConstants& c);

// Throws std::invalid_argument for a PL rule without mu or a non-positive
// manual/multiplied stepsize.
double theoretical_stepsize(const StepsizeRule& rule,
                            const SmoothnessConstants& sc,
                            const ThreePCConstants& worker,
                            const ThreePCConstants& master);

struct IterationRecord {
  std::size_t round = 0;
  double f_value = 0.0;
  double grad_norm_sq = 0.0;
  double phi = 0.0;
  double psi = 0.0;
  double g_error = 0.0;       // (1/n) sum ||gt_i - grad_i(x)||^2
  double master_error = 0.0;  // ||g - gt||^2
  double step_sq = 0.0;       // ||x^t - x^{t-1}||^2, 0 at round 0
  std::uint64_t uplink_bits_round = 0;
  std::uint64_t downlink_bits_round = 0;
  std::uint64_t uplink_bits_cum = 0;
  std::uint64_t downlink_bits_cum = 0;
  std::vector<std::uint64_t> branch_histogram;
};

// Skip -> 1; sparse with s entries -> s*value_bits + s*ceil(log2 d), plus a
// ceil(log2(m+1))-bit branch id for adaptive outcomes; full -> d*value_bits.
std::uint64_t payload_bits(const CompressionOutcome& outcome, std::size_t dim,
                           unsigned value_bits);

struct LyapunovValues {
  double phi = 0.0;
  double psi = 0.0;
};

// phi = f(x) - f_star + (gamma / A^W) G
// psi = f(x) - f_inf + (gamma / A^M)||g - gt||^2
//       + (gamma / A^W)(1 + 3 B^M (2 - A^W) / A^M) G
// G is computed from the state's estimates and stored gradients.
LyapunovValues lyapunov(const EngineState& state, const Problem& problem,
                        double gamma, const ThreePCConstants& worker,
                        const ThreePCConstants& master, double f_star,
                        double f_inf = 0.0);

enum class InitMode { kFull, kCompressed };

struct EngineOptions {
  InitMode init = InitMode::kFull;
  unsigned value_bits = 64;
  std::uint64_t seed = 0;
  // Reference value for phi; f_inf when absent.
  std::optional<double> f_star;
  double f_inf = 0.0;
};

// Thrown when an iterate or gradient stops being finite. Carries the records
// produced before the failure when raised from run().
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::size_t round, std::vector<IterationRecord> partial = {});
  std::size_t round() const { return round_; }
  const std::vector<IterationRecord>& partial_trace() const { return partial_; }

 private:
  std::size_t round_;
  std::vector<IterationRecord> partial_;
};

struct StopRule {
  std::size_t max_rounds = 1000;
  std::optional<std::uint64_t> uplink_bit_budget;
  std::optional<double> grad_tolerance;  // stop once ||grad f||^2 <= tol
};

class Engine {
 public:
  Engine(const Problem& problem, ThreePCSpec worker, ThreePCSpec master,
         double gamma, EngineOptions options = {});

  const ThreePCConstants& worker_constants() const { return worker_c_; }
  const ThreePCConstants& master_constants() const { return master_c_; }
  double gamma() const { return gamma_; }
  bool bidirectional() const {
    return master_.kind != ThreePCKind::kIdentity;
  }

  // Starting state plus its round-0 record (initial communication charged).
  EngineState init(const DenseVector& x0, IterationRecord* record) const;

  // Advances one round in place and returns the record of the new round.
  // Throws DivergenceError on non-finite values.
  IterationRecord step(EngineState& state) const;

  // Iterates until the stop rule fires; the first record is round 0.
  std::vector<IterationRecord> run(const DenseVector& x0,
                                   const StopRule& stop) const;

 private:
  IterationRecord observe(const EngineState& state) const;
  SeededRng worker_stream(std::size_t worker, std::size_t round) const;
  SeededRng master_stream(std::size_t round) const;

  const Problem* problem_;
  ThreePCSpec worker_;
  ThreePCSpec master_;
  double gamma_;
  EngineOptions options_;
  ThreePCConstants worker_c_;
  ThreePCConstants master_c_;
};

}  // namespace adacgd

#endif  // ADACGD_ENGINE_H_
