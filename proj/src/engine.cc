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

#include "adacgd/engine.h"

#include <algorithm>
#include <cmath>
#include <string>

namespace adacgd {
namespace {

std::uint64_t ceil_log2(std::uint64_t v) {
  std::uint64_t bits = 0;
  while ((std::uint64_t{1} << bits) < v) ++bits;
  return bits;
}

double bidirectional_pressure(const ThreePCConstants& w,
                              const ThreePCConstants& m) {
  return 1.0 + 3.0 * m.b * (2.0 - w.a) / m.a;
}

DenseVector mean_of(const std::vector<DenseVector>& vs, std::size_t dim) {
  DenseVector sum(dim);
  for (const DenseVector& v : vs) sum += v;
  sum *= 1.0 / static_cast<double>(vs.size());
  return sum;
}

}  // namespace

StepsizeRule StepsizeRule::manual(double gamma) {
  if (!(gamma > 0.0)) throw std::invalid_argument("stepsize must be > 0");
  StepsizeRule r = of(Kind::kManual);
  r.gamma = gamma;
  return r;
}

StepsizeRule StepsizeRule::multiplied(double factor) const {
  if (!(factor > 0.0)) throw std::invalid_argument("multiplier must be > 0");
  StepsizeRule r = *this;
  r.multiplier *= factor;
  return r;
}

double condition_m1(const SmoothnessConstants& sc, const ThreePCConstants& c) {
  return std::max(sc.l_minus + sc.l_plus * std::sqrt(2.0 * c.b / c.a),
                  1.0 / c.a);
}

double condition_m2(const SmoothnessConstants& sc, const ThreePCConstants& c) {
  return sc.l_minus + sc.l_plus * std::sqrt(c.b / c.a);
}

double theoretical_stepsize(const StepsizeRule& rule,
                            const SmoothnessConstants& sc,
                            const ThreePCConstants& worker,
                            const ThreePCConstants& master) {
  if (!(rule.multiplier > 0.0)) {
    throw std::invalid_argument("multiplier must be > 0");
  }
  const double lm = sc.l_minus;
  const double lp = sc.l_plus;
  double gamma = 0.0;
  switch (rule.kind) {
    case StepsizeRule::Kind::kConvexThm1:
      gamma = 1.0 / (lm + lp * std::sqrt(2.0 * worker.b / worker.a));
      break;
    case StepsizeRule::Kind::kNonconvexUni:
      gamma = 1.0 / (lm + lp * std::sqrt(worker.b / worker.a));
      break;
    case StepsizeRule::Kind::kPL: {
      const std::optional<double> mu = rule.mu ? rule.mu : sc.mu;
      if (!mu || !(*mu > 0.0)) {
        throw std::invalid_argument("PL stepsize needs mu > 0");
      }
      gamma = std::min(1.0 / (lm + lp * std::sqrt(2.0 * worker.b / worker.a)),
                       worker.a / (2.0 * *mu));
      break;
    }
    case StepsizeRule::Kind::kBidirectionalThm2: {
      // The worker-error term is divided by min(A^M, A^W): the R^t coefficient
      // of the descent inequality carries 2B^W/A^W, so this keeps gamma
      // admissible whichever of the two constants is smaller.
      const double a_mix = std::min(master.a, worker.a);
      const double inner =
          6.0 * master.b * (worker.b + 1.0) / master.a +
          (2.0 * worker.b / a_mix) * bidirectional_pressure(worker, master);
      gamma = 1.0 / (lm + lp * std::sqrt(inner));
      break;
    }
    case StepsizeRule::Kind::kManual:
      if (!(rule.gamma > 0.0)) {
        throw std::invalid_argument("stepsize must be > 0");
      }
      gamma = rule.gamma;
      break;
  }
  return gamma * rule.multiplier;
}

std::uint64_t payload_bits(const CompressionOutcome& outcome, std::size_t dim,
                           unsigned value_bits) {
  if (value_bits != 32 && value_bits != 64) {
    throw std::invalid_argument("value_bits must be 32 or 64");
  }
  return std::visit(
      [&](const auto& p) -> std::uint64_t {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, SkipPayload>) {
          return 1;
        } else if constexpr (std::is_same_v<P, FullPayload>) {
          return static_cast<std::uint64_t>(dim) * value_bits;
        } else {
          const std::uint64_t s = p.indices.size();
          const std::uint64_t header =
              outcome.adaptive_branches > 0
                  ? ceil_log2(outcome.adaptive_branches + 1)
                  : 0;
          return s * value_bits + s * ceil_log2(dim) + header;
        }
      },
      outcome.payload);
}

LyapunovValues lyapunov(const EngineState& state, const Problem& problem,
                        double gamma, const ThreePCConstants& worker,
                        const ThreePCConstants& master, double f_star,
                        double f_inf) {
  const double f = problem.loss(state.x);
  double g_err = 0.0;
  for (std::size_t i = 0; i < state.worker_estimates.size(); ++i) {
    g_err += squared_distance(state.worker_estimates[i],
                              state.worker_prev_grads[i]);
  }
  g_err /= static_cast<double>(state.worker_estimates.size());
  const double master_err =
      squared_distance(state.g_master, state.g_tilde_master);
  LyapunovValues out;
  out.phi = f - f_star + gamma / worker.a * g_err;
  out.psi = f - f_inf + gamma / master.a * master_err +
            gamma / worker.a * bidirectional_pressure(worker, master) * g_err;
  return out;
}

DivergenceError::DivergenceError(std::size_t round,
                                 std::vector<IterationRecord> partial)
    : std::runtime_error("non-finite value encountered at round " +
                         std::to_string(round)),
      round_(round),
      partial_(std::move(partial)) {}

Engine::Engine(const Problem& problem, ThreePCSpec worker, ThreePCSpec master,
               double gamma, EngineOptions options)
    : problem_(&problem),
      worker_(std::move(worker)),
      master_(std::move(master)),
      gamma_(gamma),
      options_(options) {
  if (!(gamma_ > 0.0) || !std::isfinite(gamma_)) {
    throw std::invalid_argument("stepsize must be finite and > 0");
  }
  if (options_.value_bits != 32 && options_.value_bits != 64) {
    throw std::invalid_argument("value_bits must be 32 or 64");
  }
  worker_c_ = certified_constants(worker_, problem.dim());
  master_c_ = certified_constants(master_, problem.dim());
}

SeededRng Engine::worker_stream(std::size_t worker, std::size_t round) const {
  return SeededRng(options_.seed, 1 + worker).derive(round);
}

SeededRng Engine::master_stream(std::size_t round) const {
  return SeededRng(options_.seed, 0).derive(round);
}

IterationRecord Engine::observe(const EngineState& state) const {
  const std::size_t n = state.worker_estimates.size();
  IterationRecord rec;
  rec.round = state.round;
  rec.f_value = problem_->loss(state.x);
  const DenseVector grad = mean_of(state.worker_prev_grads, problem_->dim());
  rec.grad_norm_sq = squared_norm(grad);
  double g_err = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    g_err += squared_distance(state.worker_estimates[i],
                              state.worker_prev_grads[i]);
  }
  rec.g_error = g_err / static_cast<double>(n);
  rec.master_error = squared_distance(state.g_master, state.g_tilde_master);
  const double f_star = options_.f_star.value_or(options_.f_inf);
  rec.phi = rec.f_value - f_star + gamma_ / worker_c_.a * rec.g_error;
  rec.psi = rec.f_value - options_.f_inf +
            gamma_ / master_c_.a * rec.master_error +
            gamma_ / worker_c_.a * bidirectional_pressure(worker_c_, master_c_) *
                rec.g_error;
  rec.uplink_bits_cum = state.uplink_bits_total;
  rec.downlink_bits_cum = state.downlink_bits_total;
  rec.branch_histogram.assign(worker_.branch_count(), 0);
  return rec;
}

EngineState Engine::init(const DenseVector& x0, IterationRecord* record) const {
  const Problem& p = *problem_;
  if (x0.dim() != p.dim()) {
    throw std::invalid_argument("x0 dimension does not match the problem");
  }
  const std::size_t n = p.num_clients();
  const std::size_t d = p.dim();
  EngineState s;
  s.x = x0;
  std::uint64_t uplink = 0;
  const ContractorSpec strongest = worker_.strongest_contractor();
  const DenseVector zero(d);
  for (std::size_t i = 0; i < n; ++i) {
    DenseVector grad = p.client_gradient(i, x0);
    if (!grad.is_finite()) throw DivergenceError(0);
    if (options_.init == InitMode::kFull) {
      s.worker_estimates.push_back(grad);
      uplink += static_cast<std::uint64_t>(d) * options_.value_bits;
    } else {
      SeededRng rng = worker_stream(i, 0);
      CompressionOutcome out = ef21_compress(strongest, zero, zero, grad, rng);
      uplink += payload_bits(out, d, options_.value_bits);
      s.worker_estimates.push_back(std::move(out.vector));
    }
    s.worker_prev_grads.push_back(std::move(grad));
  }
  s.g_tilde_master = mean_of(s.worker_estimates, d);
  s.g_master = s.g_tilde_master;
  s.uplink_bits_total = uplink;
  s.downlink_bits_total = static_cast<std::uint64_t>(d) * options_.value_bits;
  if (record != nullptr) {
    *record = observe(s);
    record->uplink_bits_round = s.uplink_bits_total;
    record->downlink_bits_round = s.downlink_bits_total;
  }
  return s;
}

IterationRecord Engine::step(EngineState& state) const {
  const Problem& p = *problem_;
  const std::size_t n = p.num_clients();
  const std::size_t d = p.dim();
  const std::size_t next_round = state.round + 1;

  DenseVector x_next = state.x;
  for (std::size_t k = 0; k < d; ++k) x_next[k] -= gamma_ * state.g_master[k];
  if (!x_next.is_finite()) throw DivergenceError(next_round);

  std::vector<std::uint64_t> histogram(worker_.branch_count(), 0);
  std::uint64_t uplink = 0;
  for (std::size_t i = 0; i < n; ++i) {
    DenseVector grad = p.client_gradient(i, x_next);
    if (!grad.is_finite()) throw DivergenceError(next_round);
    SeededRng rng = worker_stream(i, next_round);
    CompressionOutcome out =
        compress(worker_, state.worker_estimates[i],
                 state.worker_prev_grads[i], grad, rng);
    uplink += payload_bits(out, d, options_.value_bits);
    ++histogram.at(out.branch_index);
    state.worker_estimates[i] = std::move(out.vector);
    state.worker_prev_grads[i] = std::move(grad);
  }

  DenseVector g_tilde_next = mean_of(state.worker_estimates, d);
  std::uint64_t downlink = 0;
  if (master_.kind == ThreePCKind::kIdentity) {
    state.g_master = g_tilde_next;
    downlink = static_cast<std::uint64_t>(d) * options_.value_bits;
  } else {
    SeededRng rng = master_stream(next_round);
    CompressionOutcome out = compress(master_, state.g_master,
                                      state.g_tilde_master, g_tilde_next, rng);
    downlink = payload_bits(out, d, options_.value_bits);
    state.g_master = std::move(out.vector);
  }
  if (!state.g_master.is_finite()) throw DivergenceError(next_round);
  state.g_tilde_master = std::move(g_tilde_next);

  const double step_sq = squared_distance(x_next, state.x);
  state.x = std::move(x_next);
  state.round = next_round;
  state.uplink_bits_total += uplink;
  state.downlink_bits_total += downlink;

  IterationRecord rec = observe(state);
  if (!std::isfinite(rec.f_value) || !std::isfinite(rec.phi) ||
      !std::isfinite(rec.psi)) {
    throw DivergenceError(next_round);
  }
  rec.step_sq = step_sq;
  rec.uplink_bits_round = uplink;
  rec.downlink_bits_round = downlink;
  rec.branch_histogram = std::move(histogram);
  return rec;
}

std::vector<IterationRecord> Engine::run(const DenseVector& x0,
                                         const StopRule& stop) const {
  std::vector<IterationRecord> records;
  try {
    IterationRecord first;
    EngineState state = init(x0, &first);
    records.push_back(std::move(first));
    while (state.round < stop.max_rounds) {
      const IterationRecord& last = records.back();
      if (stop.grad_tolerance && last.grad_norm_sq <= *stop.grad_tolerance) {
        break;
      }
      if (stop.uplink_bit_budget &&
          last.uplink_bits_cum >= *stop.uplink_bit_budget) {
        break;
      }
      records.push_back(step(state));
    }
  } catch (const DivergenceError& e) {
    throw DivergenceError(e.round(), std::move(records));
  }
  return records;
}

}  // namespace adacgd
