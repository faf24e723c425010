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

#include "adacgd/compressors.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace adacgd {
namespace {

std::string format_real(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void require_dims(const DenseVector& h, const DenseVector& y,
                  const DenseVector& x) {
  require_same_dim(h, x);
  require_same_dim(y, x);
}

void require_zeta(double zeta) {
  if (!(zeta >= 0.0)) {
    throw std::invalid_argument("trigger zeta must be >= 0");
  }
}

// Ordering rank for the ascending-alpha requirement: Top/Rand by k, identity
// after everything.
std::size_t alpha_rank(const ContractorSpec& c) {
  return c.kind == ContractorKind::kIdentity
             ? std::numeric_limits<std::size_t>::max()
             : c.k;
}

ThreePCConstants ef21_constants(double alpha) {
  if (alpha >= 1.0) return ThreePCConstants{1.0, 0.0};
  const double root = std::sqrt(1.0 - alpha);
  return ThreePCConstants{1.0 - root, (1.0 - alpha) / (1.0 - root)};
}

CompressionOutcome skip_outcome(const DenseVector& h) {
  return CompressionOutcome{h, 0, SkipPayload{}, 0};
}

}  // namespace

ContractorSpec ContractorSpec::top_k(std::size_t k) {
  if (k == 0) throw std::invalid_argument("Top-K needs k >= 1");
  return ContractorSpec{ContractorKind::kTopK, k};
}

ContractorSpec ContractorSpec::rand_k(std::size_t k) {
  if (k == 0) throw std::invalid_argument("Rand-K needs k >= 1");
  return ContractorSpec{ContractorKind::kRandK, k};
}

ContractorSpec ContractorSpec::identity() {
  return ContractorSpec{ContractorKind::kIdentity, 0};
}

double ContractorSpec::alpha(std::size_t dim) const {
  if (kind == ContractorKind::kIdentity) return 1.0;
  if (k == 0 || k > dim) {
    throw std::invalid_argument("contractor k=" + std::to_string(k) +
                                " invalid for dimension " +
                                std::to_string(dim));
  }
  return static_cast<double>(k) / static_cast<double>(dim);
}

bool ContractorSpec::is_identity_at(std::size_t dim) const {
  return kind == ContractorKind::kIdentity || k == dim;
}

std::string ContractorSpec::to_string() const {
  switch (kind) {
    case ContractorKind::kTopK:
      return "top" + std::to_string(k);
    case ContractorKind::kRandK:
      return "rand" + std::to_string(k);
    case ContractorKind::kIdentity:
      return "id";
  }
  return "?";
}

std::vector<std::uint32_t> contractor_support(const ContractorSpec& c,
                                              const DenseVector& x,
                                              SeededRng& rng) {
  const std::size_t d = x.dim();
  std::vector<std::uint32_t> idx(d);
  std::iota(idx.begin(), idx.end(), 0u);
  if (c.kind == ContractorKind::kIdentity) return idx;
  c.alpha(d);  // validates k
  const std::size_t k = c.k;
  if (c.kind == ContractorKind::kTopK) {
    auto by_magnitude = [&x](std::uint32_t a, std::uint32_t b) {
      const double ma = std::abs(x[a]);
      const double mb = std::abs(x[b]);
      return ma > mb || (ma == mb && a < b);
    };
    if (k < d) {
      std::nth_element(idx.begin(), idx.begin() + static_cast<long>(k),
                       idx.end(), by_magnitude);
      idx.resize(k);
    }
  } else {
    // Partial Fisher-Yates: the first k slots become a uniform k-subset.
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t j = i + rng.uniform_index(d - i);
      std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
  }
  std::sort(idx.begin(), idx.end());
  return idx;
}

DenseVector apply_contractor(const ContractorSpec& c, const DenseVector& x,
                             SeededRng& rng) {
  if (c.kind == ContractorKind::kIdentity) return x;
  DenseVector out(x.dim());
  for (std::uint32_t j : contractor_support(c, x, rng)) out[j] = x[j];
  return out;
}

DenseVector reconstruct(const DenseVector& h, const CompressionOutcome& out) {
  return std::visit(
      [&](const auto& p) -> DenseVector {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, SkipPayload>) {
          return h;
        } else if constexpr (std::is_same_v<P, FullPayload>) {
          return out.vector;
        } else {
          DenseVector v = h;
          for (std::size_t i = 0; i < p.indices.size(); ++i) {
            v[p.indices[i]] = h[p.indices[i]] + p.values[i];
          }
          return v;
        }
      },
      out.payload);
}

TriggerPredicate TriggerPredicate::lazy(double zeta) {
  require_zeta(zeta);
  return TriggerPredicate{PredicateKind::kLazy, zeta, ContractorSpec::identity()};
}

TriggerPredicate TriggerPredicate::compressed_lazy(ContractorSpec c,
                                                   double zeta) {
  require_zeta(zeta);
  return TriggerPredicate{PredicateKind::kCompressedLazy, zeta, c};
}

TriggerPredicate TriggerPredicate::absolute(double tau) {
  if (!(tau >= 0.0)) throw std::invalid_argument("threshold must be >= 0");
  return TriggerPredicate{PredicateKind::kAbsolute, tau,
                          ContractorSpec::identity()};
}

bool TriggerPredicate::evaluate(const DenseVector& h, const DenseVector& y,
                                const DenseVector& x, SeededRng& rng) const {
  require_dims(h, y, x);
  switch (kind) {
    case PredicateKind::kLazy:
      return squared_distance(x, h) <= threshold * squared_distance(x, y);
    case PredicateKind::kCompressedLazy: {
      const CompressionOutcome v = ef21_compress(contractor, h, y, x, rng);
      return squared_distance(x, v.vector) <=
             threshold * squared_distance(x, y);
    }
    case PredicateKind::kAbsolute:
      return squared_distance(x, h) <= threshold;
  }
  return false;
}

std::string TriggerPredicate::to_string() const {
  switch (kind) {
    case PredicateKind::kLazy:
      return "lazy:" + format_real(threshold);
    case PredicateKind::kCompressedLazy:
      return "clazy:" + contractor.to_string() + ":" + format_real(threshold);
    case PredicateKind::kAbsolute:
      return "abs:" + format_real(threshold);
  }
  return "?";
}

ThreePCSpec ThreePCSpec::identity() { return ThreePCSpec{}; }

ThreePCSpec ThreePCSpec::ef21(ContractorSpec c) {
  ThreePCSpec s;
  s.kind = ThreePCKind::kEF21;
  s.contractors = {c};
  return s;
}

ThreePCSpec ThreePCSpec::lag(double zeta) {
  require_zeta(zeta);
  ThreePCSpec s;
  s.kind = ThreePCKind::kLAG;
  s.zeta = zeta;
  return s;
}

ThreePCSpec ThreePCSpec::clag(ContractorSpec c, double zeta) {
  require_zeta(zeta);
  ThreePCSpec s;
  s.kind = ThreePCKind::kCLAG;
  s.contractors = {c};
  s.zeta = zeta;
  return s;
}

ThreePCSpec ThreePCSpec::adacgd(std::vector<ContractorSpec> contractors,
                                double zeta) {
  require_zeta(zeta);
  if (contractors.empty()) {
    throw std::invalid_argument("AdaCGD needs at least one contractor");
  }
  for (std::size_t j = 1; j < contractors.size(); ++j) {
    if (alpha_rank(contractors[j]) < alpha_rank(contractors[j - 1])) {
      throw std::invalid_argument(
          "AdaCGD contractors must be sorted by ascending alpha");
    }
  }
  ThreePCSpec s;
  s.kind = ThreePCKind::kAdaCGD;
  s.contractors = std::move(contractors);
  s.zeta = zeta;
  return s;
}

ThreePCSpec ThreePCSpec::ada3pc(std::vector<ThreePCSpec> branches,
                                std::vector<TriggerPredicate> predicates) {
  if (branches.empty() || predicates.size() + 1 != branches.size()) {
    throw std::invalid_argument(
        "Ada3PC needs m >= 1 branches and exactly m - 1 predicates");
  }
  ThreePCSpec s;
  s.kind = ThreePCKind::kAda3PC;
  s.branches = std::move(branches);
  s.predicates = std::move(predicates);
  return s;
}

void ThreePCSpec::validate(std::size_t dim) const {
  if (dim == 0) throw std::invalid_argument("dimension must be positive");
  require_zeta(zeta);
  for (const auto& c : contractors) c.alpha(dim);
  switch (kind) {
    case ThreePCKind::kEF21:
    case ThreePCKind::kCLAG:
      if (contractors.size() != 1) {
        throw std::invalid_argument("EF21/CLAG take exactly one contractor");
      }
      break;
    case ThreePCKind::kAdaCGD:
      if (contractors.empty()) {
        throw std::invalid_argument("AdaCGD needs at least one contractor");
      }
      break;
    case ThreePCKind::kAda3PC:
      if (branches.empty() || predicates.size() + 1 != branches.size()) {
        throw std::invalid_argument("Ada3PC predicate arity mismatch");
      }
      for (const auto& b : branches) b.validate(dim);
      for (const auto& p : predicates) p.contractor.alpha(dim);
      break;
    default:
      break;
  }
}

bool ThreePCSpec::randomized() const {
  for (const auto& c : contractors) {
    if (c.randomized()) return true;
  }
  for (const auto& b : branches) {
    if (b.randomized()) return true;
  }
  for (const auto& p : predicates) {
    if (p.contractor.randomized()) return true;
  }
  return false;
}

std::size_t ThreePCSpec::branch_count() const {
  switch (kind) {
    case ThreePCKind::kAdaCGD:
      return contractors.size() + 1;
    case ThreePCKind::kAda3PC:
      return branches.size();
    default:
      return 2;
  }
}

ContractorSpec ThreePCSpec::strongest_contractor() const {
  switch (kind) {
    case ThreePCKind::kEF21:
    case ThreePCKind::kCLAG:
    case ThreePCKind::kAdaCGD:
      return contractors.front();
    case ThreePCKind::kAda3PC: {
      ContractorSpec best = ContractorSpec::identity();
      for (const auto& b : branches) {
        const ContractorSpec c = b.strongest_contractor();
        if (alpha_rank(c) < alpha_rank(best)) best = c;
      }
      return best;
    }
    default:
      return ContractorSpec::identity();
  }
}

std::string ThreePCSpec::to_string() const {
  switch (kind) {
    case ThreePCKind::kIdentity:
      return "identity";
    case ThreePCKind::kEF21:
      return "ef21:" + contractors.front().to_string();
    case ThreePCKind::kLAG:
      return "lag:" + format_real(zeta);
    case ThreePCKind::kCLAG:
      return "clag:" + contractors.front().to_string() + ":" +
             format_real(zeta);
    case ThreePCKind::kAdaCGD: {
      std::string out = "adacgd:" + format_real(zeta) + ":";
      for (std::size_t j = 0; j < contractors.size(); ++j) {
        if (j > 0) out += ",";
        out += contractors[j].to_string();
      }
      return out;
    }
    case ThreePCKind::kAda3PC: {
      std::string out = "ada3pc[";
      for (std::size_t j = 0; j < branches.size(); ++j) {
        if (j > 0) out += "|";
        out += branches[j].to_string();
        if (j < predicates.size()) out += "?" + predicates[j].to_string();
      }
      return out + "]";
    }
  }
  return "?";
}

ThreePCSpec adacgd_as_ada3pc(const ThreePCSpec& spec) {
  if (spec.kind != ThreePCKind::kAdaCGD) {
    throw std::invalid_argument("adacgd_as_ada3pc expects an AdaCGD spec");
  }
  std::vector<ThreePCSpec> branches{ThreePCSpec::lag(spec.zeta)};
  std::vector<TriggerPredicate> predicates{TriggerPredicate::lazy(spec.zeta)};
  const std::size_t m = spec.contractors.size();
  for (std::size_t j = 0; j < m; ++j) {
    branches.push_back(ThreePCSpec::ef21(spec.contractors[j]));
    if (j + 1 < m) {
      predicates.push_back(
          TriggerPredicate::compressed_lazy(spec.contractors[j], spec.zeta));
    }
  }
  return ThreePCSpec::ada3pc(std::move(branches), std::move(predicates));
}

CompressionOutcome ef21_compress(const ContractorSpec& c, const DenseVector& h,
                                 const DenseVector& y, const DenseVector& x,
                                 SeededRng& rng) {
  require_dims(h, y, x);
  const std::size_t d = x.dim();
  if (c.is_identity_at(d)) {
    c.alpha(d);
    return CompressionOutcome{x, 1, FullPayload{}, 0};
  }
  const DenseVector diff = x - h;
  SparsePayload payload;
  payload.indices = contractor_support(c, diff, rng);
  payload.values.reserve(payload.indices.size());
  DenseVector v = h;
  for (std::uint32_t j : payload.indices) {
    payload.values.push_back(diff[j]);
    v[j] = h[j] + diff[j];
  }
  return CompressionOutcome{std::move(v), 1, std::move(payload), 0};
}

CompressionOutcome lag_compress(double zeta, const DenseVector& h,
                                const DenseVector& y, const DenseVector& x) {
  require_dims(h, y, x);
  require_zeta(zeta);
  if (squared_distance(x, h) <= zeta * squared_distance(x, y)) {
    return skip_outcome(h);
  }
  return CompressionOutcome{x, 1, FullPayload{}, 0};
}

CompressionOutcome clag_compress(const ContractorSpec& c, double zeta,
                                 const DenseVector& h, const DenseVector& y,
                                 const DenseVector& x, SeededRng& rng) {
  require_dims(h, y, x);
  require_zeta(zeta);
  if (squared_distance(x, h) > zeta * squared_distance(x, y)) {
    SeededRng stream = rng.derive(1);
    return ef21_compress(c, h, y, x, stream);
  }
  return skip_outcome(h);
}

CompressionOutcome adacgd_compress(const std::vector<ContractorSpec>& cs,
                                   double zeta, const DenseVector& h,
                                   const DenseVector& y, const DenseVector& x,
                                   SeededRng& rng) {
  if (cs.empty()) {
    throw std::invalid_argument("AdaCGD needs at least one contractor");
  }
  require_dims(h, y, x);
  require_zeta(zeta);
  const std::size_t m = cs.size();
  const double budget = zeta * squared_distance(x, y);
  if (squared_distance(x, h) <= budget) {
    CompressionOutcome out = skip_outcome(h);
    out.adaptive_branches = m;
    return out;
  }
  for (std::size_t j = 1; j <= m; ++j) {
    SeededRng stream = rng.derive(j);
    CompressionOutcome out = ef21_compress(cs[j - 1], h, y, x, stream);
    if (j == m || squared_distance(x, out.vector) <= budget) {
      out.branch_index = j;
      out.adaptive_branches = m;
      return out;
    }
  }
  throw std::logic_error("unreachable");
}

CompressionOutcome ada3pc_compress(const ThreePCSpec& spec,
                                   const DenseVector& h, const DenseVector& y,
                                   const DenseVector& x, SeededRng& rng) {
  if (spec.kind != ThreePCKind::kAda3PC || spec.branches.empty() ||
      spec.predicates.size() + 1 != spec.branches.size()) {
    throw std::invalid_argument("malformed Ada3PC spec: predicate arity");
  }
  require_dims(h, y, x);
  const std::size_t m = spec.branches.size();
  std::size_t chosen = m - 1;
  for (std::size_t j = 0; j + 1 < m; ++j) {
    SeededRng stream = rng.derive(j);
    if (spec.predicates[j].evaluate(h, y, x, stream)) {
      chosen = j;
      break;
    }
  }
  SeededRng stream = rng.derive(chosen);
  CompressionOutcome out = compress(spec.branches[chosen], h, y, x, stream);
  out.branch_index = chosen;
  out.adaptive_branches = m;
  return out;
}

CompressionOutcome compress(const ThreePCSpec& spec, const DenseVector& h,
                            const DenseVector& y, const DenseVector& x,
                            SeededRng& rng) {
  switch (spec.kind) {
    case ThreePCKind::kIdentity:
      require_dims(h, y, x);
      return CompressionOutcome{x, 1, FullPayload{}, 0};
    case ThreePCKind::kEF21:
      return ef21_compress(spec.contractors.at(0), h, y, x, rng);
    case ThreePCKind::kLAG:
      return lag_compress(spec.zeta, h, y, x);
    case ThreePCKind::kCLAG:
      return clag_compress(spec.contractors.at(0), spec.zeta, h, y, x, rng);
    case ThreePCKind::kAdaCGD:
      return adacgd_compress(spec.contractors, spec.zeta, h, y, x, rng);
    case ThreePCKind::kAda3PC:
      return ada3pc_compress(spec, h, y, x, rng);
  }
  throw std::invalid_argument("unknown 3PC kind");
}

ThreePCConstants certified_constants(const ThreePCSpec& spec,
                                     std::size_t dim) {
  spec.validate(dim);
  switch (spec.kind) {
    case ThreePCKind::kIdentity:
      return ThreePCConstants{1.0, 0.0};
    case ThreePCKind::kEF21:
      return ef21_constants(spec.contractors.front().alpha(dim));
    case ThreePCKind::kLAG:
      return ThreePCConstants{1.0, spec.zeta};
    case ThreePCKind::kCLAG: {
      ThreePCConstants c = ef21_constants(spec.contractors.front().alpha(dim));
      c.b = std::max(c.b, spec.zeta);
      return c;
    }
    case ThreePCKind::kAdaCGD: {
      std::vector<ThreePCConstants> parts{ThreePCConstants{1.0, spec.zeta}};
      for (const auto& c : spec.contractors) {
        parts.push_back(ef21_constants(c.alpha(dim)));
      }
      return combine_constants(parts);
    }
    case ThreePCKind::kAda3PC: {
      std::vector<ThreePCConstants> parts;
      for (const auto& b : spec.branches) {
        parts.push_back(certified_constants(b, dim));
      }
      return combine_constants(parts);
    }
  }
  throw std::invalid_argument("unknown 3PC kind");
}

namespace {

DenseVector gaussian(std::size_t dim, SeededRng& rng, double scale = 1.0) {
  DenseVector v(dim);
  for (std::size_t i = 0; i < dim; ++i) v[i] = scale * rng.normal();
  return v;
}

DenseVector sparse_gaussian(std::size_t dim, SeededRng& rng, double scale) {
  DenseVector v(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    if (rng.uniform() < 0.3) v[i] = scale * rng.normal();
  }
  return v;
}

double log_uniform_scale(SeededRng& rng) {
  return std::pow(10.0, 4.0 * rng.uniform() - 2.0);
}

struct Triple {
  DenseVector h, y, x;
};

Triple sample_triple(std::size_t dim, std::size_t config, SeededRng& rng) {
  const DenseVector y = gaussian(dim, rng);
  const double s_h = log_uniform_scale(rng);
  const double s_x = log_uniform_scale(rng);
  switch (config % 6) {
    case 0:
      return {y + gaussian(dim, rng, s_h), y, y + gaussian(dim, rng, s_x)};
    case 1: {
      const DenseVector ys = sparse_gaussian(dim, rng, 1.0);
      return {ys + sparse_gaussian(dim, rng, s_h), ys,
              ys + sparse_gaussian(dim, rng, s_x)};
    }
    case 2:  // collinear: x = y
      return {y + gaussian(dim, rng, s_h), y, y};
    case 3:  // coincident: h = y
      return {y, y, y + gaussian(dim, rng, s_x)};
    case 4:  // near-coincident
      return {y + gaussian(dim, rng, 1e-8), y, y + gaussian(dim, rng, s_x)};
    default: {  // x = h
      const DenseVector h = y + gaussian(dim, rng, s_h);
      return {h, y, h};
    }
  }
}

}  // namespace

ConstantsEstimate estimate_constants(const ThreePCSpec& spec, std::size_t dim,
                                     std::size_t trials, SeededRng& rng) {
  if (trials == 0) throw std::invalid_argument("trials must be >= 1");
  ConstantsEstimate est;
  est.certified = certified_constants(spec, dim);
  est.trials = trials;
  est.worst_margin = std::numeric_limits<double>::infinity();
  const bool randomized = spec.randomized();
  const double eps = std::numeric_limits<double>::epsilon();

  double max_ratio_a = 0.0;  // sup (lhs - B||x-y||^2) / ||h-y||^2
  double max_ratio_b = 0.0;  // sup (lhs - (1-A)||h-y||^2) / ||x-y||^2

  for (std::size_t t = 0; t < trials; ++t) {
    SeededRng sample_rng = rng.derive(2 * t);
    const Triple tr = sample_triple(dim, t, sample_rng);
    const double hy = squared_distance(tr.h, tr.y);
    const double xy = squared_distance(tr.x, tr.y);
    const double scale =
        squared_norm(tr.h) + squared_norm(tr.y) + squared_norm(tr.x);

    double lhs = 0.0;
    double std_err = 0.0;
    if (!randomized) {
      SeededRng draw = rng.derive(2 * t + 1);
      lhs = squared_distance(compress(spec, tr.h, tr.y, tr.x, draw).vector,
                             tr.x);
    } else {
      double sum = 0.0;
      double sum_sq = 0.0;
      const SeededRng base = rng.derive(2 * t + 1);
      for (std::size_t r = 0; r < kInnerDraws; ++r) {
        SeededRng draw = base.derive(r);
        const double e = squared_distance(
            compress(spec, tr.h, tr.y, tr.x, draw).vector, tr.x);
        sum += e;
        sum_sq += e * e;
      }
      const double n = static_cast<double>(kInnerDraws);
      lhs = sum / n;
      const double var = std::max(0.0, (sum_sq - n * lhs * lhs) / (n - 1.0));
      std_err = std::sqrt(var / n);
    }

    const double rhs = (1.0 - est.certified.a) * hy + est.certified.b * xy;
    // Roundoff floor: squared errors of order eps * |entries|.
    const double floor = 64.0 * eps * eps * scale;
    const double denom = std::max(rhs, floor);
    // Randomized specs hold in expectation; allow three standard errors.
    const double excess = lhs - 3.0 * std_err - rhs;
    if (excess > kConstantsRelTol * denom) ++est.violations;
    if (denom > 0.0) {
      est.worst_margin =
          std::min(est.worst_margin, (rhs - lhs + 3.0 * std_err) / denom);
    }
    if (hy > floor) {
      max_ratio_a = std::max(max_ratio_a, (lhs - est.certified.b * xy) / hy);
    }
    if (xy > floor) {
      max_ratio_b =
          std::max(max_ratio_b, (lhs - (1.0 - est.certified.a) * hy) / xy);
    }
  }
  est.empirical = ThreePCConstants{1.0 - max_ratio_a, max_ratio_b};
  est.pass = est.violations == 0;
  if (!std::isfinite(est.worst_margin)) est.worst_margin = 0.0;
  return est;
}

}  // namespace adacgd
