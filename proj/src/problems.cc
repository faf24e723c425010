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

#include "adacgd/problems.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace adacgd {

double softplus(double z) {
  return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void ClientShard::add_example(double label, std::vector<Entry> features) {
  labels_.push_back(label);
  for (const Entry& e : features) {
    min_dim_ = std::max<std::size_t>(min_dim_, e.column + 1);
    entries_.push_back(e);
  }
  offsets_.push_back(entries_.size());
}

std::span<const ClientShard::Entry> ClientShard::row(std::size_t r) const {
  return std::span<const Entry>(entries_).subspan(
      offsets_[r], offsets_[r + 1] - offsets_[r]);
}

double ClientShard::row_squared_norm(std::size_t r) const {
  double s = 0.0;
  for (const Entry& e : row(r)) s += e.value * e.value;
  return s;
}

Problem Problem::logistic(std::vector<ClientShard> shards, std::size_t dim,
                          double lambda) {
  if (shards.empty()) throw std::invalid_argument("need at least one client");
  if (dim == 0) throw std::invalid_argument("dimension must be positive");
  if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be >= 0");
  for (const auto& s : shards) {
    if (s.num_examples() == 0) {
      throw std::invalid_argument("every client shard must be non-empty");
    }
    if (s.min_dim() > dim) {
      throw std::invalid_argument("shard feature index exceeds dimension");
    }
  }
  Problem p;
  p.kind_ = ProblemKind::kLogisticNonconvex;
  p.dim_ = dim;
  p.num_clients_ = shards.size();
  p.lambda_ = lambda;
  p.shards_ = std::move(shards);
  return p;
}

Problem Problem::quadratic(DenseVector diagonal, std::size_t num_clients) {
  if (num_clients == 0) throw std::invalid_argument("need at least one client");
  if (diagonal.dim() == 0) {
    throw std::invalid_argument("dimension must be positive");
  }
  bool any_positive = false;
  for (double v : diagonal.values()) {
    if (v < 0.0) {
      throw std::invalid_argument("quadratic diagonal must be >= 0");
    }
    any_positive = any_positive || v > 0.0;
  }
  if (!any_positive) {
    throw std::invalid_argument("quadratic diagonal needs a positive entry");
  }
  Problem p;
  p.kind_ = ProblemKind::kQuadratic;
  p.dim_ = diagonal.dim();
  p.num_clients_ = num_clients;
  p.diagonal_ = std::move(diagonal);
  return p;
}

void Problem::check_dim(const DenseVector& x) const {
  if (x.dim() != dim_) {
    throw std::invalid_argument("dimension mismatch: problem has d=" +
                                std::to_string(dim_) + ", x has " +
                                std::to_string(x.dim()));
  }
}

double Problem::regularizer(const DenseVector& x) const {
  double r = 0.0;
  for (double v : x.values()) {
    const double sq = v * v;
    r += sq / (1.0 + sq);
  }
  return lambda_ * r;
}

double Problem::client_loss(std::size_t client, const DenseVector& x) const {
  check_dim(x);
  if (client >= num_clients_) throw std::out_of_range("client index");
  if (kind_ == ProblemKind::kQuadratic) {
    double s = 0.0;
    for (std::size_t k = 0; k < dim_; ++k) s += diagonal_[k] * x[k] * x[k];
    return 0.5 * s;
  }
  const ClientShard& shard = shards_[client];
  double sum = 0.0;
  for (std::size_t r = 0; r < shard.num_examples(); ++r) {
    double margin = 0.0;
    for (const auto& e : shard.row(r)) margin += e.value * x[e.column];
    sum += softplus(-shard.label(r) * margin);
  }
  return sum / static_cast<double>(shard.num_examples()) + regularizer(x);
}

double Problem::loss(const DenseVector& x) const {
  check_dim(x);
  if (kind_ == ProblemKind::kQuadratic) return client_loss(0, x);
  double sum = 0.0;
  for (std::size_t i = 0; i < num_clients_; ++i) sum += client_loss(i, x);
  return sum / static_cast<double>(num_clients_);
}

DenseVector Problem::client_gradient(std::size_t client,
                                     const DenseVector& x) const {
  check_dim(x);
  if (client >= num_clients_) throw std::out_of_range("client index");
  DenseVector g(dim_);
  if (kind_ == ProblemKind::kQuadratic) {
    for (std::size_t k = 0; k < dim_; ++k) g[k] = diagonal_[k] * x[k];
    return g;
  }
  const ClientShard& shard = shards_[client];
  const double inv_n = 1.0 / static_cast<double>(shard.num_examples());
  for (std::size_t r = 0; r < shard.num_examples(); ++r) {
    const auto row = shard.row(r);
    double margin = 0.0;
    for (const auto& e : row) margin += e.value * x[e.column];
    const double y = shard.label(r);
    const double coeff = -y * sigmoid(-y * margin) * inv_n;
    for (const auto& e : row) g[e.column] += coeff * e.value;
  }
  for (std::size_t k = 0; k < dim_; ++k) {
    const double denom = 1.0 + x[k] * x[k];
    g[k] += 2.0 * lambda_ * x[k] / (denom * denom);
  }
  return g;
}

DenseVector Problem::gradient(const DenseVector& x) const {
  DenseVector g(dim_);
  for (std::size_t i = 0; i < num_clients_; ++i) g += client_gradient(i, x);
  g *= 1.0 / static_cast<double>(num_clients_);
  return g;
}

std::optional<double> Problem::exact_minimum() const {
  if (kind_ == ProblemKind::kQuadratic) return 0.0;
  return std::nullopt;
}

SmoothnessConstants smoothness(const Problem& p) {
  SmoothnessConstants sc;
  if (p.kind() == ProblemKind::kQuadratic) {
    double lo = 0.0;
    double hi = 0.0;
    for (double v : p.diagonal().values()) {
      hi = std::max(hi, v);
      if (v > 0.0 && (lo == 0.0 || v < lo)) lo = v;
    }
    sc.l_minus = hi;
    sc.l_plus = hi;
    sc.mu = lo;
    return sc;
  }
  double sum = 0.0;
  double sum_sq = 0.0;
  for (const ClientShard& s : p.shards()) {
    double trace = 0.0;
    for (std::size_t r = 0; r < s.num_examples(); ++r) {
      trace += s.row_squared_norm(r);
    }
    // 2 lambda bounds |d^2/dt^2 t^2/(1+t^2)| = |2 - 6t^2| / (1+t^2)^3.
    const double li = trace / (4.0 * static_cast<double>(s.num_examples())) +
                      2.0 * p.lambda();
    sum += li;
    sum_sq += li * li;
  }
  const double n = static_cast<double>(p.num_clients());
  sc.l_plus = std::sqrt(sum_sq / n);
  sc.l_minus = std::min(sum / n, sc.l_plus);
  if (sc.l_plus <= 0.0) {
    throw std::invalid_argument(
        "degenerate problem: zero smoothness bound (no features, lambda 0)");
  }
  return sc;
}

double check_gradient(const Problem& p, const DenseVector& x, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("step must be positive");
  const DenseVector g = p.gradient(x);
  double worst = 0.0;
  DenseVector probe = x;
  for (std::size_t j = 0; j < x.dim(); ++j) {
    probe[j] = x[j] + step;
    const double up = p.loss(probe);
    probe[j] = x[j] - step;
    const double down = p.loss(probe);
    probe[j] = x[j];
    const double fd = (up - down) / (2.0 * step);
    worst = std::max(worst, std::abs(fd - g[j]) / std::max(1.0, std::abs(g[j])));
  }
  return worst;
}

}  // namespace adacgd
