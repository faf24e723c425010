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

#ifndef ADACGD_PROBLEMS_H_
#define ADACGD_PROBLEMS_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "adacgd/core_types.h"

namespace adacgd {

// One client's examples in compressed sparse row form. Column indices are
// 0-based.
class ClientShard {
 public:
  struct Entry {
    std::uint32_t column;
    double value;
  };

  void add_example(double label, std::vector<Entry> features);

  std::size_t num_examples() const { return labels_.size(); }
  double label(std::size_t row) const { return labels_[row]; }
  std::span<const Entry> row(std::size_t r) const;
  double row_squared_norm(std::size_t r) const;
  // Largest column index + 1 (0 for an empty shard).
  std::size_t min_dim() const { return min_dim_; }

 private:
  std::vector<double> labels_;
  std::vector<std::size_t> offsets_{0};
  std::vector<Entry> entries_;
  std::size_t min_dim_ = 0;
};

enum class ProblemKind { kLogisticNonconvex, kQuadratic };

// f(x) = (1/n) sum_i f_i(x) over n clients.
//
// Logistic: f_i(x) = (1/N_i) sum_j log(1 + exp(-y_j a_j^T x))
//                    + lambda sum_k x_k^2 / (1 + x_k^2).
// Quadratic: every client holds f_i(x) = 1/2 sum_k diag_k x_k^2.
class Problem {
 public:
  static Problem logistic(std::vector<ClientShard> shards, std::size_t dim,
                          double lambda);
  static Problem quadratic(DenseVector diagonal, std::size_t num_clients);

  ProblemKind kind() const { return kind_; }
  std::size_t dim() const { return dim_; }
  std::size_t num_clients() const { return num_clients_; }
  double lambda() const { return lambda_; }
  const std::vector<ClientShard>& shards() const { return shards_; }
  const DenseVector& diagonal() const { return diagonal_; }

  double loss(const DenseVector& x) const;
  double client_loss(std::size_t client, const DenseVector& x) const;
  DenseVector client_gradient(std::size_t client, const DenseVector& x) const;
  // Mean of client gradients, summed in ascending client order.
  DenseVector gradient(const DenseVector& x) const;

  // Known exact minimum, if any (quadratics: 0 at the origin).
  std::optional<double> exact_minimum() const;

 private:
  Problem() = default;
  void check_dim(const DenseVector& x) const;
  double regularizer(const DenseVector& x) const;

  ProblemKind kind_ = ProblemKind::kQuadratic;
  std::size_t dim_ = 0;
  std::size_t num_clients_ = 0;
  double lambda_ = 0.0;
  std::vector<ClientShard> shards_;
  DenseVector diagonal_;
};

struct SmoothnessConstants {
  double l_minus = 0.0;  // smoothness of f
  double l_plus = 0.0;   // root-mean-square smoothness over clients
  std::optional<double> mu;
};

// Closed-form upper bounds. Logistic: L_i = (1/(4 N_i)) sum ||a_j||^2 +
// 2 lambda, l_minus = mean L_i, l_plus = sqrt(mean L_i^2). Quadratic:
// l_minus = l_plus = max diag, mu = min positive diag.
SmoothnessConstants smoothness(const Problem& p);

// Max over coordinates of |fd_j - g_j| / max(1, |g_j|), where fd is the
// central difference of loss() with step `step` and g the analytic gradient.
double check_gradient(const Problem& p, const DenseVector& x, double step);

// log(1 + exp(z)) without overflow.
double softplus(double z);
// 1 / (1 + exp(-z)) without overflow.
double sigmoid(double z);

}  // namespace adacgd

#endif  // ADACGD_PROBLEMS_H_
