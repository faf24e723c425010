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

#ifndef ADACGD_CORE_TYPES_H_
#define ADACGD_CORE_TYPES_H_

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

namespace adacgd {

// Dense vector in R^d. All numeric work in the library is done in double
// precision; communication cost is accounted separately (see engine.h).
//
// Constructing from values rejects NaN/Inf. Arithmetic operators do not
// re-check, so callers that may produce non-finite values (the engine under
// an oversized stepsize) call is_finite() explicitly.
class DenseVector {
 public:
  DenseVector() = default;
  explicit DenseVector(std::size_t dim);
  explicit DenseVector(std::vector<double> values);
  DenseVector(std::initializer_list<double> values);

  std::size_t dim() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  std::span<const double> values() const { return values_; }
  std::span<double> mutable_values() { return values_; }

  bool is_finite() const;

  DenseVector& operator+=(const DenseVector& other);
  DenseVector& operator-=(const DenseVector& other);
  DenseVector& operator*=(double scale);

  friend bool operator==(const DenseVector&, const DenseVector&) = default;

 private:
  std::vector<double> values_;
};

DenseVector operator+(DenseVector lhs, const DenseVector& rhs);
DenseVector operator-(DenseVector lhs, const DenseVector& rhs);
DenseVector operator*(double scale, DenseVector v);

double dot(const DenseVector& u, const DenseVector& v);
double squared_norm(const DenseVector& v);

// Sum_j (u_j - v_j)^2. Throws std::invalid_argument on dimension mismatch.
double squared_distance(const DenseVector& u, const DenseVector& v);

// Throws std::invalid_argument unless u.dim() == v.dim().
void require_same_dim(const DenseVector& u, const DenseVector& v);

// (A, B) pair of a three point compressor:
//   E||C_{h,y}(x) - x||^2 <= (1 - A)||h - y||^2 + B||x - y||^2,
// with 0 < A <= 1 and B >= 0.
struct ThreePCConstants {
  double a = 1.0;
  double b = 0.0;

  // Validating constructor; throws std::invalid_argument.
  static ThreePCConstants make(double a, double b);

  friend bool operator==(const ThreePCConstants&,
                         const ThreePCConstants&) = default;
};

// Constants of a compressor that dispatches among `parts`:
// (min over a, max over b). Throws std::invalid_argument on empty input.
ThreePCConstants combine_constants(std::span<const ThreePCConstants> parts);

// Counter-based generator keyed by (seed, stream_id). Draw k of a stream is a
// pure function of (seed, stream_id, k), so results do not depend on how
// streams are interleaved. Instances are single-owner.
class SeededRng {
 public:
  SeededRng(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  std::uint64_t next_u64();
  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  // Standard normal via Box-Muller; consumes two draws per value.
  double normal();
  // Uniform in [0, n). n must be positive.
  std::uint64_t uniform_index(std::uint64_t n);

  // Independent child stream, e.g. derive(round).derive(worker).
  SeededRng derive(std::uint64_t sub_stream) const;

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace adacgd

#endif  // ADACGD_CORE_TYPES_H_
