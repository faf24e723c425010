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

#include "adacgd/core_types.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace adacgd {
namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

void check_finite(std::span<const double> values) {
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("DenseVector: non-finite entry");
    }
  }
}

}  // namespace

DenseVector::DenseVector(std::size_t dim) : values_(dim, 0.0) {}

DenseVector::DenseVector(std::vector<double> values)
    : values_(std::move(values)) {
  check_finite(values_);
}

DenseVector::DenseVector(std::initializer_list<double> values)
    : values_(values) {
  check_finite(values_);
}

bool DenseVector::is_finite() const {
  return std::all_of(values_.begin(), values_.end(),
                     [](double v) { return std::isfinite(v); });
}

DenseVector& DenseVector::operator+=(const DenseVector& other) {
  require_same_dim(*this, other);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other[i];
  return *this;
}

DenseVector& DenseVector::operator-=(const DenseVector& other) {
  require_same_dim(*this, other);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other[i];
  return *this;
}

DenseVector& DenseVector::operator*=(double scale) {
  for (double& v : values_) v *= scale;
  return *this;
}

DenseVector operator+(DenseVector lhs, const DenseVector& rhs) {
  lhs += rhs;
  return lhs;
}

DenseVector operator-(DenseVector lhs, const DenseVector& rhs) {
  lhs -= rhs;
  return lhs;
}

DenseVector operator*(double scale, DenseVector v) {
  v *= scale;
  return v;
}

void require_same_dim(const DenseVector& u, const DenseVector& v) {
  if (u.dim() != v.dim()) {
    throw std::invalid_argument("dimension mismatch: " +
                                std::to_string(u.dim()) + " vs " +
                                std::to_string(v.dim()));
  }
}

double dot(const DenseVector& u, const DenseVector& v) {
  require_same_dim(u, v);
  double sum = 0.0;
  for (std::size_t i = 0; i < u.dim(); ++i) sum += u[i] * v[i];
  return sum;
}

double squared_norm(const DenseVector& v) {
  double sum = 0.0;
  for (double x : v.values()) sum += x * x;
  return sum;
}

double squared_distance(const DenseVector& u, const DenseVector& v) {
  require_same_dim(u, v);
  double sum = 0.0;
  for (std::size_t i = 0; i < u.dim(); ++i) {
    const double diff = u[i] - v[i];
    sum += diff * diff;
  }
  return sum;
}

ThreePCConstants ThreePCConstants::make(double a, double b) {
  if (!(a > 0.0 && a <= 1.0)) {
    throw std::invalid_argument("3PC constant A must lie in (0, 1], got " +
                                std::to_string(a));
  }
  if (!(b >= 0.0) || !std::isfinite(b)) {
    throw std::invalid_argument("3PC constant B must be finite and >= 0, got " +
                                std::to_string(b));
  }
  return ThreePCConstants{a, b};
}

ThreePCConstants combine_constants(std::span<const ThreePCConstants> parts) {
  if (parts.empty()) {
    throw std::invalid_argument("combine_constants: empty sequence");
  }
  ThreePCConstants out = parts.front();
  for (const auto& c : parts.subspan(1)) {
    out.a = std::min(out.a, c.a);
    out.b = std::max(out.b, c.b);
  }
  return out;
}

SeededRng::SeededRng(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed),
      stream_id_(stream_id),
      key_(mix64(seed + kGolden) ^ mix64(stream_id * kGolden + 0x632BE59BD9B4E019ULL)) {}

std::uint64_t SeededRng::next_u64() {
  return mix64(key_ + (++counter_) * kGolden);
}

double SeededRng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double SeededRng::normal() {
  // 1 - uniform() lies in (0, 1], so the log is finite.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t SeededRng::uniform_index(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("uniform_index: n must be positive");
  // Rejection sampling removes modulo bias.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t r;
  do {
    r = next_u64();
  } while (r >= limit);
  return r % n;
}

SeededRng SeededRng::derive(std::uint64_t sub_stream) const {
  return SeededRng(seed_, mix64(stream_id_ ^ mix64(sub_stream + kGolden)));
}

}  // namespace adacgd
