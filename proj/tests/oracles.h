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

// Reference implementations used as test oracles. Written directly from the
// defining formulas on std::vector<double>, sharing no code with the library.

#ifndef ADACGD_TESTS_ORACLES_H_
#define ADACGD_TESTS_ORACLES_H_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;

inline double sqdist(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

inline Vec sub(const Vec& a, const Vec& b) {
  Vec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

inline Vec add(const Vec& a, const Vec& b) {
  Vec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

// Stable sort by magnitude, so equal magnitudes keep ascending index order.
inline Vec top_k(const Vec& x, std::size_t k) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(x[a]) > std::abs(x[b]);
  });
  Vec out(x.size(), 0.0);
  for (std::size_t j = 0; j < k && j < x.size(); ++j) out[idx[j]] = x[idx[j]];
  return out;
}

// With k >= d the full vector is sent, so the result is x itself rather than
// h + (x - h).
inline Vec ef21_top_k(const Vec& h, const Vec& x, std::size_t k) {
  if (k >= x.size()) return x;
  return add(h, top_k(sub(x, h), k));
}

inline Vec lag(const Vec& h, const Vec& y, const Vec& x, double zeta) {
  return sqdist(x, h) <= zeta * sqdist(x, y) ? h : x;
}

inline Vec clag_top_k(const Vec& h, const Vec& y, const Vec& x, std::size_t k,
                      double zeta) {
  return sqdist(x, h) > zeta * sqdist(x, y) ? ef21_top_k(h, x, k) : h;
}

// Returns the chosen vector; *branch gets 0 for skip, j for candidate j.
inline Vec adacgd_top_k(const Vec& h, const Vec& y, const Vec& x,
                        const std::vector<std::size_t>& ks, double zeta,
                        std::size_t* branch = nullptr) {
  const double budget = zeta * sqdist(x, y);
  if (sqdist(x, h) <= budget) {
    if (branch) *branch = 0;
    return h;
  }
  for (std::size_t j = 0; j < ks.size(); ++j) {
    Vec v = ef21_top_k(h, x, ks[j]);
    if (j + 1 == ks.size() || sqdist(x, v) <= budget) {
      if (branch) *branch = j + 1;
      return v;
    }
  }
  return h;
}

struct AB {
  double a, b;
};

inline AB ef21_constants(double alpha) {
  if (alpha >= 1.0) return {1.0, 0.0};
  const double r = std::sqrt(1.0 - alpha);
  return {1.0 - r, (1.0 - alpha) / (1.0 - r)};
}

}  // namespace oracle

#endif  // ADACGD_TESTS_ORACLES_H_
