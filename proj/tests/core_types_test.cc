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

#include <cmath>
#include <limits>
#include <set>
#include <vector>

#include <gtest/gtest.h>

namespace adacgd {
namespace {

TEST(DenseVectorTest, RejectsNonFiniteEntries) {
  EXPECT_THROW(DenseVector({1.0, std::nan("")}), std::invalid_argument);
  EXPECT_THROW(DenseVector({std::numeric_limits<double>::infinity()}),
               std::invalid_argument);
  EXPECT_NO_THROW(DenseVector({1.0, -2.0}));
}

TEST(DenseVectorTest, ArithmeticAndDims) {
  DenseVector a{1.0, 2.0};
  const DenseVector b{3.0, -1.0};
  EXPECT_EQ(a + b, (DenseVector{4.0, 1.0}));
  EXPECT_EQ(a - b, (DenseVector{-2.0, 3.0}));
  EXPECT_EQ(2.0 * a, (DenseVector{2.0, 4.0}));
  EXPECT_DOUBLE_EQ(dot(a, b), 1.0);
  EXPECT_DOUBLE_EQ(squared_norm(a), 5.0);
  EXPECT_THROW(a += DenseVector(3), std::invalid_argument);
  EXPECT_EQ(DenseVector(4).dim(), 4u);
}

TEST(SquaredDistanceTest, Examples) {
  EXPECT_EQ(squared_distance(DenseVector{1, 2}, DenseVector{1, 2}), 0.0);
  EXPECT_EQ(squared_distance(DenseVector{3, 0}, DenseVector{0, 4}), 25.0);
  EXPECT_EQ(squared_distance(DenseVector{1}, DenseVector{-1}), 4.0);
  EXPECT_THROW(squared_distance(DenseVector{1}, DenseVector{1, 2}),
               std::invalid_argument);
}

TEST(SquaredDistanceTest, SymmetricAndNonNegative) {
  SeededRng rng(3, 0);
  for (int t = 0; t < 500; ++t) {
    DenseVector u(7), v(7);
    for (std::size_t i = 0; i < 7; ++i) {
      u[i] = rng.normal() * 10;
      v[i] = rng.normal();
    }
    EXPECT_EQ(squared_distance(u, v), squared_distance(v, u));
    EXPECT_GE(squared_distance(u, v), 0.0);
    EXPECT_EQ(squared_distance(u, u), 0.0);
  }
}

TEST(ThreePCConstantsTest, Validation) {
  EXPECT_NO_THROW(ThreePCConstants::make(1.0, 0.0));
  EXPECT_THROW(ThreePCConstants::make(0.0, 1.0), std::invalid_argument);
  EXPECT_THROW(ThreePCConstants::make(1.5, 1.0), std::invalid_argument);
  EXPECT_THROW(ThreePCConstants::make(0.5, -1.0), std::invalid_argument);
}

TEST(CombineConstantsTest, Examples) {
  const std::vector<ThreePCConstants> a = {{0.5, 1}, {0.2, 3}};
  EXPECT_EQ(combine_constants(a), (ThreePCConstants{0.2, 3}));
  const std::vector<ThreePCConstants> b = {{1, 0}};
  EXPECT_EQ(combine_constants(b), (ThreePCConstants{1, 0}));
  const std::vector<ThreePCConstants> c = {{0.3, 2}, {0.3, 5}, {0.9, 0}};
  EXPECT_EQ(combine_constants(c), (ThreePCConstants{0.3, 5}));
  EXPECT_THROW(combine_constants({}), std::invalid_argument);
}

TEST(CombineConstantsTest, IdempotentAndOrderInvariant) {
  SeededRng rng(9, 1);
  for (int t = 0; t < 200; ++t) {
    std::vector<ThreePCConstants> parts;
    const std::size_t m = 1 + rng.uniform_index(6);
    for (std::size_t j = 0; j < m; ++j) {
      parts.push_back({0.01 + 0.99 * rng.uniform(), 10 * rng.uniform()});
    }
    const ThreePCConstants c = combine_constants(parts);
    std::vector<ThreePCConstants> doubled = parts;
    doubled.insert(doubled.end(), parts.begin(), parts.end());
    EXPECT_EQ(combine_constants(doubled), c);
    std::vector<ThreePCConstants> reversed(parts.rbegin(), parts.rend());
    EXPECT_EQ(combine_constants(reversed), c);
    const std::vector<ThreePCConstants> single = {c};
    EXPECT_EQ(combine_constants(single), c);
  }
}

TEST(SeededRngTest, Reproducible) {
  SeededRng a(42, 7), b(42, 7), c(42, 8), d(43, 7);
  bool differs_stream = false, differs_seed = false;
  for (int i = 0; i < 100; ++i) {
    const auto va = a.next_u64();
    EXPECT_EQ(va, b.next_u64());
    differs_stream |= va != c.next_u64();
    differs_seed |= va != d.next_u64();
  }
  EXPECT_TRUE(differs_stream);
  EXPECT_TRUE(differs_seed);
}

TEST(SeededRngTest, DeriveIndependentOfParentPosition) {
  SeededRng a(1, 2);
  const SeededRng child_before = a.derive(5);
  a.next_u64();
  a.next_u64();
  SeededRng x = child_before;
  SeededRng y = a.derive(5);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(x.next_u64(), y.next_u64());
  SeededRng z = a.derive(6);
  SeededRng w = a.derive(5);
  EXPECT_NE(z.next_u64(), w.next_u64());
}

TEST(SeededRngTest, UniformAndIndexRanges) {
  SeededRng rng(5, 5);
  double sum = 0.0;
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 20000; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
    const auto k = rng.uniform_index(7);
    ASSERT_LT(k, 7u);
    seen.insert(k);
  }
  EXPECT_NEAR(sum / 20000, 0.5, 0.01);
  EXPECT_EQ(seen.size(), 7u);
}

TEST(SeededRngTest, NormalMoments) {
  SeededRng rng(8, 0);
  double s = 0.0, s2 = 0.0;
  const int n = 40000;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    s += z;
    s2 += z * z;
  }
  EXPECT_NEAR(s / n, 0.0, 0.03);
  EXPECT_NEAR(s2 / n, 1.0, 0.03);
}

}  // namespace
}  // namespace adacgd
