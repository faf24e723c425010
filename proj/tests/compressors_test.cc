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

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.h"

namespace adacgd {
namespace {

oracle::Vec raw(const DenseVector& v) {
  return oracle::Vec(v.values().begin(), v.values().end());
}

DenseVector gaussian(std::size_t d, SeededRng& rng, double scale = 1.0) {
  DenseVector v(d);
  for (std::size_t i = 0; i < d; ++i) v[i] = scale * rng.normal();
  return v;
}

TEST(ContractorTest, TopKExamples) {
  SeededRng rng(0, 0);
  EXPECT_EQ(apply_contractor(ContractorSpec::top_k(1), {3, -1, 2}, rng),
            (DenseVector{3, 0, 0}));
  EXPECT_EQ(apply_contractor(ContractorSpec::top_k(2), {1, 1}, rng),
            (DenseVector{1, 1}));
  EXPECT_EQ(apply_contractor(ContractorSpec::top_k(2), {-5, 4, 0, 2}, rng),
            (DenseVector{-5, 4, 0, 0}));
}

TEST(ContractorTest, TiesGoToLowestIndex) {
  SeededRng rng(0, 0);
  EXPECT_EQ(apply_contractor(ContractorSpec::top_k(1), {-0.5, 0.5}, rng),
            (DenseVector{-0.5, 0}));
  EXPECT_EQ(apply_contractor(ContractorSpec::top_k(2), {1, 2, -2, 2}, rng),
            (DenseVector{0, 2, -2, 0}));
}

TEST(ContractorTest, InvalidK) {
  SeededRng rng(0, 0);
  EXPECT_THROW(ContractorSpec::top_k(0), std::invalid_argument);
  EXPECT_THROW(apply_contractor(ContractorSpec::top_k(3), {1, 2}, rng),
               std::invalid_argument);
  EXPECT_THROW(ContractorSpec::rand_k(4).alpha(3), std::invalid_argument);
  EXPECT_DOUBLE_EQ(ContractorSpec::rand_k(3).alpha(12), 0.25);
  EXPECT_DOUBLE_EQ(ContractorSpec::identity().alpha(12), 1.0);
}

TEST(ContractorTest, TopKMatchesOracle) {
  SeededRng rng(1, 0);
  for (int t = 0; t < 300; ++t) {
    const std::size_t d = 1 + rng.uniform_index(20);
    const std::size_t k = 1 + rng.uniform_index(d);
    DenseVector x = gaussian(d, rng);
    // Force some ties.
    if (d > 2 && t % 3 == 0) x[d - 1] = -x[0];
    const DenseVector c = apply_contractor(ContractorSpec::top_k(k), x, rng);
    EXPECT_EQ(raw(c), oracle::top_k(raw(x), k));
  }
}

TEST(ContractorTest, RandKKeepsExactlyKUnscaled) {
  SeededRng rng(2, 0);
  for (int t = 0; t < 200; ++t) {
    const DenseVector x = gaussian(9, rng);
    const DenseVector c = apply_contractor(ContractorSpec::rand_k(4), x, rng);
    int kept = 0;
    for (std::size_t i = 0; i < 9; ++i) {
      if (c[i] != 0.0) {
        ++kept;
        EXPECT_EQ(c[i], x[i]);
      }
    }
    EXPECT_EQ(kept, 4);
  }
}

TEST(ContractorTest, ContractionProperty) {
  SeededRng rng(3, 0);
  for (std::size_t d : {2u, 10u, 100u}) {
    for (std::size_t k = 1; k <= d; k += std::max<std::size_t>(1, d / 4)) {
      const ContractorSpec c = ContractorSpec::top_k(k);
      for (int t = 0; t < 100; ++t) {
        const DenseVector x = gaussian(d, rng, std::pow(10.0, t % 5 - 2));
        const double lhs = squared_distance(apply_contractor(c, x, rng), x);
        EXPECT_LE(lhs, (1.0 - c.alpha(d)) * squared_norm(x) * (1 + 1e-12));
      }
    }
  }
}

TEST(ContractorTest, SupportIsSortedAndSized) {
  SeededRng rng(4, 0);
  const DenseVector x = gaussian(30, rng);
  for (const auto& c : {ContractorSpec::top_k(7), ContractorSpec::rand_k(7)}) {
    const auto s = contractor_support(c, x, rng);
    ASSERT_EQ(s.size(), 7u);
    EXPECT_TRUE(std::is_sorted(s.begin(), s.end()));
    EXPECT_EQ(std::adjacent_find(s.begin(), s.end()), s.end());
  }
}

TEST(EF21Test, Examples) {
  SeededRng rng(0, 0);
  const auto top1 = ContractorSpec::top_k(1);
  EXPECT_EQ(ef21_compress(top1, {0, 0}, {0, 0}, {2, 1}, rng).vector,
            (DenseVector{2, 0}));
  EXPECT_EQ(ef21_compress(top1, {2, 1}, {0, 0}, {2, 1}, rng).vector,
            (DenseVector{2, 1}));
  EXPECT_EQ(ef21_compress(top1, {1, 0}, {5, 5}, {2, 3}, rng).vector,
            (DenseVector{1, 3}));
}

TEST(LAGTest, Examples) {
  EXPECT_EQ(lag_compress(1.0, {1, 0}, {1, 1}, {1, 0.5}).vector,
            (DenseVector{1, 0}));
  EXPECT_EQ(lag_compress(1.0, {1, 0}, {1, 1}, {1, 0.5}).branch_index, 0u);
  EXPECT_EQ(lag_compress(0.0, {0, 0}, {1, 1}, {3, 2}).vector,
            (DenseVector{3, 2}));
  EXPECT_EQ(lag_compress(5.0, {3, 2}, {0, 0}, {3, 2}).vector,
            (DenseVector{3, 2}));
  EXPECT_TRUE(std::holds_alternative<SkipPayload>(
      lag_compress(5.0, {3, 2}, {0, 0}, {3, 2}).payload));
}

TEST(CLAGTest, Examples) {
  SeededRng rng(0, 0);
  const auto top1 = ContractorSpec::top_k(1);
  EXPECT_EQ(clag_compress(top1, 0.0, {0, 0}, {2, 1}, {2, 1}, rng).vector,
            (DenseVector{2, 0}));
  EXPECT_EQ(clag_compress(top1, 1e16, {0, 0}, {1, 1}, {2, 1}, rng).vector,
            (DenseVector{0, 0}));
  SeededRng r1(5, 5), r2(5, 5);
  EXPECT_EQ(clag_compress(top1, 0.0, {1, 1}, {0, 3}, {4, -2}, r1).vector,
            ef21_compress(top1, {1, 1}, {0, 3}, {4, -2}, r2).vector);
}

TEST(AdaCGDTest, SpecOrderingEnforced) {
  EXPECT_THROW(ThreePCSpec::adacgd({ContractorSpec::top_k(3),
                                    ContractorSpec::top_k(1)},
                                   1.0),
               std::invalid_argument);
  EXPECT_THROW(ThreePCSpec::adacgd({}, 1.0), std::invalid_argument);
  EXPECT_THROW(ThreePCSpec::adacgd({ContractorSpec::identity(),
                                    ContractorSpec::top_k(1)},
                                   1.0),
               std::invalid_argument);
  EXPECT_NO_THROW(ThreePCSpec::adacgd(
      {ContractorSpec::top_k(1), ContractorSpec::identity()}, 1.0));
}

TEST(AdaCGDTest, MatchesOracle) {
  SeededRng rng(6, 0);
  const std::vector<std::size_t> ks = {1, 2, 4, 8};
  std::vector<ContractorSpec> cs;
  for (auto k : ks) cs.push_back(ContractorSpec::top_k(k));
  std::vector<int> hits(5, 0);
  for (int t = 0; t < 2000; ++t) {
    const double zeta = std::pow(10.0, rng.uniform() * 3 - 1.5);
    const DenseVector h = gaussian(8, rng), y = gaussian(8, rng),
                      x = gaussian(8, rng, 0.5 + rng.uniform());
    const auto out = adacgd_compress(cs, zeta, h, y, x, rng);
    std::size_t branch = 99;
    const auto expect = oracle::adacgd_top_k(raw(h), raw(y), raw(x), ks, zeta,
                                             &branch);
    ASSERT_EQ(raw(out.vector), expect);
    ASSERT_EQ(out.branch_index, branch);
    ++hits[branch];
  }
  for (int b = 0; b < 5; ++b) EXPECT_GT(hits[b], 0) << "branch " << b;
}

TEST(AdaCGDTest, ZetaZeroCollapsesToWeakestCompression) {
  SeededRng rng(7, 0);
  const std::vector<ContractorSpec> cs = {ContractorSpec::top_k(1),
                                          ContractorSpec::top_k(3)};
  for (int t = 0; t < 500; ++t) {
    const DenseVector h = gaussian(6, rng), y = gaussian(6, rng),
                      x = gaussian(6, rng);
    SeededRng a(1, t), b(1, t);
    EXPECT_EQ(adacgd_compress(cs, 0.0, h, y, x, a).vector,
              ef21_compress(cs.back(), h, y, x, b).vector);
  }
}

TEST(AdaCGDTest, SingleLevelEqualsCLAG) {
  SeededRng rng(8, 0);
  for (const auto& c : {ContractorSpec::top_k(2), ContractorSpec::rand_k(2)}) {
    for (int t = 0; t < 500; ++t) {
      const double zeta = rng.uniform() * 2;
      const DenseVector h = gaussian(5, rng), y = gaussian(5, rng),
                        x = gaussian(5, rng);
      SeededRng a(2, t), b(2, t);
      EXPECT_EQ(adacgd_compress({c}, zeta, h, y, x, a).vector,
                clag_compress(c, zeta, h, y, x, b).vector);
    }
  }
}

TEST(AdaCGDTest, HugeZetaSkips) {
  SeededRng rng(0, 0);
  const auto out = adacgd_compress({ContractorSpec::top_k(1)}, 1e16, {1, 1},
                                   {0, 0}, {5, -3}, rng);
  EXPECT_EQ(out.branch_index, 0u);
  EXPECT_EQ(out.vector, (DenseVector{1, 1}));
}

TEST(Ada3PCTest, ArityAndDelegation) {
  EXPECT_THROW(ThreePCSpec::ada3pc({ThreePCSpec::lag(1)},
                                   {TriggerPredicate::lazy(1)}),
               std::invalid_argument);
  SeededRng r1(3, 3), r2(3, 3);
  const auto ef = ThreePCSpec::ef21(ContractorSpec::top_k(1));
  const auto single = ThreePCSpec::ada3pc({ef}, {});
  const DenseVector h{1, 2, 3}, y{0, 0, 0}, x{3, 1, -4};
  EXPECT_EQ(compress(single, h, y, x, r1).vector,
            ef21_compress(ContractorSpec::top_k(1), h, y, x, r2).vector);
}

TEST(Ada3PCTest, AllPredicatesFalseTakesLastBranch) {
  const auto spec = ThreePCSpec::ada3pc(
      {ThreePCSpec::lag(0), ThreePCSpec::identity()},
      {TriggerPredicate::absolute(0.0)});
  SeededRng rng(0, 0);
  const auto out = compress(spec, {0, 0}, {0, 0}, {1, 1}, rng);
  EXPECT_EQ(out.branch_index, 1u);
  EXPECT_EQ(out.vector, (DenseVector{1, 1}));
}

TEST(Ada3PCTest, ChainEquivalenceTopAndRand) {
  SeededRng rng(9, 0);
  for (const bool randomized : {false, true}) {
    std::vector<ContractorSpec> cs;
    for (std::size_t k : {1u, 3u, 6u}) {
      cs.push_back(randomized ? ContractorSpec::rand_k(k)
                              : ContractorSpec::top_k(k));
    }
    const auto ada = ThreePCSpec::adacgd(cs, 0.8);
    const auto chain = adacgd_as_ada3pc(ada);
    EXPECT_EQ(chain.branches.size(), cs.size() + 1);
    for (int t = 0; t < 1000; ++t) {
      const DenseVector h = gaussian(10, rng), y = gaussian(10, rng),
                        x = gaussian(10, rng);
      SeededRng a(4, t), b(4, t);
      const auto u = compress(ada, h, y, x, a);
      const auto v = compress(chain, h, y, x, b);
      ASSERT_EQ(u.vector, v.vector);
      ASSERT_EQ(u.branch_index, v.branch_index);
    }
  }
}

TEST(PayloadTest, ReconstructionIsExact) {
  SeededRng rng(10, 0);
  const std::vector<ThreePCSpec> specs = {
      ThreePCSpec::identity(),
      ThreePCSpec::ef21(ContractorSpec::top_k(2)),
      ThreePCSpec::ef21(ContractorSpec::rand_k(3)),
      ThreePCSpec::ef21(ContractorSpec::top_k(6)),
      ThreePCSpec::lag(0.5),
      ThreePCSpec::clag(ContractorSpec::top_k(1), 0.5),
      ThreePCSpec::adacgd({ContractorSpec::top_k(1), ContractorSpec::top_k(3),
                           ContractorSpec::identity()},
                          0.5),
  };
  for (const auto& spec : specs) {
    for (int t = 0; t < 300; ++t) {
      const DenseVector h = gaussian(6, rng), y = gaussian(6, rng),
                        x = gaussian(6, rng);
      const auto out = compress(spec, h, y, x, rng);
      ASSERT_EQ(reconstruct(h, out), out.vector) << spec.to_string();
    }
  }
}

TEST(ConstantsTest, CertifiedValues) {
  EXPECT_EQ(certified_constants(ThreePCSpec::identity(), 5),
            (ThreePCConstants{1, 0}));
  EXPECT_EQ(certified_constants(ThreePCSpec::lag(2), 5),
            (ThreePCConstants{1, 2}));
  const auto ef = certified_constants(
      ThreePCSpec::ef21(ContractorSpec::top_k(1)), 4);
  const auto o = oracle::ef21_constants(0.25);
  EXPECT_DOUBLE_EQ(ef.a, o.a);
  EXPECT_DOUBLE_EQ(ef.b, o.b);
  EXPECT_EQ(certified_constants(ThreePCSpec::ef21(ContractorSpec::top_k(4)), 4),
            (ThreePCConstants{1, 0}));
  const auto clag = certified_constants(
      ThreePCSpec::clag(ContractorSpec::top_k(1), 10.0), 4);
  EXPECT_DOUBLE_EQ(clag.a, o.a);
  EXPECT_DOUBLE_EQ(clag.b, 10.0);
}

TEST(ConstantsTest, AdaCGDWorkedExample) {
  const auto c = certified_constants(
      ThreePCSpec::adacgd({ContractorSpec::top_k(1), ContractorSpec::top_k(4)},
                          2.0),
      4);
  EXPECT_NEAR(c.a, 1.0 - std::sqrt(0.75), 1e-15);
  EXPECT_NEAR(c.a, 0.1340, 1e-4);
  EXPECT_NEAR(c.b, 0.75 / (1.0 - std::sqrt(0.75)), 1e-12);
  EXPECT_NEAR(c.b, 5.598, 1e-3);
}

TEST(ConstantsTest, EstimatePassesForEveryRule) {
  SeededRng rng(11, 0);
  const std::vector<std::pair<ThreePCSpec, std::size_t>> cases = {
      {ThreePCSpec::identity(), 4},
      {ThreePCSpec::ef21(ContractorSpec::top_k(1)), 2},
      {ThreePCSpec::lag(1.0), 3},
      {ThreePCSpec::clag(ContractorSpec::top_k(2), 0.7), 6},
      {ThreePCSpec::adacgd({ContractorSpec::top_k(1), ContractorSpec::top_k(3)},
                           1.5),
       6},
  };
  for (const auto& [spec, d] : cases) {
    const auto est = estimate_constants(spec, d, 10000, rng);
    EXPECT_TRUE(est.pass) << spec.to_string();
    EXPECT_EQ(est.violations, 0u) << spec.to_string();
    EXPECT_LE(est.empirical.b, est.certified.b * (1 + 1e-9) + 1e-12);
    EXPECT_GE(est.empirical.a, est.certified.a * (1 - 1e-9) - 1e-12);
  }
  const auto id = estimate_constants(ThreePCSpec::identity(), 3, 100, rng);
  EXPECT_EQ(id.empirical, (ThreePCConstants{1, 0}));
}

TEST(TriggerTest, MonotoneInZeta) {
  SeededRng rng(13, 0);
  for (int t = 0; t < 500; ++t) {
    const DenseVector h = gaussian(4, rng), y = gaussian(4, rng),
                      x = gaussian(4, rng);
    bool prev = false;
    for (double zeta : {0.0, 0.1, 0.5, 1.0, 2.0, 10.0}) {
      SeededRng r(0, 0);
      const bool fire = TriggerPredicate::lazy(zeta).evaluate(h, y, x, r);
      EXPECT_TRUE(!prev || fire);
      prev = fire;
    }
  }
}

TEST(SpecTest, ToStringAndBranchCount) {
  EXPECT_EQ(ThreePCSpec::ef21(ContractorSpec::top_k(1)).to_string(), "ef21:top1");
  EXPECT_EQ(ThreePCSpec::lag(0.5).to_string(), "lag:0.5");
  const auto ada = ThreePCSpec::adacgd(
      {ContractorSpec::top_k(1), ContractorSpec::top_k(5)}, 1);
  EXPECT_EQ(ada.to_string(), "adacgd:1:top1,top5");
  EXPECT_EQ(ada.branch_count(), 3u);
  EXPECT_EQ(ThreePCSpec::lag(1).branch_count(), 2u);
  EXPECT_EQ(ada.strongest_contractor(), ContractorSpec::top_k(1));
  EXPECT_THROW(ada.validate(4), std::invalid_argument);
  EXPECT_NO_THROW(ada.validate(5));
}

TEST(DeterminismTest, RandKUsesOnlyItsStream) {
  const auto spec = ThreePCSpec::ef21(ContractorSpec::rand_k(2));
  const DenseVector h{1, 2, 3, 4}, y{0, 0, 0, 0}, x{4, 3, 2, 1};
  SeededRng a(77, 3), b(77, 3);
  EXPECT_EQ(compress(spec, h, y, x, a).vector, compress(spec, h, y, x, b).vector);
}

}  // namespace
}  // namespace adacgd
