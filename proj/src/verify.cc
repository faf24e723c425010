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

// Batch property checks behind `adacgd verify`.

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

#include "adacgd/experiments.h"

namespace adacgd {
namespace {

constexpr double kSlack = 1e-10;

DenseVector gaussian(std::size_t d, SeededRng& rng, double scale) {
  DenseVector v(d);
  for (std::size_t i = 0; i < d; ++i) v[i] = scale * rng.normal();
  return v;
}

double log_scale(SeededRng& rng) { return std::pow(10.0, 4.0 * rng.uniform() - 2.0); }

struct Triple {
  DenseVector h, y, x;
};

// Gaussian, x = y, h = y and x = h configurations in rotation.
Triple random_triple(std::size_t d, SeededRng& rng, std::size_t t) {
  Triple tr{gaussian(d, rng, log_scale(rng)), gaussian(d, rng, log_scale(rng)),
            gaussian(d, rng, log_scale(rng))};
  switch (t % 4) {
    case 1: tr.x = tr.y; break;
    case 2: tr.h = tr.y; break;
    case 3: tr.x = tr.h; break;
    default: break;
  }
  return tr;
}

PropertyResult make(std::string suite, std::string name, double margin,
                    std::string detail = {}) {
  return PropertyResult{std::move(suite), std::move(name), margin >= 0.0,
                        margin, std::move(detail)};
}

// Smallest relative slack of a <= b over a sequence.
struct SlackTracker {
  double margin = std::numeric_limits<double>::infinity();
  void add(double lhs, double rhs) {
    const double scale = std::max({std::abs(lhs), std::abs(rhs), 1e-300});
    margin = std::min(margin, (rhs - lhs) / scale + kSlack);
  }
};

Problem synthetic_logistic(std::size_t num, std::size_t dim, std::size_t n,
                           double lambda, std::uint64_t seed) {
  const Dataset data = make_synthetic_dataset(num, dim, seed);
  return make_logistic_problem(data, partition(data.examples, n, seed), lambda);
}

void compressors_suite(std::uint64_t seed, std::size_t trials,
                       std::vector<PropertyResult>& out) {
  SeededRng rng(seed, 11);
  for (std::size_t d : {2, 10, 100}) {
    for (std::size_t k : {std::size_t{1}, (d + 1) / 2}) {
      if (k == 1 && d <= 2) continue;
      const ContractorSpec c = ContractorSpec::top_k(k);
      double margin = std::numeric_limits<double>::infinity();
      for (std::size_t t = 0; t < trials; ++t) {
        const DenseVector x = gaussian(d, rng, log_scale(rng));
        const double lhs = squared_distance(apply_contractor(c, x, rng), x);
        const double rhs = (1.0 - c.alpha(d)) * squared_norm(x);
        margin = std::min(margin, (rhs - lhs) / squared_norm(x) + 1e-12);
      }
      out.push_back(make("compressors",
                         "contractive " + c.to_string() + " d=" +
                             std::to_string(d),
                         margin));
    }
    const ContractorSpec r = ContractorSpec::rand_k((d + 1) / 2);
    double margin = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < std::max<std::size_t>(trials / 100, 10); ++t) {
      const DenseVector x = gaussian(d, rng, log_scale(rng));
      double sum = 0.0, sum_sq = 0.0;
      for (std::size_t s = 0; s < kInnerDraws; ++s) {
        const double e = squared_distance(apply_contractor(r, x, rng), x);
        sum += e;
        sum_sq += e * e;
      }
      const double n = static_cast<double>(kInnerDraws);
      const double mean = sum / n;
      const double se = std::sqrt(std::max(0.0, sum_sq / n - mean * mean) / n);
      const double rhs = (1.0 - r.alpha(d)) * squared_norm(x);
      margin = std::min(margin, (rhs - (mean - 3.0 * se)) / squared_norm(x));
    }
    out.push_back(make("compressors",
                       "contractive " + r.to_string() + " d=" +
                           std::to_string(d) + " (3 SE)",
                       margin));
  }

  const std::size_t d = 10;
  const std::vector<ThreePCSpec> specs = {
      ThreePCSpec::ef21(ContractorSpec::top_k(1)),
      ThreePCSpec::ef21(ContractorSpec::top_k(5)),
      ThreePCSpec::lag(1.0),
      ThreePCSpec::clag(ContractorSpec::top_k(1), 1.0),
      ThreePCSpec::adacgd({ContractorSpec::top_k(1), ContractorSpec::top_k(3),
                           ContractorSpec::top_k(5)},
                          1.0),
      ThreePCSpec::adacgd({ContractorSpec::top_k(2), ContractorSpec::identity()},
                          0.5),
      ThreePCSpec::ef21(ContractorSpec::rand_k(3)),
  };
  for (const ThreePCSpec& spec : specs) {
    const std::size_t n =
        spec.randomized() ? std::max<std::size_t>(trials / 50, 20) : trials;
    const ConstantsEstimate est = estimate_constants(spec, d, n, rng);
    PropertyResult r = make("compressors", "3pc " + spec.to_string(),
                            est.worst_margin);
    r.pass = est.pass;
    r.detail = std::to_string(est.violations) + " violations in " +
               std::to_string(est.trials);
    out.push_back(std::move(r));
  }

  const std::vector<ContractorSpec> cs = {ContractorSpec::top_k(1),
                                          ContractorSpec::top_k(3),
                                          ContractorSpec::top_k(7)};
  const ThreePCSpec ada = ThreePCSpec::adacgd(cs, 1.0);
  const ThreePCSpec chain = adacgd_as_ada3pc(ada);
  std::size_t mismatches = 0;
  std::size_t zeta0 = 0;
  std::size_t m1 = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    const Triple tr = random_triple(d, rng, t);
    SeededRng a(seed, 100 + t), b(seed, 100 + t);
    const CompressionOutcome u = compress(ada, tr.h, tr.y, tr.x, a);
    const CompressionOutcome v = compress(chain, tr.h, tr.y, tr.x, b);
    if (!(u.vector == v.vector) || u.branch_index != v.branch_index) {
      ++mismatches;
    }
    if (squared_distance(tr.x, tr.h) > 0.0) {
      SeededRng c1(seed, t), c2(seed, t);
      const CompressionOutcome z = adacgd_compress(cs, 0.0, tr.h, tr.y, tr.x, c1);
      const CompressionOutcome e = ef21_compress(cs.back(), tr.h, tr.y, tr.x, c2);
      if (!(z.vector == e.vector)) ++zeta0;
    }
    SeededRng c3(seed, t), c4(seed, t);
    const CompressionOutcome s =
        adacgd_compress({cs[1]}, 1.0, tr.h, tr.y, tr.x, c3);
    const CompressionOutcome c =
        clag_compress(cs[1], 1.0, tr.h, tr.y, tr.x, c4);
    if (!(s.vector == c.vector)) ++m1;
  }
  const double n = static_cast<double>(trials);
  out.push_back(make("compressors", "adacgd equals its lag+ef21 chain",
                     -static_cast<double>(mismatches) / n,
                     std::to_string(mismatches) + " mismatches"));
  out.push_back(make("compressors", "zeta=0 adacgd equals ef21 (last level)",
                     -static_cast<double>(zeta0) / n));
  out.push_back(make("compressors", "single-level adacgd equals clag",
                     -static_cast<double>(m1) / n));
}

void gradients_suite(std::uint64_t seed, std::size_t,
                     std::vector<PropertyResult>& out) {
  SeededRng rng(seed, 12);
  const Problem logistic = synthetic_logistic(60, 10, 3, 0.1, seed);
  const Problem quad =
      Problem::quadratic(DenseVector{1.0, 4.0, 0.5, 2.0}, 3);
  for (const Problem* p : {&logistic, &quad}) {
    double worst = 0.0;
    for (int t = 0; t < 20; ++t) {
      worst = std::max(worst,
                       check_gradient(*p, gaussian(p->dim(), rng, 1.0), 1e-5));
    }
    const std::string name =
        p->kind() == ProblemKind::kQuadratic ? "quadratic" : "logistic";
    out.push_back(make("gradients", "finite differences " + name,
                       1e-5 - worst, "max rel err " + std::to_string(worst)));

    const SmoothnessConstants sc = smoothness(*p);
    double margin = std::numeric_limits<double>::infinity();
    for (int t = 0; t < 200; ++t) {
      const DenseVector x = gaussian(p->dim(), rng, 2.0);
      const DenseVector z = x + gaussian(p->dim(), rng, std::pow(10.0, -t % 4));
      const double lhs = std::sqrt(squared_distance(p->gradient(x), p->gradient(z)));
      const double rhs = sc.l_minus * std::sqrt(squared_distance(x, z));
      margin = std::min(margin, (rhs - lhs) / rhs + kSlack);
    }
    out.push_back(make("gradients", "L- bounds gradient variation " + name,
                       margin));
    out.push_back(make("gradients", "L- <= L+ " + name,
                       sc.l_plus - sc.l_minus + 1e-12 * sc.l_plus));
  }
}

struct RunChecks {
  SlackTracker phi, psi, g_rec, master_rec;
};

RunChecks check_run(const std::vector<IterationRecord>& recs,
                    const ThreePCConstants& w, const ThreePCConstants& m,
                    double l_plus) {
  RunChecks c;
  for (std::size_t t = 0; t + 1 < recs.size(); ++t) {
    const IterationRecord& a = recs[t];
    const IterationRecord& b = recs[t + 1];
    const double r = b.step_sq;
    c.phi.add(b.phi, a.phi);
    c.psi.add(b.psi, a.psi);
    c.g_rec.add(b.g_error, (1.0 - w.a) * a.g_error + w.b * l_plus * l_plus * r);
    c.master_rec.add(b.master_error,
                     (1.0 - m.a) * a.master_error +
                         3.0 * m.b * (2.0 - w.a) * a.g_error +
                         3.0 * m.b * (w.b + 1.0) * l_plus * l_plus * r);
  }
  return c;
}

void lyapunov_suite(std::uint64_t seed, std::size_t,
                    std::vector<PropertyResult>& out) {
  {
    const Problem quad = Problem::quadratic(DenseVector{1.0, 4.0}, 4);
    const ThreePCSpec w = ThreePCSpec::ef21(ContractorSpec::top_k(1));
    const SmoothnessConstants sc = smoothness(quad);
    const ThreePCConstants wc = certified_constants(w, 2);
    const double gamma = theoretical_stepsize(StepsizeRule::convex(), sc, wc,
                                              ThreePCConstants{});
    EngineOptions opts;
    opts.seed = seed;
    opts.f_star = 0.0;
    const Engine engine(quad, w, ThreePCSpec::identity(), gamma, opts);
    const auto recs = engine.run(DenseVector{3.0, -2.0}, StopRule{300, {}, {}});
    const RunChecks c = check_run(recs, wc, ThreePCConstants{}, sc.l_plus);
    out.push_back(make("lyapunov", "phi non-increasing quadratic ef21:top1",
                       c.phi.margin));
    out.push_back(make("lyapunov", "G recursion quadratic ef21:top1",
                       c.g_rec.margin));
  }
  const Problem convex = synthetic_logistic(100, 10, 4, 0.0, seed);
  const Reference ref = solve_reference(convex, 1e-10);
  const SmoothnessConstants sc = smoothness(convex);
  for (const ThreePCSpec& w :
       {ThreePCSpec::ef21(ContractorSpec::top_k(2)),
        ThreePCSpec::adacgd({ContractorSpec::top_k(1), ContractorSpec::top_k(5)},
                            1.0)}) {
    const ThreePCConstants wc = certified_constants(w, convex.dim());
    const double gamma = 1.0 / condition_m1(sc, wc);
    EngineOptions opts;
    opts.seed = seed;
    opts.f_star = ref.f_star;
    const Engine engine(convex, w, ThreePCSpec::identity(), gamma, opts);
    const auto recs =
        engine.run(DenseVector(convex.dim()), StopRule{500, {}, {}});
    const RunChecks c = check_run(recs, wc, ThreePCConstants{}, sc.l_plus);
    out.push_back(make("lyapunov",
                       "phi non-increasing convex logistic " + w.to_string(),
                       c.phi.margin));
    out.push_back(make("lyapunov", "G recursion convex logistic " + w.to_string(),
                       c.g_rec.margin));
  }
}

void bounds_suite(std::uint64_t seed, std::size_t,
                  std::vector<PropertyResult>& out) {
  const Problem p = synthetic_logistic(100, 10, 4, 0.1, seed);
  const SmoothnessConstants sc = smoothness(p);
  const ThreePCSpec w = ThreePCSpec::ef21(ContractorSpec::top_k(2));
  const ThreePCSpec m = ThreePCSpec::ef21(ContractorSpec::top_k(3));
  const ThreePCConstants wc = certified_constants(w, p.dim());
  const ThreePCConstants mc = certified_constants(m, p.dim());
  const double gamma =
      theoretical_stepsize(StepsizeRule::bidirectional(), sc, wc, mc);
  EngineOptions opts;
  opts.seed = seed;
  const Engine engine(p, w, m, gamma, opts);
  const auto recs = engine.run(DenseVector(p.dim()), StopRule{1000, {}, {}});
  const RunChecks c = check_run(recs, wc, mc, sc.l_plus);
  out.push_back(make("bounds", "psi non-increasing bidirectional", c.psi.margin));
  out.push_back(make("bounds", "worker error recursion bidirectional",
                     c.g_rec.margin));
  out.push_back(make("bounds", "master error recursion bidirectional",
                     c.master_rec.margin));
  double margin = std::numeric_limits<double>::infinity();
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < recs.size(); ++t) {
    const std::size_t T = t;
    if (T == 100 || T == 1000) {
      const double bound = 2.0 * recs[0].psi / (gamma * static_cast<double>(T));
      margin = std::min(margin, (bound - best) / bound);
    }
    best = std::min(best, recs[t].grad_norm_sq);
  }
  out.push_back(make("bounds", "min gradient norm bound bidirectional", margin));

  const std::uint64_t cap =
      p.num_clients() * (p.dim() * 64 + 8);
  double bits_margin = std::numeric_limits<double>::infinity();
  for (std::size_t t = 1; t < recs.size(); ++t) {
    bits_margin = std::min(
        bits_margin, static_cast<double>(cap) -
                         static_cast<double>(recs[t].uplink_bits_round));
  }
  out.push_back(make("bounds", "uplink bits per round within n(d*64+header)",
                     bits_margin));
}

}  // namespace

bool VerifyReport::all_pass() const {
  return std::all_of(properties.begin(), properties.end(),
                     [](const PropertyResult& p) { return p.pass; });
}

VerifyReport verify(std::string_view suite, std::uint64_t seed,
                    std::size_t trials) {
  if (trials == 0) throw std::invalid_argument("trials must be >= 1");
  const bool all = suite == "all";
  if (!all && suite != "compressors" && suite != "gradients" &&
      suite != "lyapunov" && suite != "bounds") {
    throw std::invalid_argument("unknown verify suite '" + std::string(suite) +
                                "'");
  }
  VerifyReport report;
  if (all || suite == "compressors") {
    compressors_suite(seed, trials, report.properties);
  }
  if (all || suite == "gradients") {
    gradients_suite(seed, trials, report.properties);
  }
  if (all || suite == "lyapunov") {
    lyapunov_suite(seed, trials, report.properties);
  }
  if (all || suite == "bounds") bounds_suite(seed, trials, report.properties);
  return report;
}

void print_report(std::ostream& out, const VerifyReport& report) {
  for (const PropertyResult& p : report.properties) {
    out << (p.pass ? "PASS " : "FAIL ") << "[" << p.suite << "] " << p.name
        << "  margin=" << std::setprecision(6) << p.margin;
    if (!p.detail.empty()) out << "  (" << p.detail << ")";
    out << "\n";
  }
  out << (report.all_pass() ? "all properties hold\n"
                            : "some properties FAILED\n");
}

}  // namespace adacgd
