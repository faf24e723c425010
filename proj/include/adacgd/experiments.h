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

// Experiment orchestration: configs, method parsing, CSV traces, the
// reference-minimum cache and the batch property checks behind `verify`.

#ifndef ADACGD_EXPERIMENTS_H_
#define ADACGD_EXPERIMENTS_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "adacgd/compressors.h"
#include "adacgd/core_types.h"
#include "adacgd/data_ingest.h"
#include "adacgd/engine.h"
#include "adacgd/problems.h"

namespace adacgd {

// Inverse of ThreePCSpec::to_string. Throws std::invalid_argument.
ContractorSpec parse_contractor(std::string_view token);
TriggerPredicate parse_predicate(std::string_view token);
ThreePCSpec parse_threepc(std::string_view token);

// {1, ceil(d/100), ceil(d/10), ceil(d/2)}, deduplicated, ascending.
std::vector<std::size_t> default_klist(std::size_t dim);

struct RunConfig {
  // A LIBSVM path, "synthetic:N:d:seed" (dense Gaussian), "binary:N:d:seed"
  // (sparse binary) or "quadratic:d_1,d_2,...".
  std::string dataset = "synthetic:1000:50:7";
  std::size_t clients = 20;
  double lambda = 0.1;
  bool scale = false;
  std::size_t partition_seed = 0;
  // Bare names gd, ef21, lag, clag, adacgd, or any spec string.
  std::vector<std::string> methods = {"gd", "ef21", "lag", "clag", "adacgd"};
  std::string master = "identity";
  double zeta = 1.0;
  std::size_t k = 1;
  std::vector<std::size_t> klist;  // empty: default_klist(d)
  // auto | convex | nonconvex | pl | bidirectional | manual:<gamma>. auto picks
  // bidirectional when the master compresses and nonconvex otherwise.
  std::string stepsize = "auto";
  std::vector<double> multipliers = {1.0};
  unsigned value_bits = 64;
  InitMode init = InitMode::kFull;
  StopRule stop{1000, std::nullopt, 1e-4};
  // Threshold on ||grad f||^2 for the bits-to-tolerance summary.
  double tolerance = 1e-4;
  std::uint64_t seed = 0;
  // Starting point; empty means the origin.
  std::vector<double> x0;
  // Solve and cache f* for phi (logistic); quadratics always use 0.
  bool reference = false;
  std::filesystem::path out_dir = "out";
};

// Sets one key. Keys match the config file: dataset, clients, lambda, scale,
// partition_seed, methods, master, zeta, k, klist, stepsize, multipliers,
// value_bits, init, stop, tolerance, seed, x0, reference, out_dir. `stop` takes
// comma-separated rounds=<T>, bits=<budget>, grad=<tol> (grad=none clears).
// Throws std::invalid_argument on unknown keys or bad values.
void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value);

// "key = value" lines; '#' starts a comment.
RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::filesystem::path& path);
std::string format_config(const RunConfig& cfg);

struct LoadedProblem {
  Problem problem;
  std::string description;
  std::uint64_t data_hash = 0;
};

// Reads or generates the dataset and builds the problem. Throws
// std::runtime_error / ParseError on missing or malformed data.
LoadedProblem load_problem(const RunConfig& cfg);

struct Method {
  std::string label;  // file-safe
  ThreePCSpec spec;
};
Method resolve_method(std::string_view token, const RunConfig& cfg,
                      std::size_t dim);
StepsizeRule resolve_stepsize(const RunConfig& cfg, bool bidirectional);

// CSV trace: '#'-prefixed metadata lines, a header row, then one row per
// record.
inline constexpr std::string_view kTraceHeader =
    "round,f_value,grad_norm_sq,phi,psi,g_error,master_error,"
    "uplink_bits_cum,downlink_bits_cum,branch_hist";

struct Trace {
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<IterationRecord> records;
};

void write_trace(std::ostream& out, const Trace& trace);
// Throws std::runtime_error on schema violations (wrong header, non-increasing
// rounds, decreasing cumulative bits).
Trace read_trace(std::istream& in);

// First cumulative uplink count at which ||grad f||^2 <= tol.
std::optional<std::uint64_t> bits_to_tolerance(
    const std::vector<IterationRecord>& records, double tol);

struct RunOutcome {
  std::string method;
  std::string spec;
  double multiplier = 1.0;
  double gamma = 0.0;
  bool diverged = false;
  std::size_t diverged_round = 0;
  std::optional<std::uint64_t> bits_to_tol;
  std::filesystem::path trace_path;
  std::vector<IterationRecord> records;
};

struct MethodSummary {
  std::string method;
  std::optional<double> best_multiplier;
  std::optional<std::uint64_t> best_bits;
  std::size_t diverged_runs = 0;
};

struct ExperimentResult {
  std::vector<RunOutcome> runs;
  std::vector<MethodSummary> summary;
  // AdaCGD needed more bits than LAG (or did not reach the tolerance when LAG
  // did). Only set when both methods ran.
  bool adacgd_lag_inversion = false;
};

// Best multiplier per method: fewest bits to tolerance over non-diverged
// runs, ties to the smaller multiplier.
std::vector<MethodSummary> summarize(const std::vector<RunOutcome>& runs);

// Runs every method x multiplier, writes <out_dir>/<method>_x<mult>.csv plus
// summary.csv and summary.txt. ADACGD_OUT_DIR overrides cfg.out_dir. Data
// errors surface before any run starts.
ExperimentResult run_experiment(const RunConfig& cfg);

struct Reference {
  double f_star = 0.0;
  DenseVector x_star;
  double grad_norm = 0.0;
  std::size_t rounds = 0;
  bool converged = false;
};

// Gradient descent with gamma = 1/L- until ||grad f|| <= tolerance or
// max_rounds. Quadratics return the exact minimum at the origin.
Reference solve_reference(const Problem& p, double tolerance,
                          std::size_t max_rounds = 1000000);

// Cache key text: data hash, lambda, clients, partition seed, scale flag.
std::string reference_key(const RunConfig& cfg, std::uint64_t data_hash);
void write_reference(std::ostream& out, const std::string& key,
                     const Reference& ref);
std::optional<Reference> read_reference(std::istream& in,
                                        const std::string& key);

// Loads <dir>/reference_<hash>.txt when the key matches, otherwise solves and
// writes it. `cache_hit` reports which happened.
Reference cached_reference(const LoadedProblem& lp, const RunConfig& cfg,
                           const std::filesystem::path& dir, double tolerance,
                           bool* cache_hit = nullptr);

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL);
std::uint64_t dataset_hash(const Dataset& data);

struct PropertyResult {
  std::string suite;
  std::string name;
  bool pass = false;
  double margin = 0.0;  // tightest observed slack; negative when violated
  std::string detail;
};

struct VerifyReport {
  std::vector<PropertyResult> properties;
  bool all_pass() const;
};

// suite: compressors | gradients | lyapunov | bounds | all.
VerifyReport verify(std::string_view suite, std::uint64_t seed,
                    std::size_t trials);
void print_report(std::ostream& out, const VerifyReport& report);

}  // namespace adacgd

#endif  // ADACGD_EXPERIMENTS_H_
