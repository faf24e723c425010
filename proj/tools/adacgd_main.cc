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

// adacgd: run, sweep, verify, solve-reference and synth subcommands.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "adacgd/data_ingest.h"
#include "adacgd/experiments.h"

namespace {

struct Overrides {
  std::string config;
  std::map<std::string, std::string> values;
  std::vector<std::string> sets;
};

void add_overrides(CLI::App* cmd, Overrides& o) {
  cmd->add_option("-c,--config", o.config, "key = value config file");
  const std::vector<std::pair<std::string, std::string>> flags = {
      {"--dataset", "dataset"},       {"--clients", "clients"},
      {"--lambda", "lambda"},         {"--method", "methods"},
      {"--master", "master"},         {"--zeta", "zeta"},
      {"--k", "k"},                   {"--klist", "klist"},
      {"--stepsize", "stepsize"},     {"--multipliers", "multipliers"},
      {"--value-bits", "value_bits"}, {"--init", "init"},
      {"--stop", "stop"},             {"--tolerance", "tolerance"},
      {"--seed", "seed"},             {"--out-dir", "out_dir"},
      {"--scale", "scale"},           {"--reference", "reference"},
  };
  for (const auto& [flag, key] : flags) {
    cmd->add_option_function<std::string>(
        flag, [&o, key = key](const std::string& v) { o.values[key] = v; },
        "sets '" + key + "'");
  }
  cmd->add_option("--set", o.sets, "extra key=value settings");
}

adacgd::RunConfig build_config(const Overrides& o,
                               const std::vector<std::string>& defaults = {}) {
  adacgd::RunConfig cfg =
      o.config.empty() ? adacgd::RunConfig{} : adacgd::load_config(o.config);
  for (const std::string& kv : defaults) {
    const auto eq = kv.find('=');
    adacgd::apply_setting(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  for (const auto& [key, value] : o.values) {
    adacgd::apply_setting(cfg, key, value);
  }
  for (const std::string& kv : o.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("--set expects key=value");
    }
    adacgd::apply_setting(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  return cfg;
}

int report_experiment(const adacgd::ExperimentResult& r) {
  for (const adacgd::RunOutcome& run : r.runs) {
    std::cout << run.method << " x" << run.multiplier << "  gamma=" << run.gamma
              << "  rounds=" << (run.records.empty() ? 0 : run.records.back().round);
    if (run.diverged) {
      std::cout << "  DIVERGED at round " << run.diverged_round;
    } else if (run.bits_to_tol) {
      std::cout << "  bits_to_tol=" << *run.bits_to_tol;
    } else {
      std::cout << "  tolerance not reached";
    }
    std::cout << "  -> " << run.trace_path.string() << "\n";
  }
  for (const adacgd::MethodSummary& s : r.summary) {
    std::cout << "best " << s.method << ": ";
    if (s.best_multiplier) {
      std::cout << "x" << *s.best_multiplier << " (" << *s.best_bits
                << " bits)\n";
    } else {
      std::cout << "none reached the tolerance\n";
    }
  }
  if (r.adacgd_lag_inversion) {
    std::cout << "note: adacgd needed more bits than lag on this data\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive compressed gradient descent experiments"};
  app.require_subcommand(1);

  Overrides run_o, sweep_o, ref_o;
  CLI::App* run = app.add_subcommand("run", "run methods x multipliers");
  add_overrides(run, run_o);
  CLI::App* sweep =
      app.add_subcommand("sweep", "run with multipliers 2^0..2^8");
  add_overrides(sweep, sweep_o);

  std::string suite = "all";
  std::uint64_t verify_seed = 0;
  std::size_t trials = 10000;
  CLI::App* ver = app.add_subcommand("verify", "batch property checks");
  ver->add_option("--suite", suite,
                  "compressors | gradients | lyapunov | bounds | all");
  ver->add_option("--seed", verify_seed);
  ver->add_option("--trials", trials);

  double ref_tol = 1e-10;
  CLI::App* ref = app.add_subcommand("solve-reference",
                                     "solve and cache f* for a dataset");
  add_overrides(ref, ref_o);
  ref->add_option("--ref-tolerance", ref_tol, "stop once ||grad f|| <= tol");

  std::size_t syn_n = 1000, syn_d = 50;
  std::uint64_t syn_seed = 7;
  std::string syn_out;
  std::string syn_style = "binary";
  CLI::App* syn = app.add_subcommand("synth", "write a synthetic LIBSVM file");
  syn->add_option("--examples", syn_n);
  syn->add_option("--dim", syn_d);
  syn->add_option("--seed", syn_seed);
  syn->add_option("--style", syn_style, "binary | gaussian")
      ->check(CLI::IsMember({"binary", "gaussian"}));
  syn->add_option("-o,--out", syn_out)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      return report_experiment(adacgd::run_experiment(build_config(run_o)));
    }
    if (sweep->parsed()) {
      return report_experiment(adacgd::run_experiment(
          build_config(sweep_o, {"multipliers=sweep"})));
    }
    if (ver->parsed()) {
      const adacgd::VerifyReport report =
          adacgd::verify(suite, verify_seed, trials);
      adacgd::print_report(std::cout, report);
      return report.all_pass() ? 0 : 1;
    }
    if (ref->parsed()) {
      const adacgd::RunConfig cfg = build_config(ref_o);
      const adacgd::LoadedProblem lp = adacgd::load_problem(cfg);
      std::filesystem::path dir = cfg.out_dir;
      if (const char* env = std::getenv("ADACGD_OUT_DIR"); env && *env) dir = env;
      if (std::filesystem::exists(cfg.dataset)) {
        dir = std::filesystem::path(cfg.dataset).parent_path();
        if (dir.empty()) dir = ".";
      }
      bool hit = false;
      const adacgd::Reference r =
          adacgd::cached_reference(lp, cfg, dir, ref_tol, &hit);
      std::cout.precision(17);
      std::cout << (hit ? "cache hit" : "solved") << ": f* = " << r.f_star
                << "  ||grad|| = " << r.grad_norm << "  rounds = " << r.rounds
                << "\n";
      if (!r.converged) {
        std::cerr << "warning: iteration cap reached before the tolerance\n";
      }
      return 0;
    }
    if (syn->parsed()) {
      const adacgd::Dataset data =
          syn_style == "binary"
              ? adacgd::make_sparse_binary_dataset(syn_n, syn_d, syn_seed)
              : adacgd::make_synthetic_dataset(syn_n, syn_d, syn_seed);
      std::ofstream out(syn_out, std::ios::binary);
      if (!out) throw std::runtime_error("cannot write " + syn_out);
      adacgd::write_libsvm(out, data);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
