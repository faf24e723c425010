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

#include "adacgd/experiments.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace adacgd {
namespace {

std::string format_real(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

// Split on `sep` outside square brackets.
std::vector<std::string_view> split_top(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  int depth = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '[') ++depth;
    if (s[i] == ']') --depth;
    if (s[i] == sep && depth == 0) {
      out.push_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  out.push_back(s.substr(start));
  return out;
}

double parse_real(std::string_view s, std::string_view what) {
  s = trim(s);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() ||
      !std::isfinite(v)) {
    throw std::invalid_argument("bad " + std::string(what) + ": '" +
                                std::string(s) + "'");
  }
  return v;
}

std::uint64_t parse_uint(std::string_view s, std::string_view what) {
  s = trim(s);
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw std::invalid_argument("bad " + std::string(what) + ": '" +
                                std::string(s) + "'");
  }
  return v;
}

bool parse_bool(std::string_view s) {
  s = trim(s);
  if (s == "1" || s == "true" || s == "yes" || s == "on") return true;
  if (s == "0" || s == "false" || s == "no" || s == "off") return false;
  throw std::invalid_argument("bad boolean: '" + std::string(s) + "'");
}

bool starts_with(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

std::string sanitize(std::string_view s) {
  std::string out;
  for (char c : s) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '.' || c == '-';
    out += ok ? c : '_';
  }
  return out;
}

std::string join_reals(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0) out += ",";
    out += format_real(v[i]);
  }
  return out;
}

std::string stop_string(const StopRule& s) {
  std::string out = "rounds=" + std::to_string(s.max_rounds);
  if (s.uplink_bit_budget) out += ",bits=" + std::to_string(*s.uplink_bit_budget);
  out += ",grad=" + (s.grad_tolerance ? format_real(*s.grad_tolerance)
                                      : std::string("none"));
  return out;
}

std::filesystem::path resolve_out_dir(const RunConfig& cfg) {
  if (const char* env = std::getenv("ADACGD_OUT_DIR"); env && *env) {
    return env;
  }
  return cfg.out_dir;
}

}  // namespace

ContractorSpec parse_contractor(std::string_view token) {
  token = trim(token);
  if (token == "id" || token == "identity") return ContractorSpec::identity();
  if (starts_with(token, "top")) {
    return ContractorSpec::top_k(parse_uint(token.substr(3), "Top-K k"));
  }
  if (starts_with(token, "rand")) {
    return ContractorSpec::rand_k(parse_uint(token.substr(4), "Rand-K k"));
  }
  throw std::invalid_argument("unknown contractor '" + std::string(token) +
                              "'");
}

TriggerPredicate parse_predicate(std::string_view token) {
  const auto parts = split(trim(token), ':');
  if (parts[0] == "lazy" && parts.size() == 2) {
    return TriggerPredicate::lazy(parse_real(parts[1], "zeta"));
  }
  if (parts[0] == "clazy" && parts.size() == 3) {
    return TriggerPredicate::compressed_lazy(parse_contractor(parts[1]),
                                             parse_real(parts[2], "zeta"));
  }
  if (parts[0] == "abs" && parts.size() == 2) {
    return TriggerPredicate::absolute(parse_real(parts[1], "threshold"));
  }
  throw std::invalid_argument("unknown predicate '" + std::string(token) +
                              "'");
}

ThreePCSpec parse_threepc(std::string_view token) {
  token = trim(token);
  if (starts_with(token, "ada3pc[")) {
    if (token.back() != ']') {
      throw std::invalid_argument("unterminated ada3pc spec");
    }
    const std::string_view body = token.substr(7, token.size() - 8);
    std::vector<ThreePCSpec> branches;
    std::vector<TriggerPredicate> predicates;
    const auto items = split_top(body, '|');
    for (std::size_t j = 0; j < items.size(); ++j) {
      const auto pieces = split_top(items[j], '?');
      if (pieces.size() > 2) {
        throw std::invalid_argument("branch with several predicates");
      }
      branches.push_back(parse_threepc(pieces[0]));
      if (pieces.size() == 2) predicates.push_back(parse_predicate(pieces[1]));
      const bool last = j + 1 == items.size();
      if ((pieces.size() == 2) == last) {
        throw std::invalid_argument(
            "every ada3pc branch but the last needs a predicate");
      }
    }
    return ThreePCSpec::ada3pc(std::move(branches), std::move(predicates));
  }
  const auto parts = split(token, ':');
  const std::string_view head = parts[0];
  if ((head == "identity" || head == "id") && parts.size() == 1) {
    return ThreePCSpec::identity();
  }
  if (head == "ef21" && parts.size() == 2) {
    return ThreePCSpec::ef21(parse_contractor(parts[1]));
  }
  if (head == "lag" && parts.size() == 2) {
    return ThreePCSpec::lag(parse_real(parts[1], "zeta"));
  }
  if (head == "clag" && parts.size() == 3) {
    return ThreePCSpec::clag(parse_contractor(parts[1]),
                             parse_real(parts[2], "zeta"));
  }
  if (head == "adacgd" && parts.size() == 3) {
    std::vector<ContractorSpec> cs;
    for (std::string_view c : split(parts[2], ',')) {
      cs.push_back(parse_contractor(c));
    }
    return ThreePCSpec::adacgd(std::move(cs), parse_real(parts[1], "zeta"));
  }
  throw std::invalid_argument("unknown compressor spec '" +
                              std::string(token) + "'");
}

std::vector<std::size_t> default_klist(std::size_t dim) {
  if (dim == 0) throw std::invalid_argument("dimension must be positive");
  auto ceil_div = [dim](std::size_t q) { return (dim + q - 1) / q; };
  std::vector<std::size_t> ks = {1, ceil_div(100), ceil_div(10), ceil_div(2)};
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  return ks;
}

void apply_setting(RunConfig& cfg, std::string_view key,
                   std::string_view value) {
  key = trim(key);
  value = trim(value);
  if (key == "dataset") {
    cfg.dataset = std::string(value);
  } else if (key == "clients") {
    cfg.clients = parse_uint(value, "clients");
    if (cfg.clients == 0) throw std::invalid_argument("clients must be >= 1");
  } else if (key == "lambda") {
    cfg.lambda = parse_real(value, "lambda");
    if (cfg.lambda < 0.0) throw std::invalid_argument("lambda must be >= 0");
  } else if (key == "scale") {
    cfg.scale = parse_bool(value);
  } else if (key == "partition_seed") {
    cfg.partition_seed = parse_uint(value, "partition_seed");
  } else if (key == "methods" || key == "method") {
    cfg.methods.clear();
    // ';' always separates methods. With ',' the pieces that read as Top-K or
    // Rand-K contractors continue a preceding adacgd k-list.
    const bool semi = value.find(';') != std::string_view::npos;
    for (std::string_view m : split_top(value, semi ? ';' : ',')) {
      const bool continues =
          !semi && !cfg.methods.empty() &&
          starts_with(cfg.methods.back(), "adacgd:") &&
          (starts_with(m, "top") || starts_with(m, "rand"));
      if (continues) {
        cfg.methods.back() += "," + std::string(trim(m));
      } else {
        cfg.methods.emplace_back(trim(m));
      }
    }
    if (cfg.methods.empty() || cfg.methods.front().empty()) {
      throw std::invalid_argument("method list is empty");
    }
  } else if (key == "master") {
    cfg.master = std::string(value);
  } else if (key == "zeta") {
    cfg.zeta = parse_real(value, "zeta");
    if (cfg.zeta < 0.0) throw std::invalid_argument("zeta must be >= 0");
  } else if (key == "k") {
    cfg.k = parse_uint(value, "k");
    if (cfg.k == 0) throw std::invalid_argument("k must be >= 1");
  } else if (key == "klist") {
    cfg.klist.clear();
    if (value != "default") {
      for (std::string_view k : split(value, ',')) {
        cfg.klist.push_back(parse_uint(k, "klist entry"));
      }
      if (!std::is_sorted(cfg.klist.begin(), cfg.klist.end()) ||
          std::adjacent_find(cfg.klist.begin(), cfg.klist.end()) !=
              cfg.klist.end() ||
          cfg.klist.front() == 0) {
        throw std::invalid_argument("klist must be strictly ascending and >= 1");
      }
    }
  } else if (key == "stepsize") {
    const std::string v(value);
    if (v != "auto" && v != "convex" && v != "nonconvex" && v != "pl" &&
        v != "bidirectional" && !starts_with(v, "manual:")) {
      throw std::invalid_argument("unknown stepsize rule '" + v + "'");
    }
    if (starts_with(v, "manual:")) parse_real(value.substr(7), "stepsize");
    cfg.stepsize = v;
  } else if (key == "multipliers") {
    cfg.multipliers.clear();
    if (value == "sweep") {
      for (int p = 0; p <= 8; ++p) cfg.multipliers.push_back(std::ldexp(1.0, p));
    } else {
      for (std::string_view m : split(value, ',')) {
        const double v = parse_real(m, "multiplier");
        if (!(v > 0.0)) throw std::invalid_argument("multiplier must be > 0");
        cfg.multipliers.push_back(v);
      }
    }
    if (cfg.multipliers.empty()) {
      throw std::invalid_argument("multiplier set is empty");
    }
  } else if (key == "value_bits") {
    const auto bits = parse_uint(value, "value_bits");
    if (bits != 32 && bits != 64) {
      throw std::invalid_argument("value_bits must be 32 or 64");
    }
    cfg.value_bits = static_cast<unsigned>(bits);
  } else if (key == "init") {
    if (value == "full") {
      cfg.init = InitMode::kFull;
    } else if (value == "compressed") {
      cfg.init = InitMode::kCompressed;
    } else {
      throw std::invalid_argument("init must be full or compressed");
    }
  } else if (key == "stop") {
    StopRule stop{cfg.stop.max_rounds, std::nullopt, std::nullopt};
    for (std::string_view item : split(value, ',')) {
      const auto kv = split(item, '=');
      if (kv.size() != 2) throw std::invalid_argument("bad stop item");
      if (kv[0] == "rounds") {
        stop.max_rounds = parse_uint(kv[1], "rounds");
      } else if (kv[0] == "bits") {
        stop.uplink_bit_budget = parse_uint(kv[1], "bit budget");
      } else if (kv[0] == "grad") {
        if (kv[1] != "none") stop.grad_tolerance = parse_real(kv[1], "grad");
      } else {
        throw std::invalid_argument("unknown stop item '" + std::string(kv[0]) +
                                    "'");
      }
    }
    cfg.stop = stop;
  } else if (key == "tolerance") {
    cfg.tolerance = parse_real(value, "tolerance");
    if (!(cfg.tolerance > 0.0)) {
      throw std::invalid_argument("tolerance must be > 0");
    }
  } else if (key == "seed") {
    cfg.seed = parse_uint(value, "seed");
  } else if (key == "x0") {
    cfg.x0.clear();
    if (value != "zeros") {
      for (std::string_view v : split(value, ',')) {
        cfg.x0.push_back(parse_real(v, "x0 entry"));
      }
    }
  } else if (key == "reference") {
    cfg.reference = parse_bool(value);
  } else if (key == "out_dir") {
    cfg.out_dir = std::string(value);
  } else {
    throw std::invalid_argument("unknown config key '" + std::string(key) +
                                "'");
  }
}

RunConfig parse_config(std::istream& in) {
  RunConfig cfg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    view = trim(view.substr(0, view.find('#')));
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": expected key = value");
    }
    try {
      apply_setting(cfg, view.substr(0, eq), view.substr(eq + 1));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": " + e.what());
    }
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  return parse_config(in);
}

std::string format_config(const RunConfig& cfg) {
  std::ostringstream out;
  out << "dataset = " << cfg.dataset << "\n"
      << "clients = " << cfg.clients << "\n"
      << "lambda = " << format_real(cfg.lambda) << "\n"
      << "scale = " << (cfg.scale ? 1 : 0) << "\n"
      << "partition_seed = " << cfg.partition_seed << "\n"
      << "methods = ";
  for (std::size_t i = 0; i < cfg.methods.size(); ++i) {
    out << (i > 0 ? ";" : "") << cfg.methods[i];
  }
  out << "\nmaster = " << cfg.master << "\n"
      << "zeta = " << format_real(cfg.zeta) << "\n"
      << "k = " << cfg.k << "\n"
      << "klist = ";
  if (cfg.klist.empty()) out << "default";
  for (std::size_t i = 0; i < cfg.klist.size(); ++i) {
    out << (i > 0 ? "," : "") << cfg.klist[i];
  }
  out << "\nstepsize = " << cfg.stepsize << "\n"
      << "multipliers = " << join_reals(cfg.multipliers) << "\n"
      << "value_bits = " << cfg.value_bits << "\n"
      << "init = " << (cfg.init == InitMode::kFull ? "full" : "compressed")
      << "\n"
      << "stop = " << stop_string(cfg.stop) << "\n"
      << "tolerance = " << format_real(cfg.tolerance) << "\n"
      << "seed = " << cfg.seed << "\n"
      << "x0 = " << (cfg.x0.empty() ? "zeros" : join_reals(cfg.x0)) << "\n"
      << "reference = " << (cfg.reference ? 1 : 0) << "\n"
      << "out_dir = " << cfg.out_dir.string() << "\n";
  return out.str();
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t dataset_hash(const Dataset& data) {
  std::uint64_t h = fnv1a("dim=" + std::to_string(data.dim) + "\n");
  for (const Example& e : data.examples) {
    h = fnv1a(format_example(e), h);
    h = fnv1a("\n", h);
  }
  return h;
}

LoadedProblem load_problem(const RunConfig& cfg) {
  const std::string_view spec = cfg.dataset;
  if (starts_with(spec, "quadratic:")) {
    std::vector<double> diag;
    for (std::string_view v : split(spec.substr(10), ',')) {
      diag.push_back(parse_real(v, "quadratic diagonal"));
    }
    return LoadedProblem{
        Problem::quadratic(DenseVector(std::move(diag)), cfg.clients),
        std::string(spec), fnv1a(spec)};
  }
  Dataset data;
  std::string description;
  if (starts_with(spec, "synthetic:") || starts_with(spec, "binary:")) {
    const bool binary = starts_with(spec, "binary:");
    const auto parts = split(spec.substr(spec.find(':') + 1), ':');
    if (parts.size() != 3) {
      throw std::invalid_argument(
          "generated datasets are synthetic:N:d:seed or binary:N:d:seed");
    }
    const auto num = parse_uint(parts[0], "N");
    const auto dim = parse_uint(parts[1], "d");
    const auto seed = parse_uint(parts[2], "seed");
    data = binary ? make_sparse_binary_dataset(num, dim, seed)
                  : make_synthetic_dataset(num, dim, seed);
    description = std::string(spec);
  } else {
    if (!std::filesystem::exists(cfg.dataset)) {
      throw std::runtime_error("dataset not found: " + cfg.dataset);
    }
    data = load_libsvm(cfg.dataset);
    description = std::filesystem::path(cfg.dataset).filename().string();
  }
  if (cfg.scale) scale_max_abs(data);
  const std::uint64_t hash = dataset_hash(data);
  const Partition part = partition(data.examples, cfg.clients,
                                   cfg.partition_seed);
  return LoadedProblem{make_logistic_problem(data, part, cfg.lambda),
                       description, hash};
}

Method resolve_method(std::string_view token, const RunConfig& cfg,
                      std::size_t dim) {
  token = trim(token);
  Method m;
  if (token == "gd") {
    m = {"gd", ThreePCSpec::identity()};
  } else if (token == "ef21") {
    m = {"ef21", ThreePCSpec::ef21(ContractorSpec::top_k(cfg.k))};
  } else if (token == "lag") {
    m = {"lag", ThreePCSpec::lag(cfg.zeta)};
  } else if (token == "clag") {
    m = {"clag", ThreePCSpec::clag(ContractorSpec::top_k(cfg.k), cfg.zeta)};
  } else if (token == "adacgd") {
    const std::vector<std::size_t> ks =
        cfg.klist.empty() ? default_klist(dim) : cfg.klist;
    std::vector<ContractorSpec> cs;
    for (std::size_t k : ks) cs.push_back(ContractorSpec::top_k(k));
    m = {"adacgd", ThreePCSpec::adacgd(std::move(cs), cfg.zeta)};
  } else {
    m = {sanitize(token), parse_threepc(token)};
  }
  m.spec.validate(dim);
  return m;
}

StepsizeRule resolve_stepsize(const RunConfig& cfg, bool bidirectional) {
  const std::string& s = cfg.stepsize;
  if (s == "auto") {
    return bidirectional ? StepsizeRule::bidirectional()
                         : StepsizeRule::nonconvex();
  }
  if (s == "convex") return StepsizeRule::convex();
  if (s == "nonconvex") return StepsizeRule::nonconvex();
  if (s == "pl") return StepsizeRule::pl();
  if (s == "bidirectional") return StepsizeRule::bidirectional();
  if (starts_with(s, "manual:")) {
    return StepsizeRule::manual(parse_real(std::string_view(s).substr(7),
                                           "stepsize"));
  }
  throw std::invalid_argument("unknown stepsize rule '" + s + "'");
}

void write_trace(std::ostream& out, const Trace& trace) {
  for (const auto& [key, value] : trace.metadata) {
    out << "# " << key << " = " << value << "\n";
  }
  out << kTraceHeader << "\n";
  for (const IterationRecord& r : trace.records) {
    out << r.round << "," << format_real(r.f_value) << ","
        << format_real(r.grad_norm_sq) << "," << format_real(r.phi) << ","
        << format_real(r.psi) << "," << format_real(r.g_error) << ","
        << format_real(r.master_error) << "," << r.uplink_bits_cum << ","
        << r.downlink_bits_cum << ",";
    for (std::size_t j = 0; j < r.branch_histogram.size(); ++j) {
      out << (j > 0 ? ";" : "") << r.branch_histogram[j];
    }
    out << "\n";
  }
}

Trace read_trace(std::istream& in) {
  Trace trace;
  std::string line;
  bool header_seen = false;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& what) {
    throw std::runtime_error("trace line " + std::to_string(line_no) + ": " +
                             what);
  };
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = trim(line);
    if (view.empty()) continue;
    if (view[0] == '#') {
      if (header_seen) fail("metadata after header");
      view = trim(view.substr(1));
      const auto eq = view.find(" = ");
      if (eq == std::string_view::npos) fail("malformed metadata");
      trace.metadata.emplace_back(std::string(trim(view.substr(0, eq))),
                                  std::string(trim(view.substr(eq + 3))));
      continue;
    }
    if (!header_seen) {
      if (view != kTraceHeader) fail("unexpected column header");
      header_seen = true;
      continue;
    }
    const auto cols = split(view, ',');
    if (cols.size() != 10) fail("expected 10 columns");
    IterationRecord r;
    try {
      r.round = parse_uint(cols[0], "round");
      r.f_value = parse_real(cols[1], "f_value");
      r.grad_norm_sq = parse_real(cols[2], "grad_norm_sq");
      r.phi = parse_real(cols[3], "phi");
      r.psi = parse_real(cols[4], "psi");
      r.g_error = parse_real(cols[5], "g_error");
      r.master_error = parse_real(cols[6], "master_error");
      r.uplink_bits_cum = parse_uint(cols[7], "uplink_bits_cum");
      r.downlink_bits_cum = parse_uint(cols[8], "downlink_bits_cum");
      if (!cols[9].empty()) {
        for (std::string_view c : split(cols[9], ';')) {
          r.branch_histogram.push_back(parse_uint(c, "branch count"));
        }
      }
    } catch (const std::invalid_argument& e) {
      fail(e.what());
    }
    if (!trace.records.empty()) {
      const IterationRecord& prev = trace.records.back();
      if (r.round <= prev.round) fail("rounds not strictly increasing");
      if (r.uplink_bits_cum < prev.uplink_bits_cum ||
          r.downlink_bits_cum < prev.downlink_bits_cum) {
        fail("cumulative bits decreased");
      }
      r.uplink_bits_round = r.uplink_bits_cum - prev.uplink_bits_cum;
      r.downlink_bits_round = r.downlink_bits_cum - prev.downlink_bits_cum;
    } else {
      r.uplink_bits_round = r.uplink_bits_cum;
      r.downlink_bits_round = r.downlink_bits_cum;
    }
    trace.records.push_back(std::move(r));
  }
  if (!header_seen) throw std::runtime_error("trace has no column header");
  return trace;
}

std::optional<std::uint64_t> bits_to_tolerance(
    const std::vector<IterationRecord>& records, double tol) {
  for (const IterationRecord& r : records) {
    if (r.grad_norm_sq <= tol) return r.uplink_bits_cum;
  }
  return std::nullopt;
}

std::vector<MethodSummary> summarize(const std::vector<RunOutcome>& runs) {
  std::vector<MethodSummary> out;
  for (const RunOutcome& run : runs) {
    auto it = std::find_if(out.begin(), out.end(), [&](const MethodSummary& s) {
      return s.method == run.method;
    });
    if (it == out.end()) {
      out.push_back(MethodSummary{run.method, std::nullopt, std::nullopt, 0});
      it = out.end() - 1;
    }
    if (run.diverged) {
      ++it->diverged_runs;
      continue;
    }
    if (!run.bits_to_tol) continue;
    const bool better =
        !it->best_bits || *run.bits_to_tol < *it->best_bits ||
        (*run.bits_to_tol == *it->best_bits &&
         run.multiplier < *it->best_multiplier);
    if (better) {
      it->best_bits = run.bits_to_tol;
      it->best_multiplier = run.multiplier;
    }
  }
  return out;
}

ExperimentResult run_experiment(const RunConfig& cfg) {
  if (cfg.multipliers.empty()) {
    throw std::invalid_argument("multiplier set is empty");
  }
  const LoadedProblem lp = load_problem(cfg);
  const Problem& problem = lp.problem;
  const std::size_t d = problem.dim();
  std::vector<Method> methods;
  for (const std::string& token : cfg.methods) {
    methods.push_back(resolve_method(token, cfg, d));
  }
  const Method master = resolve_method(cfg.master, cfg, d);
  const bool bidirectional = master.spec.kind != ThreePCKind::kIdentity;

  const std::filesystem::path out_dir = resolve_out_dir(cfg);
  std::filesystem::create_directories(out_dir);

  std::optional<double> f_star = problem.exact_minimum();
  if (!f_star && cfg.reference) {
    std::filesystem::path cache_dir = out_dir;
    if (std::filesystem::exists(cfg.dataset)) {
      cache_dir = std::filesystem::path(cfg.dataset).parent_path();
      if (cache_dir.empty()) cache_dir = ".";
    }
    f_star = cached_reference(lp, cfg, cache_dir, 1e-10).f_star;
  }

  const SmoothnessConstants sc = smoothness(problem);
  const ThreePCConstants master_c = certified_constants(master.spec, d);
  const DenseVector x0 = cfg.x0.empty() ? DenseVector(d) : DenseVector(cfg.x0);
  if (x0.dim() != d) {
    throw std::invalid_argument("x0 has " + std::to_string(x0.dim()) +
                                " entries, problem dimension is " +
                                std::to_string(d));
  }
  ExperimentResult result;
  for (const Method& method : methods) {
    const ThreePCConstants worker_c = certified_constants(method.spec, d);
    for (double mult : cfg.multipliers) {
      const StepsizeRule rule =
          resolve_stepsize(cfg, bidirectional).multiplied(mult);
      RunOutcome run;
      run.method = method.label;
      run.spec = method.spec.to_string();
      run.multiplier = mult;
      run.gamma = theoretical_stepsize(rule, sc, worker_c, master_c);
      EngineOptions opts;
      opts.init = cfg.init;
      opts.value_bits = cfg.value_bits;
      opts.seed = cfg.seed;
      opts.f_star = f_star;
      const Engine engine(problem, method.spec, master.spec, run.gamma, opts);
      try {
        run.records = engine.run(x0, cfg.stop);
      } catch (const DivergenceError& e) {
        run.diverged = true;
        run.diverged_round = e.round();
        run.records = e.partial_trace();
      }
      if (!run.diverged) {
        run.bits_to_tol = bits_to_tolerance(run.records, cfg.tolerance);
      }

      Trace trace;
      trace.metadata = {
          {"dataset", lp.description},
          {"clients", std::to_string(problem.num_clients())},
          {"dim", std::to_string(d)},
          {"lambda", format_real(problem.lambda())},
          {"method", run.method},
          {"worker", run.spec},
          {"master", master.spec.to_string()},
          {"worker_A", format_real(worker_c.a)},
          {"worker_B", format_real(worker_c.b)},
          {"master_A", format_real(master_c.a)},
          {"master_B", format_real(master_c.b)},
          {"L_minus", format_real(sc.l_minus)},
          {"L_plus", format_real(sc.l_plus)},
          {"stepsize_rule", cfg.stepsize},
          {"multiplier", format_real(mult)},
          {"gamma", format_real(run.gamma)},
          {"value_bits", std::to_string(cfg.value_bits)},
          {"init", cfg.init == InitMode::kFull ? "full" : "compressed"},
          {"stop", stop_string(cfg.stop)},
          {"seed", std::to_string(cfg.seed)},
          {"f_star", f_star ? format_real(*f_star) : std::string("none")},
          {"diverged", run.diverged ? std::to_string(run.diverged_round)
                                    : std::string("no")},
      };
      trace.records = run.records;
      run.trace_path =
          out_dir / (method.label + "_x" + format_real(mult) + ".csv");
      std::ofstream out(run.trace_path, std::ios::binary);
      if (!out) {
        throw std::runtime_error("cannot write " + run.trace_path.string());
      }
      write_trace(out, trace);
      result.runs.push_back(std::move(run));
    }
  }

  result.summary = summarize(result.runs);
  const MethodSummary* ada = nullptr;
  const MethodSummary* lag = nullptr;
  for (const MethodSummary& s : result.summary) {
    if (s.method == "adacgd") ada = &s;
    if (s.method == "lag") lag = &s;
  }
  if (ada && lag && lag->best_bits) {
    result.adacgd_lag_inversion =
        !ada->best_bits || *ada->best_bits > *lag->best_bits;
  }

  std::ofstream csv(out_dir / "summary.csv", std::ios::binary);
  std::ofstream txt(out_dir / "summary.txt", std::ios::binary);
  csv << "method,best_multiplier,bits_to_tolerance,diverged_runs\n";
  txt << "tolerance ||grad f||^2 <= " << format_real(cfg.tolerance) << "\n";
  for (const MethodSummary& s : result.summary) {
    const std::string mult =
        s.best_multiplier ? format_real(*s.best_multiplier) : "none";
    const std::string bits =
        s.best_bits ? std::to_string(*s.best_bits) : "unreached";
    csv << s.method << "," << mult << "," << bits << "," << s.diverged_runs
        << "\n";
    txt << s.method << ": best multiplier " << mult << ", uplink bits "
        << bits << ", diverged runs " << s.diverged_runs << "\n";
  }
  if (ada && lag) {
    txt << (result.adacgd_lag_inversion
                ? "INVERSION: adacgd needed more bits than lag\n"
                : "adacgd <= lag in bits to tolerance\n");
  }
  return result;
}

Reference solve_reference(const Problem& p, double tolerance,
                          std::size_t max_rounds) {
  if (!(tolerance > 0.0)) throw std::invalid_argument("tolerance must be > 0");
  Reference ref;
  if (const auto exact = p.exact_minimum()) {
    ref.f_star = *exact;
    ref.x_star = DenseVector(p.dim());
    ref.converged = true;
    return ref;
  }
  const double gamma = 1.0 / smoothness(p).l_minus;
  DenseVector x(p.dim());
  DenseVector g = p.gradient(x);
  std::size_t t = 0;
  while (std::sqrt(squared_norm(g)) > tolerance && t < max_rounds) {
    for (std::size_t k = 0; k < x.dim(); ++k) x[k] -= gamma * g[k];
    g = p.gradient(x);
    ++t;
  }
  ref.grad_norm = std::sqrt(squared_norm(g));
  ref.converged = ref.grad_norm <= tolerance;
  ref.rounds = t;
  ref.f_star = p.loss(x);
  ref.x_star = std::move(x);
  return ref;
}

std::string reference_key(const RunConfig& cfg, std::uint64_t data_hash) {
  std::ostringstream key;
  key << std::hex << data_hash << std::dec << ":lambda=" << format_real(cfg.lambda)
      << ":n=" << cfg.clients << ":pseed=" << cfg.partition_seed
      << ":scale=" << (cfg.scale ? 1 : 0);
  return key.str();
}

void write_reference(std::ostream& out, const std::string& key,
                     const Reference& ref) {
  out << "key " << key << "\n"
      << "f_star " << format_real(ref.f_star) << "\n"
      << "grad_norm " << format_real(ref.grad_norm) << "\n"
      << "rounds " << ref.rounds << "\n"
      << "converged " << (ref.converged ? 1 : 0) << "\n"
      << "x_star";
  for (double v : ref.x_star.values()) out << " " << format_real(v);
  out << "\n";
}

std::optional<Reference> read_reference(std::istream& in,
                                        const std::string& key) {
  std::map<std::string, std::string> fields;
  std::string line;
  while (std::getline(in, line)) {
    const auto sp = line.find(' ');
    if (sp == std::string::npos) {
      fields[line] = "";
    } else {
      fields[line.substr(0, sp)] = line.substr(sp + 1);
    }
  }
  if (fields["key"] != key) return std::nullopt;
  try {
    Reference ref;
    ref.f_star = parse_real(fields.at("f_star"), "f_star");
    ref.grad_norm = parse_real(fields.at("grad_norm"), "grad_norm");
    ref.rounds = parse_uint(fields.at("rounds"), "rounds");
    ref.converged = parse_bool(fields.at("converged"));
    std::vector<double> xs;
    std::istringstream xin(fields.at("x_star"));
    std::string tok;
    while (xin >> tok) xs.push_back(parse_real(tok, "x_star"));
    ref.x_star = DenseVector(std::move(xs));
    return ref;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

Reference cached_reference(const LoadedProblem& lp, const RunConfig& cfg,
                           const std::filesystem::path& dir, double tolerance,
                           bool* cache_hit) {
  const std::string key = reference_key(cfg, lp.data_hash);
  std::ostringstream name;
  name << "reference_" << std::hex << fnv1a(key) << ".txt";
  const std::filesystem::path path = dir / name.str();
  if (std::ifstream in(path); in) {
    if (auto ref = read_reference(in, key);
        ref && ref->x_star.dim() == lp.problem.dim()) {
      if (cache_hit) *cache_hit = true;
      return *ref;
    }
  }
  if (cache_hit) *cache_hit = false;
  const Reference ref = solve_reference(lp.problem, tolerance);
  std::filesystem::create_directories(dir);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_reference(out, key, ref);
  return ref;
}

}  // namespace adacgd
