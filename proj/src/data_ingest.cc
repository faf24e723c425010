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

#include "adacgd/data_ingest.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

namespace adacgd {
namespace {

std::string_view trim(std::string_view s) {
  const auto is_space = [](char c) {
    return c == ' ' || c == '\t' || c == '\r' || c == '\n';
  };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

bool parse_double(std::string_view tok, double& out) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return res.ec == std::errc() && res.ptr == tok.data() + tok.size();
}

int parse_label(std::string_view tok, std::size_t line) {
  double v = 0.0;
  if (!parse_double(tok, v)) {
    throw ParseError(line, "invalid label '" + std::string(tok) + "'");
  }
  if (v == 1.0) return 1;
  if (v == -1.0 || v == 0.0) return -1;
  throw ParseError(line, "label outside {+1, 1, -1, 0}: '" +
                             std::string(tok) + "'");
}

std::string format_real(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

ParseError::ParseError(std::size_t line, const std::string& what)
    : std::runtime_error("line " + std::to_string(line) + ": " + what),
      line_(line) {}

DenseVector Example::dense(std::size_t dim) const {
  DenseVector v(dim);
  for (const Feature& f : features) {
    if (f.index == 0 || f.index > dim) {
      throw std::invalid_argument("feature index outside dimension");
    }
    v[f.index - 1] = f.value;
  }
  return v;
}

Dataset parse_libsvm(std::istream& in, std::optional<std::size_t> expected_dim) {
  Dataset data;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto tokens = split_ws(line);
    Example ex;
    ex.label = parse_label(tokens.front(), line_no);
    for (std::size_t t = 1; t < tokens.size(); ++t) {
      const std::string_view tok = tokens[t];
      const auto colon = tok.find(':');
      if (colon == std::string_view::npos) {
        throw ParseError(line_no, "expected index:value, got '" +
                                      std::string(tok) + "'");
      }
      const std::string_view idx_tok = tok.substr(0, colon);
      std::uint32_t index = 0;
      const auto res = std::from_chars(idx_tok.data(),
                                       idx_tok.data() + idx_tok.size(), index);
      if (res.ec != std::errc() || res.ptr != idx_tok.data() + idx_tok.size() ||
          index == 0) {
        throw ParseError(line_no, "invalid feature index '" +
                                      std::string(idx_tok) + "'");
      }
      double value = 0.0;
      if (!parse_double(tok.substr(colon + 1), value) ||
          !std::isfinite(value)) {
        throw ParseError(line_no, "invalid feature value in '" +
                                      std::string(tok) + "'");
      }
      if (!ex.features.empty() && index <= ex.features.back().index) {
        throw ParseError(line_no, "feature indices must strictly increase");
      }
      ex.features.push_back({index, value});
      data.dim = std::max<std::size_t>(data.dim, index);
    }
    data.examples.push_back(std::move(ex));
  }
  if (expected_dim && *expected_dim > data.dim) data.dim = *expected_dim;
  return data;
}

Dataset parse_libsvm(std::string_view text,
                     std::optional<std::size_t> expected_dim) {
  std::istringstream in{std::string(text)};
  return parse_libsvm(in, expected_dim);
}

Dataset load_libsvm(const std::filesystem::path& path,
                    std::optional<std::size_t> expected_dim) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset " + path.string());
  return parse_libsvm(in, expected_dim);
}

std::string format_example(const Example& e) {
  std::string out = e.label > 0 ? "+1" : "-1";
  for (const Feature& f : e.features) {
    out += ' ';
    out += std::to_string(f.index);
    out += ':';
    out += format_real(f.value);
  }
  return out;
}

void write_libsvm(std::ostream& out, const Dataset& data) {
  for (const Example& e : data.examples) out << format_example(e) << '\n';
}

Partition partition(std::span<const Example> examples, std::size_t n,
                    std::uint64_t seed) {
  const std::size_t total = examples.size();
  if (n == 0 || n > total) {
    throw std::invalid_argument("cannot split " + std::to_string(total) +
                                " examples into " + std::to_string(n) +
                                " clients");
  }
  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), std::size_t{0});
  SeededRng rng(seed, 0x5348554646ULL);
  for (std::size_t i = total; i > 1; --i) {
    std::swap(order[i - 1], order[rng.uniform_index(i)]);
  }
  Partition p;
  p.seed = seed;
  const std::size_t base = total / n;
  const std::size_t extra = total % n;
  std::size_t pos = 0;
  for (std::size_t s = 0; s < n; ++s) {
    const std::size_t size = base + (s < extra ? 1 : 0);
    p.shards.emplace_back(order.begin() + static_cast<long>(pos),
                          order.begin() + static_cast<long>(pos + size));
    pos += size;
  }
  return p;
}

void scale_max_abs(Dataset& data) {
  std::vector<double> max_abs(data.dim, 0.0);
  for (const Example& e : data.examples) {
    for (const Feature& f : e.features) {
      max_abs[f.index - 1] = std::max(max_abs[f.index - 1], std::abs(f.value));
    }
  }
  for (Example& e : data.examples) {
    for (Feature& f : e.features) {
      if (max_abs[f.index - 1] > 0.0) f.value /= max_abs[f.index - 1];
    }
  }
}

Problem make_logistic_problem(const Dataset& data, const Partition& part,
                              double lambda) {
  std::vector<ClientShard> shards;
  shards.reserve(part.shards.size());
  for (const auto& members : part.shards) {
    ClientShard shard;
    for (std::size_t idx : members) {
      const Example& e = data.examples.at(idx);
      std::vector<ClientShard::Entry> row;
      row.reserve(e.features.size());
      for (const Feature& f : e.features) {
        row.push_back({f.index - 1, f.value});
      }
      shard.add_example(static_cast<double>(e.label), std::move(row));
    }
    shards.push_back(std::move(shard));
  }
  return Problem::logistic(std::move(shards), data.dim, lambda);
}

Dataset make_synthetic_dataset(std::size_t num_examples, std::size_t dim,
                               std::uint64_t seed, double flip_prob) {
  if (dim == 0) throw std::invalid_argument("dimension must be positive");
  SeededRng rng(seed, 0x53594E5448ULL);
  std::vector<double> w(dim);
  for (double& v : w) v = rng.normal();
  Dataset data;
  data.dim = dim;
  const double feature_scale = 1.0 / std::sqrt(static_cast<double>(dim));
  for (std::size_t r = 0; r < num_examples; ++r) {
    Example e;
    double margin = 0.0;
    for (std::size_t k = 0; k < dim; ++k) {
      const double v = rng.normal() * feature_scale;
      margin += v * w[k];
      e.features.push_back({static_cast<std::uint32_t>(k + 1), v});
    }
    e.label = margin >= 0.0 ? 1 : -1;
    if (rng.uniform() < flip_prob) e.label = -e.label;
    data.examples.push_back(std::move(e));
  }
  return data;
}

Dataset make_sparse_binary_dataset(std::size_t num_examples, std::size_t dim,
                                   std::uint64_t seed, double flip_prob) {
  if (dim == 0) throw std::invalid_argument("dimension must be positive");
  SeededRng rng(seed, 0x5350415253ULL);
  std::vector<double> w(dim), freq(dim);
  for (std::size_t k = 0; k < dim; ++k) {
    w[k] = rng.normal();
    const double pos = dim > 1 ? static_cast<double>(k) / (dim - 1) : 0.0;
    freq[k] = 0.9 * std::pow(0.02 / 0.9, pos);
  }
  double offset = 0.0;
  for (std::size_t k = 0; k < dim; ++k) offset -= 0.5 * w[k] * freq[k];
  Dataset data;
  data.dim = dim;
  for (std::size_t r = 0; r < num_examples; ++r) {
    Example e;
    double margin = offset;
    for (std::size_t k = 0; k < dim; ++k) {
      if (rng.uniform() < freq[k]) {
        margin += w[k];
        e.features.push_back({static_cast<std::uint32_t>(k + 1), 1.0});
      }
    }
    e.label = margin >= 0.0 ? 1 : -1;
    if (rng.uniform() < flip_prob) e.label = -e.label;
    data.examples.push_back(std::move(e));
  }
  return data;
}

}  // namespace adacgd
