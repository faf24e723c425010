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

#ifndef ADACGD_DATA_INGEST_H_
#define ADACGD_DATA_INGEST_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "adacgd/core_types.h"
#include "adacgd/problems.h"

namespace adacgd {

struct Feature {
  std::uint32_t index;  // 1-based
  double value;
  friend bool operator==(const Feature&, const Feature&) = default;
};

struct Example {
  int label = 1;  // -1 or +1
  std::vector<Feature> features;  // strictly increasing indices

  DenseVector dense(std::size_t dim) const;
  friend bool operator==(const Example&, const Example&) = default;
};

struct Dataset {
  std::vector<Example> examples;
  std::size_t dim = 0;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// LIBSVM text: "<label> <index>:<value> ...", one example per line. Labels
// +1/1 map to +1 and -1/0 to -1. Blank lines and '#' comments are ignored.
// The inferred dim is the largest index seen, raised to expected_dim if that
// is larger. Throws ParseError naming the 1-based line.
Dataset parse_libsvm(std::istream& in,
                     std::optional<std::size_t> expected_dim = std::nullopt);
Dataset parse_libsvm(std::string_view text,
                     std::optional<std::size_t> expected_dim = std::nullopt);
// Throws std::runtime_error if the file cannot be opened.
Dataset load_libsvm(const std::filesystem::path& path,
                    std::optional<std::size_t> expected_dim = std::nullopt);

// One LIBSVM line, values printed with round-trip precision.
std::string format_example(const Example& e);
void write_libsvm(std::ostream& out, const Dataset& data);

struct Partition {
  std::vector<std::vector<std::size_t>> shards;
  std::uint64_t seed = 0;
};

// Seeded Fisher-Yates shuffle, then contiguous blocks; the first N mod n
// shards get one extra example. Throws std::invalid_argument if n == 0 or
// n > N.
Partition partition(std::span<const Example> examples, std::size_t n,
                    std::uint64_t seed);

// Divides every feature column by its max absolute value.
void scale_max_abs(Dataset& data);

Problem make_logistic_problem(const Dataset& data, const Partition& part,
                              double lambda);

// Gaussian features, labels from a random hyperplane with a fraction of
// labels flipped (keeps the data non-separable).
Dataset make_synthetic_dataset(std::size_t num_examples, std::size_t dim,
                               std::uint64_t seed, double flip_prob = 0.1);

// Sparse binary features whose column frequencies decay from about 0.9 to
// 0.02, in the style of LIBSVM's categorical benchmarks; labels from a random
// hyperplane with an offset, flipped with probability flip_prob.
Dataset make_sparse_binary_dataset(std::size_t num_examples, std::size_t dim,
                                   std::uint64_t seed, double flip_prob = 0.1);

}  // namespace adacgd

#endif  // ADACGD_DATA_INGEST_H_
