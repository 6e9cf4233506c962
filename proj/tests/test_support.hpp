// Copyright 2026 The rte-snn Authors
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

// Helpers shared by the unit tests and the acceptance runner.

#ifndef RTE_TESTS_TEST_SUPPORT_HPP_
#define RTE_TESTS_TEST_SUPPORT_HPP_

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "rte/snn.hpp"
#include "rte/tensor.hpp"

namespace rte::testing {

// Copies model weights into the plain-loop oracle layout.
inline std::vector<oracle::Layer> to_oracle(const SnnModel& model) {
  std::vector<oracle::Layer> out;
  for (const Linear& l : model.layers) {
    oracle::Layer o;
    o.w.assign(l.in_features(), oracle::Vec(l.out_features()));
    for (std::size_t i = 0; i < l.in_features(); ++i)
      for (std::size_t j = 0; j < l.out_features(); ++j) o.w[i][j] = l.weight.at(i, j);
    if (l.bias) o.b = l.bias->values();
    out.push_back(std::move(o));
  }
  return out;
}

inline Tensor random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0,
                            double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = u(rng);
  return t;
}

// Central differences of f with respect to every element of `at`.
inline std::vector<double> numeric_gradient(
    const std::function<double(const Tensor&)>& f, const Tensor& at,
    double h = 1e-5) {
  std::vector<double> g(at.size());
  Tensor probe = at;
  for (std::size_t i = 0; i < at.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + h;
    const double up = f(probe);
    probe[i] = orig - h;
    const double down = f(probe);
    probe[i] = orig;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

inline double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / denom;
}

inline double max_relative_error(std::span<const double> analytic,
                                 std::span<const double> numeric) {
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    worst = std::max(worst, relative_error(analytic[i], numeric[i]));
  }
  return worst;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("rte_snn_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace rte::testing

#endif  // RTE_TESTS_TEST_SUPPORT_HPP_
