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

#ifndef RTE_TENSOR_HPP_
#define RTE_TENSOR_HPP_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rte {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

// Dense row-major float64 array with an optional gradient slot.
//
// The element count always equals the product of the extents, and the
// gradient, when present, has the same length as the data.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor scalar(double value);
  static Tensor full(Shape shape, double value);
  // Shorthand for 2-D literals in tests and tools.
  static Tensor matrix(std::size_t rows, std::size_t cols,
                       std::vector<double> data);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const { return data_.size(); }

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }
  const std::vector<double>& values() const { return data_; }

  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }

  // Rank-2 element access.
  double at(std::size_t r, std::size_t c) const;
  double& at(std::size_t r, std::size_t c);

  // Value of a single-element tensor.
  double item() const;

  bool has_grad() const { return grad_.has_value(); }
  std::span<const double> grad() const;
  void set_grad(std::vector<double> grad);
  void clear_grad() { grad_.reset(); }

  bool all_finite() const;

  // Copies rows [begin, end) of a rank>=1 tensor along axis 0.
  Tensor rows(std::size_t begin, std::size_t end) const;
  // Gathers the given rows along axis 0.
  Tensor gather_rows(std::span<const std::size_t> indices) const;

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape shape_;
  std::vector<double> data_;
  std::optional<std::vector<double>> grad_;
};

// Throws DimensionError naming both shapes when they differ.
void require_same_shape(const Tensor& a, const Tensor& b, const char* what);

double max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace rte

#endif  // RTE_TENSOR_HPP_
