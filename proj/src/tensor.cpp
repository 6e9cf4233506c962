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

#include "rte/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "rte/error.hpp"

namespace rte {

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

namespace {

void check_extents(const Shape& shape) {
  for (std::size_t e : shape) {
    if (e == 0) {
      throw DimensionError("tensor extents must be positive, got " +
                           shape_string(shape));
    }
  }
}

}  // namespace

Tensor::Tensor(Shape shape) : shape_(std::move(shape)) {
  check_extents(shape_);
  data_.assign(shape_size(shape_), 0.0);
}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  check_extents(shape_);
  if (shape_size(shape_) != data_.size()) {
    throw DimensionError("shape " + shape_string(shape_) + " needs " +
                         std::to_string(shape_size(shape_)) +
                         " elements, got " + std::to_string(data_.size()));
  }
}

Tensor Tensor::scalar(double value) { return Tensor({1}, {value}); }

Tensor Tensor::full(Shape shape, double value) {
  Tensor t(std::move(shape));
  std::fill(t.data_.begin(), t.data_.end(), value);
  return t;
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols,
                      std::vector<double> data) {
  return Tensor({rows, cols}, std::move(data));
}

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= shape_.size()) {
    throw DimensionError("axis " + std::to_string(axis) +
                         " out of range for " + shape_string(shape_));
  }
  return shape_[axis];
}

double Tensor::at(std::size_t r, std::size_t c) const {
  return data_[r * shape_[1] + c];
}

double& Tensor::at(std::size_t r, std::size_t c) {
  return data_[r * shape_[1] + c];
}

double Tensor::item() const {
  if (data_.size() != 1) {
    throw DimensionError("item() on non-scalar tensor " +
                         shape_string(shape_));
  }
  return data_[0];
}

std::span<const double> Tensor::grad() const {
  RTE_REQUIRE(grad_.has_value(), "tensor has no gradient");
  return *grad_;
}

void Tensor::set_grad(std::vector<double> grad) {
  if (grad.size() != data_.size()) {
    throw DimensionError("gradient length " + std::to_string(grad.size()) +
                         " does not match tensor " + shape_string(shape_));
  }
  grad_ = std::move(grad);
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

Tensor Tensor::rows(std::size_t begin, std::size_t end) const {
  if (rank() == 0 || begin >= end || end > shape_[0]) {
    throw DimensionError("row range [" + std::to_string(begin) + "," +
                         std::to_string(end) + ") invalid for " +
                         shape_string(shape_));
  }
  const std::size_t stride = data_.size() / shape_[0];
  Shape shape = shape_;
  shape[0] = end - begin;
  return Tensor(std::move(shape),
                std::vector<double>(data_.begin() + begin * stride,
                                    data_.begin() + end * stride));
}

Tensor Tensor::gather_rows(std::span<const std::size_t> indices) const {
  if (rank() == 0 || indices.empty()) {
    throw DimensionError("gather_rows needs a non-empty index list");
  }
  const std::size_t stride = data_.size() / shape_[0];
  std::vector<double> out;
  out.reserve(indices.size() * stride);
  for (std::size_t i : indices) {
    if (i >= shape_[0]) {
      throw DimensionError("row " + std::to_string(i) + " out of range for " +
                           shape_string(shape_));
    }
    out.insert(out.end(), data_.begin() + i * stride,
               data_.begin() + (i + 1) * stride);
  }
  Shape shape = shape_;
  shape[0] = indices.size();
  return Tensor(std::move(shape), std::move(out));
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(what) + ": shape mismatch " +
                         shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
  }
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a[i] - b[i]));
  }
  return m;
}

}  // namespace rte
