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

#ifndef RTE_DATA_HPP_
#define RTE_DATA_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "rte/tensor.hpp"

namespace rte {

// Static inputs in [0, 1] with integer class labels.
struct Dataset {
  Tensor inputs;  // [n x features]
  std::vector<std::size_t> labels;
  std::size_t n_classes = 0;

  std::size_t size() const { return labels.size(); }
  std::size_t features() const { return inputs.dim(1); }

  // Throws ConsistencyError / ContractError when an invariant is broken.
  void validate() const;

  Dataset subset(std::span<const std::size_t> indices) const;
};

// Reads an IDX image file (magic 0x00000803, dims n x rows x cols, unsigned
// bytes) and an IDX label file (magic 0x00000801). Pixels are divided by
// 255. n_classes is one past the largest label.
Dataset load_idx(const std::filesystem::path& images,
                 const std::filesystem::path& labels);

// Gaussian blobs. Class centers are drawn uniformly from [0.25, 0.75]^dim
// (rejecting draws closer than `min_center_distance` to an earlier center),
// then every point is its class center plus N(0, spread^2) noise per
// coordinate, clipped to [0, 1]. Point i has label i % n_classes.
struct BlobsConfig {
  std::size_t n = 400;
  std::size_t n_classes = 2;
  std::size_t dim = 2;
  double spread = 0.1;
  double min_center_distance = 0.3;
  std::uint64_t seed = 0;
};

Dataset synth_blobs(const BlobsConfig& cfg);
Dataset synth_blobs(std::size_t n, std::size_t n_classes, std::size_t dim,
                    double spread, std::uint64_t seed);

// Class centers used by synth_blobs for the given config.
std::vector<std::vector<double>> blob_centers(const BlobsConfig& cfg);

// First `n_first` examples and the remainder.
std::pair<Dataset, Dataset> split(const Dataset& data, std::size_t n_first);

struct Batch {
  Tensor x;
  std::vector<std::size_t> y;
  std::vector<std::size_t> indices;
};

// Seeded permutation of 0..n-1 cut into consecutive chunks of `batch_size`;
// the final chunk may be shorter.
std::vector<std::vector<std::size_t>> batch_indices(std::size_t n,
                                                    std::size_t batch_size,
                                                    std::uint64_t shuffle_seed);

std::vector<Batch> batch_iter(const Dataset& data, std::size_t batch_size,
                              std::uint64_t shuffle_seed);

// Unshuffled chunks, for evaluation.
std::vector<Batch> sequential_batches(const Dataset& data,
                                      std::size_t batch_size);

}  // namespace rte

#endif  // RTE_DATA_HPP_
