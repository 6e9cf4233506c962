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

#include "rte/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <numeric>
#include <string>

#include "rte/error.hpp"
#include "rte/random.hpp"

namespace rte {

void Dataset::validate() const {
  if (inputs.rank() != 2) {
    throw ConsistencyError("dataset inputs must be [n x features], got " +
                           shape_string(inputs.shape()));
  }
  if (inputs.dim(0) != labels.size()) {
    throw ConsistencyError("dataset has " + std::to_string(inputs.dim(0)) +
                           " inputs but " + std::to_string(labels.size()) +
                           " labels");
  }
  for (double v : inputs.data()) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw ContractError("dataset input outside [0, 1]: " + std::to_string(v));
    }
  }
  for (std::size_t y : labels) {
    if (y >= n_classes) {
      throw ContractError("label " + std::to_string(y) + " >= n_classes " +
                          std::to_string(n_classes));
    }
  }
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.inputs = inputs.gather_rows(indices);
  out.labels.reserve(indices.size());
  for (std::size_t i : indices) out.labels.push_back(labels.at(i));
  out.n_classes = n_classes;
  return out;
}

// ---------------------------------------------------------------------------
// IDX

namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

std::vector<unsigned char> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return std::vector<unsigned char>(std::istreambuf_iterator<char>(in), {});
}

std::uint32_t be32(const std::vector<unsigned char>& b, std::size_t off,
                   const std::filesystem::path& path) {
  if (off + 4 > b.size()) {
    throw IoError(path.string() + ": truncated IDX header");
  }
  return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) |
         (std::uint32_t{b[off + 2]} << 8) | std::uint32_t{b[off + 3]};
}

std::string hex32(std::uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "0x%08x", v);
  return buf;
}

void check_magic(std::uint32_t got, std::uint32_t want,
                 const std::filesystem::path& path) {
  if (got != want) {
    throw FormatError(path.string() + ": bad IDX magic " + hex32(got) +
                      " (expected " + hex32(want) + ")");
  }
}

}  // namespace

Dataset load_idx(const std::filesystem::path& images,
                 const std::filesystem::path& labels) {
  const auto ib = read_bytes(images);
  check_magic(be32(ib, 0, images), kImagesMagic, images);
  const std::size_t n = be32(ib, 4, images);
  const std::size_t rows = be32(ib, 8, images);
  const std::size_t cols = be32(ib, 12, images);
  const std::size_t pixels = rows * cols;
  if (n == 0 || pixels == 0) {
    throw FormatError(images.string() + ": empty IDX image file");
  }
  if (ib.size() < 16 + n * pixels) {
    throw IoError(images.string() + ": truncated, expected " +
                  std::to_string(16 + n * pixels) + " bytes, got " +
                  std::to_string(ib.size()));
  }

  const auto lb = read_bytes(labels);
  check_magic(be32(lb, 0, labels), kLabelsMagic, labels);
  const std::size_t n_labels = be32(lb, 4, labels);
  if (lb.size() < 8 + n_labels) {
    throw IoError(labels.string() + ": truncated, expected " +
                  std::to_string(8 + n_labels) + " bytes, got " +
                  std::to_string(lb.size()));
  }
  if (n_labels != n) {
    throw ConsistencyError(std::to_string(n) + " images but " +
                           std::to_string(n_labels) + " labels");
  }

  Dataset d;
  d.inputs = Tensor({n, pixels});
  for (std::size_t i = 0; i < n * pixels; ++i) {
    d.inputs[i] = static_cast<double>(ib[16 + i]) / 255.0;
  }
  d.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) d.labels[i] = lb[8 + i];
  d.n_classes = *std::max_element(d.labels.begin(), d.labels.end()) + 1;
  return d;
}

// ---------------------------------------------------------------------------
// Blobs

std::vector<std::vector<double>> blob_centers(const BlobsConfig& cfg) {
  RTE_REQUIRE(cfg.n_classes >= 2, "synth_blobs: need at least 2 classes");
  RTE_REQUIRE(cfg.dim >= 2, "synth_blobs: need dim >= 2");
  Rng rng = make_rng(cfg.seed, {stream::kData, 0});
  std::uniform_real_distribution<double> u(0.25, 0.75);
  // Sequential rejection sampling; restart from scratch when an early bad
  // placement leaves no room for the remaining centers.
  constexpr int kRestarts = 200, kMaxTries = 1000;
  std::vector<std::vector<double>> centers;
  std::vector<double> cand(cfg.dim);
  for (int restart = 0; restart < kRestarts; ++restart) {
    centers.clear();
    while (centers.size() < cfg.n_classes) {
      bool placed = false;
      for (int attempt = 0; attempt < kMaxTries && !placed; ++attempt) {
        for (double& v : cand) v = u(rng);
        placed = std::all_of(centers.begin(), centers.end(), [&](const auto& o) {
          double d2 = 0.0;
          for (std::size_t k = 0; k < cfg.dim; ++k) d2 += (o[k] - cand[k]) * (o[k] - cand[k]);
          return std::sqrt(d2) >= cfg.min_center_distance;
        });
      }
      if (!placed) break;
      centers.push_back(cand);
    }
    if (centers.size() == cfg.n_classes) return centers;
  }
  throw ContractError("synth_blobs: cannot place " + std::to_string(cfg.n_classes) +
                      " centers at the requested minimum distance");
}

Dataset synth_blobs(const BlobsConfig& cfg) {
  RTE_REQUIRE(cfg.spread >= 0.0, "synth_blobs: spread must be >= 0");
  RTE_REQUIRE(cfg.n >= 1, "synth_blobs: n must be >= 1");
  const auto centers = blob_centers(cfg);
  Rng rng = make_rng(cfg.seed, {stream::kData, 1});
  std::normal_distribution<double> noise(0.0, 1.0);
  Dataset d;
  d.n_classes = cfg.n_classes;
  d.inputs = Tensor({cfg.n, cfg.dim});
  d.labels.resize(cfg.n);
  for (std::size_t i = 0; i < cfg.n; ++i) {
    const std::size_t y = i % cfg.n_classes;
    d.labels[i] = y;
    for (std::size_t k = 0; k < cfg.dim; ++k) {
      const double v = centers[y][k] + cfg.spread * noise(rng);
      d.inputs.at(i, k) = std::clamp(v, 0.0, 1.0);
    }
  }
  return d;
}

Dataset synth_blobs(std::size_t n, std::size_t n_classes, std::size_t dim,
                    double spread, std::uint64_t seed) {
  BlobsConfig cfg;
  cfg.n = n;
  cfg.n_classes = n_classes;
  cfg.dim = dim;
  cfg.spread = spread;
  cfg.seed = seed;
  return synth_blobs(cfg);
}

std::pair<Dataset, Dataset> split(const Dataset& data, std::size_t n_first) {
  RTE_REQUIRE(n_first >= 1 && n_first < data.size(),
              "split: first part must be non-empty and leave a remainder");
  std::vector<std::size_t> a(n_first), b(data.size() - n_first);
  std::iota(a.begin(), a.end(), 0);
  std::iota(b.begin(), b.end(), n_first);
  return {data.subset(a), data.subset(b)};
}

// ---------------------------------------------------------------------------
// Batching

std::vector<std::vector<std::size_t>> batch_indices(std::size_t n,
                                                    std::size_t batch_size,
                                                    std::uint64_t shuffle_seed) {
  RTE_REQUIRE(batch_size >= 1, "batch size must be >= 1");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng = make_rng(shuffle_seed, {stream::kShuffle});
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t b = 0; b < n; b += batch_size) {
    const std::size_t e = std::min(n, b + batch_size);
    out.emplace_back(order.begin() + b, order.begin() + e);
  }
  return out;
}

namespace {

Batch make_batch(const Dataset& data, std::vector<std::size_t> idx) {
  Batch b;
  b.x = data.inputs.gather_rows(idx);
  b.y.reserve(idx.size());
  for (std::size_t i : idx) b.y.push_back(data.labels[i]);
  b.indices = std::move(idx);
  return b;
}

}  // namespace

std::vector<Batch> batch_iter(const Dataset& data, std::size_t batch_size,
                              std::uint64_t shuffle_seed) {
  std::vector<Batch> out;
  for (auto& idx : batch_indices(data.size(), batch_size, shuffle_seed)) {
    out.push_back(make_batch(data, std::move(idx)));
  }
  return out;
}

std::vector<Batch> sequential_batches(const Dataset& data,
                                      std::size_t batch_size) {
  RTE_REQUIRE(batch_size >= 1, "batch size must be >= 1");
  std::vector<Batch> out;
  for (std::size_t b = 0; b < data.size(); b += batch_size) {
    std::vector<std::size_t> idx(std::min(data.size(), b + batch_size) - b);
    std::iota(idx.begin(), idx.end(), b);
    out.push_back(make_batch(data, std::move(idx)));
  }
  return out;
}

}  // namespace rte
