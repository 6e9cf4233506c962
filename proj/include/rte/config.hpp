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

// Flat key = value run configuration.
//
// One key per line, '#' starts a comment, blank lines are ignored. Every key
// has a command-line twin: `batch_size` <-> `--batch-size`. Flags override
// file values. Unknown keys, malformed values and constraint violations
// raise ConfigError naming the key (and the file line when there is one).

#ifndef RTE_CONFIG_HPP_
#define RTE_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rte/analysis.hpp"
#include "rte/data.hpp"
#include "rte/snn.hpp"
#include "rte/training.hpp"

namespace rte {

struct RunConfig {
  std::uint64_t seed = 0;
  std::string out = "out";
  std::string checkpoint;  // empty: <out>/model.ckpt

  // Data: "blobs" or "idx:DIR" with the four MNIST-named files in DIR.
  std::string dataset = "blobs";
  std::uint64_t data_seed = 0;
  std::size_t blobs_train = 400;
  std::size_t blobs_test = 200;
  std::size_t blobs_classes = 2;
  std::size_t blobs_dim = 2;
  double blobs_spread = 0.1;
  double blobs_min_distance = 0.3;
  std::size_t idx_train_limit = 0;  // 0: all
  std::size_t idx_test_limit = 0;

  // Model.
  std::vector<std::size_t> hidden = {32, 32};
  LifConfig lif;
  SurrogateSpec surrogate;
  bool detach_reset = true;
  bool readout_bias = true;

  // Training (the attack fields double as the training attack).
  TrainConfig train;

  // Evaluation.
  std::vector<std::string> attacks = {"fgsm:0.05", "pgd:0.05:10", "pgd:0.05:50"};

  // Transferability matrix (attacked with epsilon / alpha / steps).
  ShiftMetric metric = ShiftMetric::kKl;
  std::size_t transfer_samples = 256;

  // Loss surface.
  double surface_extent = 0.2;
  std::size_t surface_resolution = 21;
  std::size_t surface_index = 0;

  std::filesystem::path checkpoint_path() const;
};

// Ordered list of every key with its documentation, for --help and README.
struct KeyInfo {
  std::string key;
  std::string help;
};
const std::vector<KeyInfo>& config_keys();

// Converts `batch_size` to `--batch-size`.
std::string flag_for_key(const std::string& key);

// Same as parse_config but reads the key = value text directly.
RunConfig parse_config_text(const std::string& text,
                            const std::vector<std::pair<std::string, std::string>>&
                                overrides = {});

// Reads the optional file, applies the (key, value) overrides in order and
// validates the result.
RunConfig parse_config(const std::optional<std::filesystem::path>& file,
                       const std::vector<std::pair<std::string, std::string>>&
                           overrides = {});

// Every key with its resolved value, in config_keys() order. Parsing the
// rendered text yields an identical RunConfig.
std::string render_config(const RunConfig& cfg);

// Training / test splits described by the dataset keys.
std::pair<Dataset, Dataset> load_datasets(const RunConfig& cfg);

SnnModel build_model(const RunConfig& cfg, std::size_t input_features,
                     std::size_t classes);

std::vector<EvalAttack> eval_attacks(const RunConfig& cfg);

}  // namespace rte

#endif  // RTE_CONFIG_HPP_
