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

#include "rte/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "rte/error.hpp"

namespace rte {

std::filesystem::path RunConfig::checkpoint_path() const {
  if (!checkpoint.empty()) return checkpoint;
  return std::filesystem::path(out) / "model.ckpt";
}

namespace {

// Thrown by value parsers; rewrapped with key and line by the caller.
struct BadValue {
  std::string message;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& s) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size() ||
      !std::isfinite(v)) {
    throw BadValue{"expected a number, got '" + s + "'"};
  }
  return v;
}

std::uint64_t to_u64(const std::string& s) {
  std::uint64_t v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw BadValue{"expected a non-negative integer, got '" + s + "'"};
  }
  return v;
}

std::size_t to_size(const std::string& s) {
  return static_cast<std::size_t>(to_u64(s));
}

bool to_bool(const std::string& s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw BadValue{"expected true or false, got '" + s + "'"};
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
std::string join(const std::vector<T>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    if constexpr (std::is_same_v<T, std::string>) {
      out += v[i];
    } else {
      out += std::to_string(v[i]);
    }
  }
  return out;
}

std::string bool_str(bool b) { return b ? "true" : "false"; }

template <typename F>
auto wrap(F&& f) {
  try {
    return f();
  } catch (const ContractError& e) {
    throw BadValue{e.what()};
  }
}

struct Entry {
  KeyInfo info;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define RTE_NUM(field) [](RunConfig& c, const std::string& v) { c.field = to_double(v); }, \
                       [](const RunConfig& c) { return format_number(c.field); }
#define RTE_SIZE(field) [](RunConfig& c, const std::string& v) { c.field = to_size(v); }, \
                        [](const RunConfig& c) { return std::to_string(c.field); }
#define RTE_BOOL(field) [](RunConfig& c, const std::string& v) { c.field = to_bool(v); }, \
                        [](const RunConfig& c) { return bool_str(c.field); }
#define RTE_STR(field) [](RunConfig& c, const std::string& v) { c.field = v; }, \
                       [](const RunConfig& c) { return c.field; }

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = {
      {{"seed", "master seed for initialization, batching and attacks"},
       [](RunConfig& c, const std::string& v) { c.seed = to_u64(v); c.train.seed = c.seed; },
       [](const RunConfig& c) { return std::to_string(c.seed); }},
      {{"out", "output directory"}, RTE_STR(out)},
      {{"checkpoint", "model checkpoint path (empty: <out>/model.ckpt)"}, RTE_STR(checkpoint)},
      {{"method", "training method: rte, at, trades or clean"},
       [](RunConfig& c, const std::string& v) { c.train.method = wrap([&] { return parse_method(v); }); },
       [](const RunConfig& c) { return std::string(method_name(c.train.method)); }},
      {{"dataset", "blobs or idx:DIR (MNIST-named IDX files in DIR)"}, RTE_STR(dataset)},
      {{"data_seed", "seed of the synthetic dataset"},
       [](RunConfig& c, const std::string& v) { c.data_seed = to_u64(v); },
       [](const RunConfig& c) { return std::to_string(c.data_seed); }},
      {{"blobs_train", "number of synthetic training examples"}, RTE_SIZE(blobs_train)},
      {{"blobs_test", "number of synthetic test examples"}, RTE_SIZE(blobs_test)},
      {{"blobs_classes", "number of blob classes"}, RTE_SIZE(blobs_classes)},
      {{"blobs_dim", "blob input dimension"}, RTE_SIZE(blobs_dim)},
      {{"blobs_spread", "per-coordinate standard deviation of each blob"}, RTE_NUM(blobs_spread)},
      {{"blobs_min_distance", "minimum distance between blob centers"}, RTE_NUM(blobs_min_distance)},
      {{"idx_train_limit", "use only the first N IDX training examples (0: all)"}, RTE_SIZE(idx_train_limit)},
      {{"idx_test_limit", "use only the first N IDX test examples (0: all)"}, RTE_SIZE(idx_test_limit)},
      {{"hidden", "comma-separated hidden layer widths"},
       [](RunConfig& c, const std::string& v) {
         c.hidden.clear();
         for (const auto& w : split_list(v)) c.hidden.push_back(to_size(w));
       },
       [](const RunConfig& c) { return join(c.hidden); }},
      {{"timesteps", "number of simulation timesteps T"}, RTE_SIZE(lif.timesteps)},
      {{"leak", "membrane leak factor in (0, 1]"}, RTE_NUM(lif.leak)},
      {{"threshold", "firing threshold"}, RTE_NUM(lif.threshold)},
      {{"surrogate", "surrogate gradient: triangle, sigmoid or rectangle"},
       [](RunConfig& c, const std::string& v) { c.surrogate.kind = wrap([&] { return parse_surrogate(v); }); },
       [](const RunConfig& c) { return std::string(surrogate_name(c.surrogate.kind)); }},
      {{"surrogate_width", "surrogate gradient width"}, RTE_NUM(surrogate.width)},
      {{"detach_reset", "treat the reset factor as constant in backward"}, RTE_BOOL(detach_reset)},
      {{"readout_bias", "give the readout layer a bias"}, RTE_BOOL(readout_bias)},
      {{"epochs", "training epochs"}, RTE_SIZE(train.epochs)},
      {{"batch_size", "mini-batch size"}, RTE_SIZE(train.batch_size)},
      {{"learning_rate", "SGD learning rate"}, RTE_NUM(train.learning_rate)},
      {{"momentum", "SGD momentum in [0, 1)"}, RTE_NUM(train.momentum)},
      {{"cosine_decay", "cosine learning-rate decay over the epochs"}, RTE_BOOL(train.cosine_decay)},
      {{"grad_clip", "global gradient-norm clip (0: off)"}, RTE_NUM(train.grad_clip)},
      {{"gamma", "RTE regularization weight (TRADES beta)"}, RTE_NUM(train.gamma)},
      {{"kl_epsilon", "lower clamp on probabilities inside logs"}, RTE_NUM(train.kl_epsilon)},
      {{"kl_direction", "ref-first or adv-first"},
       [](RunConfig& c, const std::string& v) { c.train.kl_direction = wrap([&] { return parse_kl_direction(v); }); },
       [](const RunConfig& c) { return std::string(kl_direction_name(c.train.kl_direction)); }},
      {{"epsilon", "l-infinity budget of training and transfer-matrix attacks"}, RTE_NUM(train.attack.epsilon)},
      {{"alpha", "step size of training and transfer-matrix attacks"}, RTE_NUM(train.attack.alpha)},
      {{"steps", "iterations K of training and transfer-matrix attacks"}, RTE_SIZE(train.attack.steps)},
      {{"random_start", "uniform random start for training attacks"}, RTE_BOOL(train.attack.random_start)},
      {{"eval_steps", "PGD iterations for the per-epoch robust accuracy"}, RTE_SIZE(train.eval_steps)},
      {{"attacks", "evaluation attacks: fgsm:EPS, pgd:EPS:STEPS[:ALPHA], comma separated"},
       [](RunConfig& c, const std::string& v) { c.attacks = split_list(v); },
       [](const RunConfig& c) { return join(c.attacks); }},
      {{"metric", "transfer-matrix shift metric: kl or l2"},
       [](RunConfig& c, const std::string& v) { c.metric = wrap([&] { return parse_metric(v); }); },
       [](const RunConfig& c) { return std::string(metric_name(c.metric)); }},
      {{"transfer_samples", "evaluation subset size for the transfer matrix (0: all)"}, RTE_SIZE(transfer_samples)},
      {{"surface_extent", "half-width of the loss-surface lattice"}, RTE_NUM(surface_extent)},
      {{"surface_resolution", "loss-surface points per axis"}, RTE_SIZE(surface_resolution)},
      {{"surface_index", "test example used for the loss surface"}, RTE_SIZE(surface_index)},
  };
  return table;
}

#undef RTE_NUM
#undef RTE_SIZE
#undef RTE_BOOL
#undef RTE_STR

const Entry* find_entry(const std::string& key) {
  for (const Entry& e : entries())
    if (e.info.key == key) return &e;
  return nullptr;
}

void apply(RunConfig& cfg, const std::string& key, const std::string& value,
           int line) {
  const Entry* e = find_entry(key);
  if (!e) throw ConfigError(key, line, "unknown key");
  try {
    e->set(cfg, value);
  } catch (const BadValue& bad) {
    throw ConfigError(key, line, bad.message);
  }
}

void validate(const RunConfig& c, const std::map<std::string, int>& lines) {
  const auto fail = [&](const std::string& key, const std::string& msg) {
    const auto it = lines.find(key);
    throw ConfigError(key, it == lines.end() ? 0 : it->second, msg);
  };
  const auto& t = c.train;
  if (!(t.attack.epsilon >= 0.0)) fail("epsilon", "must be >= 0");
  if (t.attack.steps > 0 && !(t.attack.alpha > 0.0)) fail("alpha", "must be > 0");
  if (!(t.gamma >= 0.0)) fail("gamma", "must be >= 0");
  if (t.epochs < 1) fail("epochs", "must be >= 1");
  if (t.batch_size < 1) fail("batch_size", "must be >= 1");
  if (!(t.learning_rate > 0.0)) fail("learning_rate", "must be > 0");
  if (!(t.momentum >= 0.0 && t.momentum < 1.0)) fail("momentum", "must lie in [0, 1)");
  if (!(t.grad_clip >= 0.0)) fail("grad_clip", "must be >= 0");
  if (!(t.kl_epsilon > 0.0)) fail("kl_epsilon", "must be > 0");
  if (c.lif.timesteps < 1) fail("timesteps", "must be >= 1");
  if (!(c.lif.leak > 0.0 && c.lif.leak <= 1.0)) fail("leak", "must lie in (0, 1]");
  if (!(c.lif.threshold > 0.0)) fail("threshold", "must be > 0");
  if (!(c.surrogate.width > 0.0)) fail("surrogate_width", "must be > 0");
  if (c.hidden.empty()) fail("hidden", "needs at least one hidden layer");
  if (std::find(c.hidden.begin(), c.hidden.end(), 0) != c.hidden.end()) {
    fail("hidden", "widths must be positive");
  }
  if (c.dataset != "blobs" && c.dataset.rfind("idx:", 0) != 0) {
    fail("dataset", "must be 'blobs' or 'idx:DIR'");
  }
  if (c.dataset == "idx:") fail("dataset", "idx: needs a directory");
  if (c.blobs_train < 1) fail("blobs_train", "must be >= 1");
  if (c.blobs_test < 1) fail("blobs_test", "must be >= 1");
  if (c.blobs_classes < 2) fail("blobs_classes", "must be >= 2");
  if (c.blobs_dim < 2) fail("blobs_dim", "must be >= 2");
  if (!(c.blobs_spread >= 0.0)) fail("blobs_spread", "must be >= 0");
  if (!(c.blobs_min_distance >= 0.0)) fail("blobs_min_distance", "must be >= 0");
  if (c.attacks.empty()) fail("attacks", "needs at least one attack");
  for (const auto& a : c.attacks) {
    try {
      parse_eval_attack(a);
    } catch (const ContractError& e) {
      fail("attacks", e.what());
    }
  }
  if (!(c.surface_extent >= 0.0)) fail("surface_extent", "must be >= 0");
  if (c.surface_resolution < 2) fail("surface_resolution", "must be >= 2");
}

RunConfig parse_lines(const std::string& text,
                      const std::vector<std::pair<std::string, std::string>>& overrides) {
  RunConfig cfg;
  std::map<std::string, int> lines;
  std::istringstream in(text);
  int n = 0;
  for (std::string raw; std::getline(in, raw);) {
    ++n;
    std::string line = raw.substr(0, raw.find('#'));
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("", n, "expected 'key = value', got '" + trim(raw) + "'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (lines.count(key)) throw ConfigError(key, n, "duplicate key");
    apply(cfg, key, value, n);
    lines[key] = n;
  }
  for (const auto& [key, value] : overrides) {
    apply(cfg, key, value, 0);
    lines[key] = 0;
  }
  validate(cfg, lines);
  return cfg;
}

}  // namespace

const std::vector<KeyInfo>& config_keys() {
  static const std::vector<KeyInfo> keys = [] {
    std::vector<KeyInfo> out;
    for (const Entry& e : entries()) out.push_back(e.info);
    return out;
  }();
  return keys;
}

std::string flag_for_key(const std::string& key) {
  std::string f = "--" + key;
  std::replace(f.begin(), f.end(), '_', '-');
  return f;
}

RunConfig parse_config_text(
    const std::string& text,
    const std::vector<std::pair<std::string, std::string>>& overrides) {
  return parse_lines(text, overrides);
}

RunConfig parse_config(
    const std::optional<std::filesystem::path>& file,
    const std::vector<std::pair<std::string, std::string>>& overrides) {
  std::string text;
  if (file) {
    std::ifstream in(*file, std::ios::binary);
    if (!in) throw IoError("cannot open config " + file->string());
    std::ostringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
  return parse_lines(text, overrides);
}

std::string render_config(const RunConfig& cfg) {
  std::string out = "# resolved run configuration\n";
  for (const Entry& e : entries()) {
    out += e.info.key + " = " + e.get(cfg) + "\n";
  }
  return out;
}

std::pair<Dataset, Dataset> load_datasets(const RunConfig& cfg) {
  if (cfg.dataset == "blobs") {
    BlobsConfig b;
    b.n = cfg.blobs_train + cfg.blobs_test;
    b.n_classes = cfg.blobs_classes;
    b.dim = cfg.blobs_dim;
    b.spread = cfg.blobs_spread;
    b.min_center_distance = cfg.blobs_min_distance;
    b.seed = cfg.data_seed;
    return split(synth_blobs(b), cfg.blobs_train);
  }
  const std::filesystem::path dir = cfg.dataset.substr(4);
  Dataset train = load_idx(dir / "train-images-idx3-ubyte", dir / "train-labels-idx1-ubyte");
  Dataset test = load_idx(dir / "t10k-images-idx3-ubyte", dir / "t10k-labels-idx1-ubyte");
  const auto limit = [](Dataset d, std::size_t n) {
    if (n == 0 || n >= d.size()) return d;
    return split(d, n).first;
  };
  train = limit(std::move(train), cfg.idx_train_limit);
  test = limit(std::move(test), cfg.idx_test_limit);
  const std::size_t classes = std::max(train.n_classes, test.n_classes);
  train.n_classes = test.n_classes = classes;
  return {std::move(train), std::move(test)};
}

SnnModel build_model(const RunConfig& cfg, std::size_t input_features,
                     std::size_t classes) {
  std::vector<std::size_t> widths{input_features};
  widths.insert(widths.end(), cfg.hidden.begin(), cfg.hidden.end());
  widths.push_back(classes);
  SnnModel model = SnnModel::create(widths, cfg.lif, cfg.surrogate,
                                    cfg.readout_bias, cfg.seed);
  model.detach_reset = cfg.detach_reset;
  return model;
}

std::vector<EvalAttack> eval_attacks(const RunConfig& cfg) {
  std::vector<EvalAttack> out;
  for (const auto& a : cfg.attacks) out.push_back(parse_eval_attack(a));
  return out;
}

}  // namespace rte
