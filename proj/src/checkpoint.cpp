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

// Text checkpoint, version 1:
//
//   rte-snn-checkpoint 1
//   leak <float>
//   threshold <float>
//   timesteps <int>
//   surrogate <triangle|sigmoid|rectangle> <width>
//   detach_reset <0|1>
//   layers <count>
//   layer <in> <out> <has_bias 0|1>
//   weight <in*out floats, row-major [in x out]>
//   bias <out floats>              (only when has_bias)
//   ...                            (one layer/weight[/bias] group per layer)
//   end
//
// Floats use the shortest representation that round-trips exactly.

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "rte/error.hpp"
#include "rte/snn.hpp"

namespace rte {

namespace {

constexpr const char* kMagic = "rte-snn-checkpoint";
constexpr int kVersion = 1;

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& token) {
  double v = 0.0;
  auto res = std::from_chars(token.data(), token.data() + token.size(), v);
  if (res.ec != std::errc() || res.ptr != token.data() + token.size()) {
    throw FormatError("checkpoint: invalid number '" + token + "'");
  }
  return v;
}

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::string word() {
    std::string w;
    if (!(in_ >> w)) throw IoError("checkpoint: unexpected end of file");
    return w;
  }

  void expect(const std::string& keyword) {
    const std::string w = word();
    if (w != keyword) {
      throw FormatError("checkpoint: expected '" + keyword + "', found '" + w +
                        "'");
    }
  }

  double number() { return parse_double(word()); }

  std::size_t count() {
    const std::string w = word();
    std::size_t v = 0;
    auto res = std::from_chars(w.data(), w.data() + w.size(), v);
    if (res.ec != std::errc() || res.ptr != w.data() + w.size()) {
      throw FormatError("checkpoint: invalid count '" + w + "'");
    }
    return v;
  }

  Tensor tensor(Shape shape) {
    std::vector<double> data(shape_size(shape));
    for (double& d : data) d = number();
    return Tensor(std::move(shape), std::move(data));
  }

 private:
  std::istream& in_;
};

void write_values(std::ostream& out, const char* tag, const Tensor& t) {
  out << tag;
  for (double v : t.data()) out << ' ' << format_double(v);
  out << '\n';
}

}  // namespace

void write_checkpoint(std::ostream& out, const SnnModel& model) {
  model.validate();
  out << kMagic << ' ' << kVersion << '\n';
  out << "leak " << format_double(model.lif.leak) << '\n';
  out << "threshold " << format_double(model.lif.threshold) << '\n';
  out << "timesteps " << model.lif.timesteps << '\n';
  out << "surrogate " << surrogate_name(model.surrogate.kind) << ' '
      << format_double(model.surrogate.width) << '\n';
  out << "detach_reset " << (model.detach_reset ? 1 : 0) << '\n';
  out << "layers " << model.layers.size() << '\n';
  for (const Linear& l : model.layers) {
    out << "layer " << l.in_features() << ' ' << l.out_features() << ' '
        << (l.bias ? 1 : 0) << '\n';
    write_values(out, "weight", l.weight);
    if (l.bias) write_values(out, "bias", *l.bias);
  }
  out << "end\n";
}

SnnModel read_checkpoint(std::istream& in) {
  Reader r(in);
  const std::string magic = r.word();
  if (magic != kMagic) {
    throw FormatError("not a checkpoint (magic '" + magic + "')");
  }
  const std::size_t version = r.count();
  if (version != kVersion) {
    throw FormatError("unsupported checkpoint version " +
                      std::to_string(version));
  }
  SnnModel model;
  r.expect("leak");
  model.lif.leak = r.number();
  r.expect("threshold");
  model.lif.threshold = r.number();
  r.expect("timesteps");
  model.lif.timesteps = r.count();
  r.expect("surrogate");
  try {
    model.surrogate.kind = parse_surrogate(r.word());
  } catch (const ContractError& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
  model.surrogate.width = r.number();
  r.expect("detach_reset");
  model.detach_reset = r.count() != 0;
  r.expect("layers");
  const std::size_t n = r.count();
  for (std::size_t i = 0; i < n; ++i) {
    r.expect("layer");
    const std::size_t in_f = r.count();
    const std::size_t out_f = r.count();
    const bool has_bias = r.count() != 0;
    if (in_f == 0 || out_f == 0) {
      throw FormatError("checkpoint: zero-width layer");
    }
    Linear layer;
    r.expect("weight");
    layer.weight = r.tensor({in_f, out_f});
    if (has_bias) {
      r.expect("bias");
      layer.bias = r.tensor({out_f});
    }
    model.layers.push_back(std::move(layer));
  }
  r.expect("end");
  try {
    model.validate();
  } catch (const ContractError& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
  return model;
}

void save_checkpoint(const std::filesystem::path& path, const SnnModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  write_checkpoint(out, model);
  if (!out) throw IoError("failed writing checkpoint " + path.string());
}

SnnModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  return read_checkpoint(in);
}

}  // namespace rte
