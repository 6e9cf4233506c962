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

#include "rte/cli.hpp"

#include <CLI11.hpp>
#include <fstream>
#include <json.hpp>
#include <map>

#include "rte/analysis.hpp"
#include "rte/error.hpp"
#include "rte/training.hpp"

namespace rte {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

fs::path prepare_out(const RunConfig& cfg, const std::string& command) {
  const fs::path dir = cfg.out;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string());
  std::ofstream out(dir / (command + ".config"), std::ios::binary);
  if (!out) throw IoError("cannot write " + (dir / (command + ".config")).string());
  out << render_config(cfg);
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

// Model from the checkpoint plus the test split, checked against each other.
std::pair<SnnModel, Dataset> load_trained(const RunConfig& cfg) {
  SnnModel model = load_checkpoint(cfg.checkpoint_path());
  Dataset test = load_datasets(cfg).second;
  if (test.features() != model.input_features()) {
    throw ConsistencyError("checkpoint expects " +
                           std::to_string(model.input_features()) +
                           " features, dataset has " +
                           std::to_string(test.features()));
  }
  if (test.n_classes > model.classes()) {
    throw ConsistencyError("dataset has more classes than the checkpoint");
  }
  return {std::move(model), std::move(test)};
}

json model_record(const SnnModel& model) {
  return {{"widths", model.widths()},
          {"timesteps", model.lif.timesteps},
          {"leak", model.lif.leak},
          {"threshold", model.lif.threshold}};
}

}  // namespace

void command_train(const RunConfig& cfg, std::ostream& log) {
  const fs::path dir = prepare_out(cfg, "train");
  const auto [train_set, test_set] = load_datasets(cfg);
  SnnModel model = build_model(cfg, train_set.features(),
                               std::max(train_set.n_classes, test_set.n_classes));

  std::ofstream epochs(dir / "train_log.jsonl", std::ios::binary);
  std::ofstream timing(dir / "timing.jsonl", std::ios::binary);
  if (!epochs || !timing) throw IoError("cannot write logs in " + dir.string());

  log << "training " << method_name(cfg.train.method) << " on "
      << train_set.size() << " examples, T=" << cfg.lif.timesteps << "\n";
  train(model, train_set, test_set, cfg.train, [&](const EpochRecord& r) {
    // Wall time lives in its own file so the epoch log stays reproducible.
    epochs << json{{"epoch", r.epoch},
                   {"clean_accuracy", r.clean_accuracy},
                   {"robust_accuracy", r.robust_accuracy},
                   {"mean_loss", r.mean_loss}}
                  .dump()
           << "\n";
    timing << json{{"epoch", r.epoch}, {"wall_seconds", r.wall_seconds}}.dump()
           << "\n";
    epochs.flush();
    log << "epoch " << r.epoch << "  loss " << r.mean_loss << "  clean "
        << r.clean_accuracy << "  robust " << r.robust_accuracy << "\n";
  });
  if (!epochs || !timing) throw IoError("failed writing logs in " + dir.string());
  save_checkpoint(cfg.checkpoint_path(), model);
  log << "checkpoint " << cfg.checkpoint_path().string() << "\n";
}

void command_eval(const RunConfig& cfg, std::ostream& log) {
  const fs::path dir = prepare_out(cfg, "eval");
  const auto [model, test] = load_trained(cfg);
  const std::vector<EvalAttack> attacks = eval_attacks(cfg);
  const EvalReport report = robust_accuracy(model, test, attacks, cfg.seed);

  std::string csv = "attack,accuracy\nclean," + format_number(report.clean_accuracy) + "\n";
  json per_attack = json::array();
  for (std::size_t k = 0; k < attacks.size(); ++k) {
    csv += attacks[k].label() + "," + format_number(report.robust_accuracy[k]) + "\n";
    per_attack.push_back({{"attack", attacks[k].label()},
                          {"epsilon", attacks[k].config.epsilon},
                          {"steps", attacks[k].config.steps},
                          {"alpha", attacks[k].config.alpha},
                          {"accuracy", report.robust_accuracy[k]}});
    log << attacks[k].label() << "  " << report.robust_accuracy[k] << "\n";
  }
  csv += "worst_case," + format_number(report.worst_case_accuracy) + "\n";
  csv += "tradeoff," + format_number(report.tradeoff) + "\n";
  write_text(dir / "eval_report.csv", csv);

  const json meta = {{"checkpoint", cfg.checkpoint_path().string()},
                     {"examples", test.size()},
                     {"seed", cfg.seed},
                     {"model", model_record(model)},
                     {"clean_accuracy", report.clean_accuracy},
                     {"attacks", per_attack},
                     {"worst_case_accuracy", report.worst_case_accuracy},
                     {"tradeoff", report.tradeoff}};
  write_text(dir / "eval_report.json", meta.dump(2) + "\n");
  log << "clean " << report.clean_accuracy << "  worst-case "
      << report.worst_case_accuracy << "  tradeoff " << report.tradeoff << "\n";
}

void command_transfer_matrix(const RunConfig& cfg, std::ostream& log) {
  const fs::path dir = prepare_out(cfg, "transfer-matrix");
  const auto [model, test] = load_trained(cfg);
  TransferOptions opt;
  opt.epsilon = cfg.train.attack.epsilon;
  opt.alpha = cfg.train.attack.alpha;
  opt.steps = cfg.train.attack.steps;
  opt.random_start = cfg.train.attack.random_start;
  opt.metric = cfg.metric;
  opt.n_samples = cfg.transfer_samples;
  opt.seed = cfg.seed;
  const TransferMatrix m = transferability_matrix(model, test, opt);

  write_csv(dir / "transfer_matrix.csv", m.timesteps, m.timesteps, m.values);
  const json meta = {{"rows", "source timestep t of the attack (0-based)"},
                     {"cols", "evaluated sub-network m (0-based)"},
                     {"timesteps", m.timesteps},
                     {"metric", metric_name(m.metric)},
                     {"epsilon", m.epsilon},
                     {"alpha", opt.alpha},
                     {"steps", m.steps},
                     {"random_start", opt.random_start},
                     {"n_samples", m.n_samples},
                     {"seed", m.seed},
                     {"checkpoint", cfg.checkpoint_path().string()},
                     {"mean", m.mean()},
                     {"mean_diagonal", m.mean_diagonal()},
                     {"mean_off_diagonal", m.mean_off_diagonal()},
                     {"mean_by_gap", m.mean_by_gap()}};
  write_text(dir / "transfer_matrix.meta.json", meta.dump(2) + "\n");
  log << "transfer matrix " << m.timesteps << "x" << m.timesteps
      << "  diagonal " << m.mean_diagonal() << "  off-diagonal "
      << m.mean_off_diagonal() << "\n";
}

void command_loss_surface(const RunConfig& cfg, std::ostream& log) {
  const fs::path dir = prepare_out(cfg, "loss-surface");
  const auto [model, test] = load_trained(cfg);
  if (cfg.surface_index >= test.size()) {
    throw ConfigError("surface_index", 0,
                      "index " + std::to_string(cfg.surface_index) +
                          " beyond " + std::to_string(test.size()) +
                          " test examples");
  }
  const Tensor x = test.inputs.rows(cfg.surface_index, cfg.surface_index + 1);
  const std::size_t y = test.labels[cfg.surface_index];
  const auto [u, v] = default_surface_directions(model, x, y, cfg.seed);
  const SurfaceGrid g = loss_surface_grid(model, x, y, u, v, cfg.surface_extent,
                                          cfg.surface_resolution);

  write_csv(dir / "loss_surface.csv", g.a.size(), g.b.size(), g.values);
  const json meta = {{"rows", "coefficient a along dir1"},
                     {"cols", "coefficient b along dir2"},
                     {"a", g.a},
                     {"b", g.b},
                     {"extent", cfg.surface_extent},
                     {"resolution", cfg.surface_resolution},
                     {"index", cfg.surface_index},
                     {"label", y},
                     {"loss", "cross-entropy of the time-averaged output"},
                     {"dir1", u.values()},
                     {"dir2", v.values()},
                     {"seed", cfg.seed},
                     {"checkpoint", cfg.checkpoint_path().string()}};
  write_text(dir / "loss_surface.meta.json", meta.dump(2) + "\n");
  log << "loss surface " << g.a.size() << "x" << g.b.size() << " written\n";
}

int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Robust temporal self-ensemble training and analysis of spiking networks"};
  app.require_subcommand(1);

  struct Command {
    CLI::App* app;
    std::string config;
    std::map<std::string, std::string> values;
    void (*run)(const RunConfig&, std::ostream&);
  };
  std::vector<Command> commands;
  commands.reserve(4);
  const std::pair<const char*, void (*)(const RunConfig&, std::ostream&)> table[] = {
      {"train", command_train},
      {"eval", command_eval},
      {"transfer-matrix", command_transfer_matrix},
      {"loss-surface", command_loss_surface}};
  const char* blurbs[] = {
      "train a model and write its checkpoint and epoch log",
      "clean, per-attack and worst-case accuracy of a checkpoint",
      "cross-timestep adversarial transferability matrix",
      "2-D loss lattice around one test example"};
  for (std::size_t i = 0; i < 4; ++i) {
    commands.push_back(Command{app.add_subcommand(table[i].first, blurbs[i]), "",
                               {}, table[i].second});
  }
  for (Command& c : commands) {
    c.app->add_option("--config", c.config, "key = value config file");
    for (const KeyInfo& k : config_keys()) {
      c.app->add_option(flag_for_key(k.key), c.values[k.key], k.help);
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_code::kOk : exit_code::kConfig;
  }

  try {
    for (Command& c : commands) {
      if (!c.app->parsed()) continue;
      std::vector<std::pair<std::string, std::string>> overrides;
      for (const KeyInfo& k : config_keys()) {
        if (c.app->count(flag_for_key(k.key)) > 0) {
          overrides.emplace_back(k.key, c.values[k.key]);
        }
      }
      std::optional<fs::path> file;
      if (!c.config.empty()) file = c.config;
      const RunConfig cfg = parse_config(file, overrides);
      c.run(cfg, out);
    }
    return exit_code::kOk;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return exit_code::kConfig;
  } catch (const IoError& e) {
    err << "io error: " << e.what() << "\n";
    return exit_code::kIo;
  } catch (const FormatError& e) {
    err << "format error: " << e.what() << "\n";
    return exit_code::kIo;
  } catch (const ConsistencyError& e) {
    err << "consistency error: " << e.what() << "\n";
    return exit_code::kIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_code::kContract;
  }
}

}  // namespace rte
