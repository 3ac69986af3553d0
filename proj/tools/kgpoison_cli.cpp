// Copyright 2026 The kgpoison Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// kgpoison command-line front end. Exit codes: 0 success, 1 usage or
// configuration error, 2 data error, 3 numerical divergence.

#include <cstdio>
#include <fstream>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "kgpoison/pipeline.hpp"
#include "kgpoison/synth.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitDivergence = 3;

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw kgp::ConfigError("cannot read " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw kgp::ConfigError("cannot parse " + path + ": " + e.what());
  }
}

kgp::KnowledgeGraph load_graph(const std::string& dir) {
  if (!fs::is_directory(dir)) throw kgp::ConfigError("dataset directory not found: " + dir);
  return kgp::load_dataset_dir(dir);
}

// `paper` resolves to the shipped preset for the dataset/model pair.
std::string resolve_preset(const std::string& preset, const std::string& dataset,
                           const std::string& model) {
  if (preset != "paper") return preset;
  const std::string name = fs::path(dataset).filename().string();
  return name + "-" + (model.empty() ? "distmult" : model);
}

struct TrainFlags {
  std::string model;
  std::string preset;
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> epochs;
};

void add_train_flags(CLI::App* cmd, TrainFlags& f) {
  cmd->add_option("--model", f.model, "distmult | complex | transe");
  cmd->add_option("--preset", f.preset, "named preset, preset file, or 'paper'");
  cmd->add_option("--config", f.config, "training config JSON (overrides the preset)");
  cmd->add_option("--epochs", f.epochs, "override the epoch count");
  cmd->add_option("--seed", f.seed, "seed");
}

kgp::TrainConfig build_train_config(const TrainFlags& f, const std::string& dataset) {
  kgp::TrainConfig c;
  if (!f.preset.empty()) c = kgp::load_preset(resolve_preset(f.preset, dataset, f.model));
  if (!f.config.empty()) c = kgp::train_config_from_json(read_json(f.config), c);
  if (!f.model.empty()) c.model = kgp::parse_model_kind(f.model);
  if (f.epochs) c.epochs = *f.epochs;
  if (f.seed) c.seed = *f.seed;
  c.validate();
  return c;
}

std::optional<kgp::IFConfig> read_influence(const std::string& path) {
  if (path.empty()) return std::nullopt;
  return kgp::if_config_from_json(read_json(path));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Knowledge-graph embedding training, evaluation and poisoning attacks"};
  app.require_subcommand(1);
  bool verbose = false;
  bool quiet = false;
  app.add_flag("-v,--verbose", verbose, "debug logging");
  app.add_flag("-q,--quiet", quiet, "warnings and errors only");

  // train
  auto* train_cmd = app.add_subcommand("train", "train a model and write a checkpoint");
  std::string train_dataset, train_out, train_name = "model";
  TrainFlags train_flags;
  train_cmd->add_option("--dataset", train_dataset, "dataset directory")->required();
  train_cmd->add_option("--out", train_out, "output directory")->required();
  train_cmd->add_option("--name", train_name, "artifact prefix");
  add_train_flags(train_cmd, train_flags);

  // attack
  auto* attack_cmd = app.add_subcommand("attack", "select perturbations and write a poisoned dataset");
  std::string attack_dataset, attack_ckpt, attack_out, attack_metric = "cos", attack_mode = "delete";
  std::string attack_targets_file, attack_influence;
  std::size_t attack_targets = 100;
  std::uint64_t attack_seed = 0;
  bool attack_tune = false;
  TrainFlags attack_train;
  attack_cmd->add_option("--dataset", attack_dataset, "dataset directory")->required();
  attack_cmd->add_option("--checkpoint", attack_ckpt, "victim checkpoint")->required();
  attack_cmd->add_option("--out", attack_out, "output directory")->required();
  attack_cmd->add_option("--metric", attack_metric,
                         "dot | l2 | cos | grad-dot | grad-l2 | grad-cos | if | random_n | random_g");
  attack_cmd->add_option("--mode", attack_mode, "delete | add");
  attack_cmd->add_option("--targets", attack_targets, "number of targets to sample");
  attack_cmd->add_option("--targets-file", attack_targets_file, "explicit target triples");
  attack_cmd->add_option("--seed", attack_seed, "master seed (targets and attack sub-seeds)");
  attack_cmd->add_option("--influence", attack_influence, "influence config JSON (metric if)");
  attack_cmd->add_flag("--tune-damping", attack_tune, "grid-search the damping first");
  bool attack_no_grad_reg = false;
  attack_cmd->add_flag("--no-gradient-regularizer", attack_no_grad_reg,
                       "gradient metrics use the unregularized loss");
  attack_cmd->add_option("--preset", attack_train.preset, "training preset (for the regularizer)");
  attack_cmd->add_option("--config", attack_train.config, "training config JSON (for the regularizer)");

  // report
  auto* report_cmd = app.add_subcommand("report", "compare victim and poisoned models on targets");
  std::string rep_dataset, rep_poisoned_dataset, rep_victim, rep_poisoned, rep_targets;
  std::string rep_metric = "attack", rep_out;
  report_cmd->add_option("--dataset", rep_dataset, "original dataset directory")->required();
  report_cmd->add_option("--poisoned-dataset", rep_poisoned_dataset, "poisoned dataset directory")
      ->required();
  report_cmd->add_option("--victim", rep_victim, "victim checkpoint")->required();
  report_cmd->add_option("--poisoned", rep_poisoned, "poisoned checkpoint")->required();
  report_cmd->add_option("--targets-file", rep_targets, "target triples")->required();
  report_cmd->add_option("--metric", rep_metric, "row label");
  report_cmd->add_option("--out", rep_out, "directory for results.csv / results.txt");

  // pipeline
  auto* pipe_cmd = app.add_subcommand("pipeline", "train, attack, retrain and report end to end");
  std::string pipe_manifest, pipe_dataset, pipe_out, pipe_mode = "delete", pipe_influence;
  std::vector<std::string> pipe_metrics;
  std::optional<std::size_t> pipe_targets;
  std::optional<std::uint64_t> pipe_seed;
  TrainFlags pipe_train;
  pipe_cmd->add_option("--manifest", pipe_manifest, "manifest JSON (flags override it)");
  pipe_cmd->add_option("--dataset", pipe_dataset, "dataset directory");
  pipe_cmd->add_option("--out", pipe_out, "run directory");
  pipe_cmd->add_option("--metric", pipe_metrics, "attack metric (repeatable)");
  pipe_cmd->add_option("--mode", pipe_mode, "delete | add");
  pipe_cmd->add_option("--targets", pipe_targets, "number of targets");
  pipe_cmd->add_option("--seed", pipe_seed, "master seed");
  pipe_cmd->add_option("--influence", pipe_influence, "influence config JSON");
  pipe_cmd->add_option("--model", pipe_train.model, "distmult | complex | transe");
  pipe_cmd->add_option("--preset", pipe_train.preset, "training preset");
  pipe_cmd->add_option("--config", pipe_train.config, "training config JSON");
  pipe_cmd->add_option("--epochs", pipe_train.epochs, "override the epoch count");
  bool pipe_no_grad_reg = false;
  pipe_cmd->add_flag("--no-gradient-regularizer", pipe_no_grad_reg,
                     "gradient metrics use the unregularized loss");

  // stats
  auto* stats_cmd = app.add_subcommand("stats", "neighbourhood-size statistics");
  std::string stats_dataset, stats_targets_file, stats_ckpt;
  std::size_t stats_targets = 100;
  std::uint64_t stats_seed = 0;
  stats_cmd->add_option("--dataset", stats_dataset, "dataset directory")->required();
  stats_cmd->add_option("--targets-file", stats_targets_file, "target triples (default: test set)");
  stats_cmd->add_option("--checkpoint", stats_ckpt, "select targets with this model instead");
  stats_cmd->add_option("--targets", stats_targets, "number of targets when selecting");
  stats_cmd->add_option("--seed", stats_seed, "master seed when selecting");

  // gen-synth
  auto* synth_cmd = app.add_subcommand("gen-synth", "write a synthetic chain/star dataset");
  kgp::SynthConfig synth;
  std::string synth_out;
  synth_cmd->add_option("--entities", synth.num_entities, "entity count");
  synth_cmd->add_option("--relations", synth.num_relations, "relation count");
  synth_cmd->add_option("--triples", synth.num_train, "approximate train size");
  synth_cmd->add_option("--chain-fraction", synth.chain_fraction, "share of chain patterns");
  synth_cmd->add_option("--chain-length", synth.chain_length, "edges per chain");
  synth_cmd->add_option("--star-size", synth.star_size, "leaves per star");
  synth_cmd->add_option("--test-fraction", synth.test_fraction, "held-out share for test");
  synth_cmd->add_option("--valid-fraction", synth.valid_fraction, "held-out share for valid");
  synth_cmd->add_option("--reciprocal-fraction", synth.reciprocal_fraction,
                        "share of train edges also added reversed");
  synth_cmd->add_flag("--inverse-relations", synth.inverse_relations,
                      "reverse edges use a paired r<i>_inv relation");
  synth_cmd->add_option("--seed", synth.seed, "seed");
  synth_cmd->add_option("--out", synth_out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }
  spdlog::set_level(verbose ? spdlog::level::debug
                            : quiet ? spdlog::level::warn : spdlog::level::info);

  try {
    if (*train_cmd) {
      const auto kg = load_graph(train_dataset);
      const auto config = build_train_config(train_flags, train_dataset);
      const auto ckpt = kgp::cmd_train(kg, config, train_out, train_name);
      std::cout << "checkpoint " << (fs::path(train_out) / (train_name + ".ckpt")).string() << " "
                << kgp::checkpoint_hash(ckpt) << "\n";
      std::cout << kgp::read_text(fs::path(train_out) / (train_name + "_eval.csv"));
    } else if (*attack_cmd) {
      const auto kg = load_graph(attack_dataset);
      const auto ckpt = kgp::load_checkpoint(attack_ckpt);
      kgp::check_compatible(ckpt, kg);
      const auto mode = kgp::parse_mode(attack_mode);
      kgp::AttackSpec spec =
          kgp::parse_attack_metric(attack_metric, mode, kgp::derive_seed(attack_seed, "attack"));
      kgp::AttackOptions options;
      if (spec.method == kgp::AttackMethod::kAttribution &&
          spec.metric == kgp::AttributionMetric::kInfluence) {
        auto ifc = read_influence(attack_influence);
        if (!ifc) throw kgp::ConfigError("metric 'if' requires --influence CONFIG.json");
        options.influence = *ifc;
        options.tune_damping = attack_tune;
      }
      // Attribution gradients use the regularizer the model was trained with.
      std::string config_path = attack_train.config;
      const auto sibling = fs::path(attack_ckpt).replace_extension("").string() + "_config.json";
      if (config_path.empty() && attack_train.preset.empty() && fs::exists(sibling)) {
        config_path = sibling;
      }
      TrainFlags flags = attack_train;
      flags.config = config_path;
      options.attribution.reg = build_train_config(flags, attack_dataset).reg();
      options.attribution.include_regularizer = !attack_no_grad_reg;
      std::optional<std::vector<kgp::Triple>> targets;
      if (!attack_targets_file.empty()) targets = kgp::read_triples(kg.vocab(), attack_targets_file);
      const auto out = kgp::cmd_attack(ckpt.model, kg, targets, attack_targets,
                                       kgp::derive_seed(attack_seed, "targets"), spec, options,
                                       attack_out);
      std::cout << out.result.records.size() << " perturbations, " << out.result.skips.size()
                << " skipped; poisoned dataset in "
                << (fs::path(attack_out) / "dataset").string() << "\n";
    } else if (*report_cmd) {
      const auto kg = load_graph(rep_dataset);
      const auto poisoned_kg = load_graph(rep_poisoned_dataset);
      const auto victim = kgp::load_checkpoint(rep_victim);
      const auto poisoned = kgp::load_checkpoint(rep_poisoned);
      const auto targets = kgp::read_triples(kg.vocab(), rep_targets);
      const std::vector<kgp::ReportRow> rows = {
          kgp::cmd_report(rep_metric, victim.model, poisoned.model, kg, poisoned_kg, targets)};
      if (!rep_out.empty()) {
        kgp::write_text(fs::path(rep_out) / "results.csv", kgp::results_csv(rows));
        kgp::write_text(fs::path(rep_out) / "results.txt", kgp::results_table(rows));
      }
      std::cout << kgp::results_table(rows);
    } else if (*pipe_cmd) {
      nlohmann::json j = pipe_manifest.empty() ? nlohmann::json::object() : read_json(pipe_manifest);
      if (!pipe_dataset.empty()) j["dataset"] = pipe_dataset;
      if (!pipe_out.empty()) j["out"] = pipe_out;
      if (!pipe_metrics.empty()) j["metrics"] = pipe_metrics;
      if (pipe_cmd->count("--mode") > 0 || !j.contains("mode")) j["mode"] = pipe_mode;
      if (pipe_targets) j["targets"] = *pipe_targets;
      if (pipe_seed) j["seed"] = *pipe_seed;
      if (!pipe_influence.empty()) j["influence"] = read_json(pipe_influence);
      if (pipe_no_grad_reg) j["gradient_regularizer"] = false;
      if (!pipe_train.preset.empty() || !pipe_train.config.empty() || !pipe_train.model.empty() ||
          pipe_train.epochs) {
        const std::string dataset = j.value("dataset", std::string());
        nlohmann::json train = kgp::to_json(build_train_config(pipe_train, dataset));
        train.erase("seed");
        j["train"] = train;
      }
      const auto manifest = kgp::manifest_from_json(j);
      const auto rows = kgp::cmd_pipeline(manifest);
      std::cout << kgp::results_table(rows);
    } else if (*stats_cmd) {
      const auto kg = load_graph(stats_dataset);
      std::vector<kgp::Triple> targets;
      if (!stats_targets_file.empty()) {
        targets = kgp::read_triples(kg.vocab(), stats_targets_file);
      } else if (!stats_ckpt.empty()) {
        const auto ckpt = kgp::load_checkpoint(stats_ckpt);
        kgp::check_compatible(ckpt, kg);
        targets = kgp::select_targets(ckpt.model, kg, stats_targets,
                                      kgp::derive_seed(stats_seed, "targets"));
      } else {
        targets = kg.test();
      }
      std::cout << kgp::cmd_stats(kg, targets);
    } else if (*synth_cmd) {
      const auto kg = kgp::generate_synthetic(synth);
      kgp::write_dataset(kg, synth_out);
      std::cout << "train " << kg.train().size() << ", valid " << kg.valid().size() << ", test "
                << kg.test().size() << " triples in " << synth_out << "\n";
    }
  } catch (const kgp::ConfigError& e) {
    spdlog::error("{}", e.what());
    return kExitUsage;
  } catch (const kgp::DivergenceError& e) {
    spdlog::error("{}", e.what());
    return kExitDivergence;
  } catch (const kgp::DataError& e) {
    spdlog::error("{}", e.what());
    return kExitData;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitData;
  }
  return 0;
}
