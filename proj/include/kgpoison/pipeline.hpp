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

#ifndef KGPOISON_PIPELINE_HPP_
#define KGPOISON_PIPELINE_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "kgpoison/attack.hpp"
#include "kgpoison/checkpoint.hpp"
#include "kgpoison/evaluator.hpp"
#include "kgpoison/influence.hpp"
#include "kgpoison/kg_store.hpp"
#include "kgpoison/trainer.hpp"

namespace kgp {

/// Everything a run depends on. Serialized into the run directory together
/// with its content hash.
struct ExperimentManifest {
  std::string dataset;  // directory with train.txt / valid.txt / test.txt
  TrainConfig train;
  std::vector<std::string> metrics = {"cos"};
  PerturbationKind mode = PerturbationKind::kDelete;
  std::optional<IFConfig> influence;  // required when "if" is among the metrics
  bool tune_damping = false;
  std::size_t targets = 100;
  std::uint64_t seed = 0;
  std::string out;
  /// Evaluate poisoned models with the poisoned train set added to the filter.
  bool filter_poisoned_train = true;
  /// Gradient-based metrics differentiate the regularized loss.
  bool gradient_regularizer = true;

  void validate() const;

  /// Named sub-seeds of the master seed.
  std::uint64_t train_seed() const { return derive_seed(seed, "train"); }
  std::uint64_t targets_seed() const { return derive_seed(seed, "targets"); }
  std::uint64_t attack_seed() const { return derive_seed(seed, "attack"); }

  /// Training config with the seed replaced by the train sub-seed; shared by
  /// the victim and every poisoned model.
  TrainConfig effective_train_config() const;
};

nlohmann::json to_json(const ExperimentManifest& manifest);
/// `train` may name a preset (`{"preset": "synth-distmult", "epochs": 50}`);
/// the remaining keys override it. Unknown keys are a ConfigError.
ExperimentManifest manifest_from_json(const nlohmann::json& j);
ExperimentManifest load_manifest(const std::filesystem::path& path);
/// Canonical serialization (what is written to manifest.json).
std::string manifest_text(const ExperimentManifest& manifest);
std::string manifest_hash(const ExperimentManifest& manifest);

/// Targets as tab-separated named triples, one per line.
void write_triples(const Vocabulary& vocab, std::span<const Triple> triples,
                   const std::filesystem::path& path);
std::vector<Triple> read_triples(const Vocabulary& vocab, const std::filesystem::path& path);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

/// Trains, then writes `<name>.ckpt`, `<name>_epochs.csv`, `<name>_eval.csv`
/// and `<name>_config.json` into `dir`.
Checkpoint cmd_train(const KnowledgeGraph& kg, const TrainConfig& config,
                     const std::filesystem::path& dir, const std::string& name);

struct AttackStageOutput {
  std::vector<Triple> targets;
  AttackResult result;
  KnowledgeGraph poisoned;
};

/// Selects targets (unless given), runs the attack, and writes
/// perturbations.csv, skips.csv, relations.csv, timing.csv, targets.txt,
/// attack.json (settings) and the poisoned dataset under `dir/dataset`.
AttackStageOutput cmd_attack(const EmbeddingModel& model, const KnowledgeGraph& kg,
                             std::optional<std::vector<Triple>> targets, std::size_t n_targets,
                             std::uint64_t targets_seed, const AttackSpec& spec,
                             const AttackOptions& options, const std::filesystem::path& dir);

struct ReportRow {
  std::string metric;
  EvalReport original;
  EvalReport poisoned;

  /// (poisoned − original) / original · 100 on MRR.
  double pct_change() const;
};

double pct_change(double original, double poisoned);

/// Evaluates both models on `targets`. The victim is filtered by the
/// original graph; the poisoned model additionally by the poisoned train set
/// when `filter_poisoned_train`. Throws DataError when the models or targets
/// do not line up.
ReportRow cmd_report(const std::string& metric, const EmbeddingModel& victim,
                     const EmbeddingModel& poisoned, const KnowledgeGraph& original,
                     const KnowledgeGraph& poisoned_kg, std::span<const Triple> targets,
                     bool filter_poisoned_train = true);

/// `metric,mrr_original,mrr_poisoned,h1_original,h1_poisoned,pct_change`.
std::string results_csv(std::span<const ReportRow> rows);
std::string results_table(std::span<const ReportRow> rows);

/// Runs train → targets → attack → retrain → evaluate for each metric in a
/// run directory. Completed stages leave a marker in `stages/` and are
/// reloaded instead of recomputed on the next invocation. Each result row
/// covers the targets that received a perturbation under that metric.
std::vector<ReportRow> cmd_pipeline(const ExperimentManifest& manifest);

/// Neighbourhood-size statistics for `targets`.
std::string cmd_stats(const KnowledgeGraph& kg, std::span<const Triple> targets);

}  // namespace kgp

#endif  // KGPOISON_PIPELINE_HPP_
