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

#ifndef KGPOISON_TRAINER_HPP_
#define KGPOISON_TRAINER_HPP_

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "kgpoison/checkpoint.hpp"
#include "kgpoison/kg_store.hpp"
#include "kgpoison/model.hpp"

namespace kgp {

enum class OptimizerKind { kAdagrad, kAdam };

/// Training hyperparameters. The JSON keys are the field names.
struct TrainConfig {
  ModelKind model = ModelKind::kDistMult;
  int k = 200;
  int epochs = 100;
  int batch_size = 128;
  double learning_rate = 0.1;
  OptimizerKind optimizer = OptimizerKind::kAdagrad;
  double reg_weight = 0.0;
  std::uint64_t seed = 0;
  /// float32 parameters inside the training loop; attack math stays float64.
  bool float32 = false;
  /// Validation MRR every N epochs (0 disables).
  int valid_eval_every = 1;

  RegConfig reg() const { return {reg_weight}; }
  /// Throws ConfigError on epochs < 1, batch_size < 1, learning_rate <= 0, ...
  void validate() const;
};

nlohmann::json to_json(const TrainConfig& config);
/// Missing keys keep their defaults; unknown keys are a ConfigError.
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});
/// Hash of the canonical JSON form.
std::string config_hash(const TrainConfig& config);

/// Reads a named preset from the preset directory (or a path to a JSON file).
TrainConfig load_preset(const std::string& name_or_path);

struct EpochLog {
  int epoch = 0;
  double loss = 0.0;       // mean per training triple
  double valid_mrr = -1.0; // negative when not evaluated
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<EpochLog> log;
};

/// 1-N cross-entropy training with per-epoch shuffling and one optimizer step
/// per mini-batch. Bit-identical results for identical (kg, config). Throws
/// DivergenceError with epoch/batch context on a non-finite loss.
TrainResult train(const KnowledgeGraph& kg, const TrainConfig& config);

/// Continues from `ckpt` for `extra_epochs` more epochs. With optimizer state
/// present, resume(train(c, n), m) equals train(c, n + m).
TrainResult resume(const Checkpoint& ckpt, const KnowledgeGraph& kg, const TrainConfig& config,
                   int extra_epochs);

/// `epoch,loss,valid_mrr` CSV.
std::string epoch_log_csv(const std::vector<EpochLog>& log);

}  // namespace kgp

#endif  // KGPOISON_TRAINER_HPP_
