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

#include "kgpoison/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include <spdlog/spdlog.h>

#include "kgpoison/evaluator.hpp"

namespace kgp {

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (k < 1) throw ConfigError("k must be >= 1");
  if (reg_weight < 0.0) throw ConfigError("reg_weight must be >= 0");
  if (valid_eval_every < 0) throw ConfigError("valid_eval_every must be >= 0");
}

nlohmann::json to_json(const TrainConfig& c) {
  return {
      {"model", to_string(c.model)},
      {"k", c.k},
      {"epochs", c.epochs},
      {"batch_size", c.batch_size},
      {"learning_rate", c.learning_rate},
      {"optimizer", c.optimizer == OptimizerKind::kAdagrad ? "adagrad" : "adam"},
      {"reg_weight", c.reg_weight},
      {"seed", c.seed},
      {"float32", c.float32},
      {"valid_eval_every", c.valid_eval_every},
  };
}

TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig c) {
  if (!j.is_object()) throw ConfigError("train config must be a JSON object");
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "model") {
        c.model = parse_model_kind(value.get<std::string>());
      } else if (key == "k") {
        c.k = value.get<int>();
      } else if (key == "epochs") {
        c.epochs = value.get<int>();
      } else if (key == "batch_size") {
        c.batch_size = value.get<int>();
      } else if (key == "learning_rate") {
        c.learning_rate = value.get<double>();
      } else if (key == "optimizer") {
        const auto name = value.get<std::string>();
        if (name == "adagrad") {
          c.optimizer = OptimizerKind::kAdagrad;
        } else if (name == "adam") {
          c.optimizer = OptimizerKind::kAdam;
        } else {
          throw ConfigError("unknown optimizer: " + name);
        }
      } else if (key == "reg_weight") {
        c.reg_weight = value.get<double>();
      } else if (key == "seed") {
        c.seed = value.get<std::uint64_t>();
      } else if (key == "float32") {
        c.float32 = value.get<bool>();
      } else if (key == "valid_eval_every") {
        c.valid_eval_every = value.get<int>();
      } else {
        throw ConfigError("unknown train config key: " + key);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad train config value: ") + e.what());
  }
  c.validate();
  return c;
}

std::string config_hash(const TrainConfig& config) { return hex64(fnv1a64(to_json(config).dump())); }

TrainConfig load_preset(const std::string& name_or_path) {
  std::filesystem::path path(name_or_path);
  if (!std::filesystem::exists(path)) {
    path = std::filesystem::path(KGPOISON_PRESET_DIR) / (name_or_path + ".json");
  }
  std::ifstream in(path);
  if (!in) throw ConfigError("unknown preset: " + name_or_path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("cannot parse preset " + path.string() + ": " + e.what());
  }
  return train_config_from_json(j);
}

namespace {

constexpr double kAdagradEps = 1e-10;
constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

template <class S>
struct Params {
  MatrixT<S> entity;
  MatrixT<S> relation;
  std::vector<MatrixT<S>> slots;
  std::int64_t step = 0;
};

template <class S>
void apply_step(const TrainConfig& config, Params<S>& p, const MatrixT<S>& ge,
                const MatrixT<S>& gr) {
  ++p.step;
  const S lr = static_cast<S>(config.learning_rate);
  if (config.optimizer == OptimizerKind::kAdagrad) {
    auto update = [&](MatrixT<S>& theta, MatrixT<S>& acc, const MatrixT<S>& g) {
      acc.array() += g.array().square();
      theta.array() -= lr * g.array() / (acc.array().sqrt() + static_cast<S>(kAdagradEps));
    };
    update(p.entity, p.slots[0], ge);
    update(p.relation, p.slots[1], gr);
    return;
  }
  const double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(p.step));
  const double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(p.step));
  auto update = [&](MatrixT<S>& theta, MatrixT<S>& m, MatrixT<S>& v, const MatrixT<S>& g) {
    m = static_cast<S>(kAdamBeta1) * m + static_cast<S>(1.0 - kAdamBeta1) * g;
    v.array() = static_cast<S>(kAdamBeta2) * v.array() +
                static_cast<S>(1.0 - kAdamBeta2) * g.array().square();
    theta.array() -= lr * (m.array() / static_cast<S>(bc1)) /
                     ((v.array() / static_cast<S>(bc2)).sqrt() + static_cast<S>(kAdamEps));
  };
  update(p.entity, p.slots[0], p.slots[2], ge);
  update(p.relation, p.slots[1], p.slots[3], gr);
}

template <class S>
Params<S> to_params(const Checkpoint& ckpt, const TrainConfig& config) {
  Params<S> p;
  p.entity = ckpt.model.entity.cast<S>();
  p.relation = ckpt.model.relation.cast<S>();
  const std::string kind = config.optimizer == OptimizerKind::kAdagrad ? "adagrad" : "adam";
  if (ckpt.optimizer && ckpt.optimizer->kind == kind) {
    for (const auto& s : ckpt.optimizer->slots) p.slots.push_back(s.cast<S>());
    p.step = ckpt.optimizer->step;
  } else {
    const int n = config.optimizer == OptimizerKind::kAdagrad ? 2 : 4;
    for (int i = 0; i < n; ++i) {
      const auto& shape = i % 2 == 0 ? p.entity : p.relation;
      p.slots.push_back(MatrixT<S>::Zero(shape.rows(), shape.cols()));
    }
  }
  return p;
}

template <class S>
void from_params(const Params<S>& p, const TrainConfig& config, Checkpoint& ckpt) {
  ckpt.model.entity = p.entity.template cast<double>();
  ckpt.model.relation = p.relation.template cast<double>();
  OptimizerState st;
  st.kind = config.optimizer == OptimizerKind::kAdagrad ? "adagrad" : "adam";
  st.step = p.step;
  for (const auto& s : p.slots) st.slots.push_back(s.template cast<double>());
  ckpt.optimizer = std::move(st);
}

template <class S>
std::vector<EpochLog> run_epochs(const KnowledgeGraph& kg, const TrainConfig& config,
                                 Checkpoint& ckpt, int first_epoch, int last_epoch) {
  Params<S> p = to_params<S>(ckpt, config);
  const std::vector<Triple>& train = kg.train();
  const std::size_t n = train.size();
  const RegConfig reg = config.reg();
  const FilterIndex filter = FilterIndex::from_graph(kg);
  std::vector<EpochLog> log;
  std::vector<std::uint32_t> order(n);
  std::vector<Triple> batch;
  MatrixT<S> ge(p.entity.rows(), p.entity.cols());
  MatrixT<S> gr(p.relation.rows(), p.relation.cols());

  for (int epoch = first_epoch; epoch < last_epoch; ++epoch) {
    std::iota(order.begin(), order.end(), 0u);
    Rng rng(derive_seed(derive_seed(config.seed, "shuffle"), static_cast<std::uint64_t>(epoch)));
    rng.shuffle(order.begin(), order.end());
    double epoch_loss = 0.0;
    const std::size_t bs = static_cast<std::size_t>(config.batch_size);
    for (std::size_t start = 0, b = 0; start < n; start += bs, ++b) {
      const std::size_t end = std::min(n, start + bs);
      batch.clear();
      for (std::size_t i = start; i < end; ++i) batch.push_back(train[order[i]]);
      ge.setZero();
      gr.setZero();
      const double batch_loss = accumulate_batch_gradient<S>(config.model, p.entity, p.relation,
                                                             batch, reg, 1.0, ge, gr);
      if (!std::isfinite(batch_loss) || !ge.allFinite() || !gr.allFinite()) {
        throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch + 1) + ", batch " +
                              std::to_string(b));
      }
      epoch_loss += batch_loss;
      apply_step(config, p, ge, gr);
    }
    EpochLog entry;
    entry.epoch = epoch + 1;
    entry.loss = epoch_loss / static_cast<double>(n);
    const bool eval_now = config.valid_eval_every > 0 && !kg.valid().empty() &&
                          ((epoch + 1) % config.valid_eval_every == 0 || epoch + 1 == last_epoch);
    if (eval_now) {
      from_params(p, config, ckpt);
      entry.valid_mrr = evaluate(ckpt.model, filter, kg.valid()).mrr;
      spdlog::info("epoch {:4d}  loss {:.6f}  valid_mrr {:.4f}", entry.epoch, entry.loss,
                   entry.valid_mrr);
    } else {
      spdlog::debug("epoch {:4d}  loss {:.6f}", entry.epoch, entry.loss);
    }
    log.push_back(entry);
  }
  from_params(p, config, ckpt);
  ckpt.epochs_completed = last_epoch;
  return log;
}

std::vector<EpochLog> run(const KnowledgeGraph& kg, const TrainConfig& config, Checkpoint& ckpt,
                          int first_epoch, int last_epoch) {
  if (config.float32) return run_epochs<float>(kg, config, ckpt, first_epoch, last_epoch);
  return run_epochs<double>(kg, config, ckpt, first_epoch, last_epoch);
}

}  // namespace

TrainResult train(const KnowledgeGraph& kg, const TrainConfig& config) {
  config.validate();
  if (kg.train().empty()) throw DataError("train: empty training set");
  TrainResult result;
  Checkpoint& ckpt = result.checkpoint;
  ckpt.model = init_model(config.model, kg.num_entities(), kg.num_relations(), config.k,
                          derive_seed(config.seed, "init"));
  ckpt.config_hash = config_hash(config);
  result.log = run(kg, config, ckpt, 0, config.epochs);
  return result;
}

TrainResult resume(const Checkpoint& ckpt, const KnowledgeGraph& kg, const TrainConfig& config,
                   int extra_epochs) {
  check_compatible(ckpt, kg);
  if (extra_epochs < 0) throw ConfigError("extra_epochs must be >= 0");
  if (ckpt.model.kind != config.model || ckpt.model.k != config.k) {
    throw ConfigError("resume: checkpoint model does not match config");
  }
  TrainResult result;
  result.checkpoint = ckpt;
  result.checkpoint.config_hash = config_hash(config);
  if (extra_epochs == 0) return result;
  result.log = run(kg, config, result.checkpoint, ckpt.epochs_completed,
                   ckpt.epochs_completed + extra_epochs);
  return result;
}

std::string epoch_log_csv(const std::vector<EpochLog>& log) {
  std::ostringstream out;
  out << "epoch,loss,valid_mrr\n";
  char buf[128];
  for (const auto& e : log) {
    if (e.valid_mrr >= 0.0) {
      std::snprintf(buf, sizeof(buf), "%d,%.8f,%.6f\n", e.epoch, e.loss, e.valid_mrr);
    } else {
      std::snprintf(buf, sizeof(buf), "%d,%.8f,\n", e.epoch, e.loss);
    }
    out << buf;
  }
  return out.str();
}

}  // namespace kgp
