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

#include "kgpoison/influence.hpp"

#include <cmath>

namespace kgp {

void IFConfig::validate() const {
  if (damping < 0.0) throw ConfigError("damping must be >= 0");
  if (!(scale > 0.0)) throw ConfigError("scale must be > 0");
  if (depth < 1) throw ConfigError("depth must be >= 1");
  if (repeats < 1) throw ConfigError("repeats must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(fd_step > 0.0)) throw ConfigError("fd_step must be > 0");
  if (!(growth_tolerance > 1.0)) throw ConfigError("growth_tolerance must be > 1");
  if (!(max_norm_ratio > 1.0)) throw ConfigError("max_norm_ratio must be > 1");
  if (!(damping_grid_base > 0.0) || damping_grid_size < 1) {
    throw ConfigError("damping grid must be non-empty with a positive base");
  }
}

nlohmann::json to_json(const IFConfig& c) {
  return {
      {"damping", c.damping},
      {"scale", c.scale},
      {"depth", c.depth},
      {"batch_size", c.batch_size},
      {"repeats", c.repeats},
      {"fd_step", c.fd_step},
      {"max_norm_ratio", c.max_norm_ratio},
      {"growth_tolerance", c.growth_tolerance},
      {"damping_grid_base", c.damping_grid_base},
      {"damping_grid_size", c.damping_grid_size},
  };
}

IFConfig if_config_from_json(const nlohmann::json& j, IFConfig c) {
  if (!j.is_object()) throw ConfigError("influence config must be a JSON object");
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "damping") {
        c.damping = value.get<double>();
      } else if (key == "scale") {
        c.scale = value.get<double>();
      } else if (key == "depth") {
        c.depth = value.get<int>();
      } else if (key == "batch_size") {
        c.batch_size = value.get<int>();
      } else if (key == "repeats") {
        c.repeats = value.get<int>();
      } else if (key == "fd_step") {
        c.fd_step = value.get<double>();
      } else if (key == "max_norm_ratio") {
        c.max_norm_ratio = value.get<double>();
      } else if (key == "growth_tolerance") {
        c.growth_tolerance = value.get<double>();
      } else if (key == "damping_grid_base") {
        c.damping_grid_base = value.get<double>();
      } else if (key == "damping_grid_size") {
        c.damping_grid_size = value.get<int>();
      } else {
        throw ConfigError("unknown influence config key: " + key);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad influence config value: ") + e.what());
  }
  c.validate();
  return c;
}

double fd_step_for(const EmbeddingModel& model, double relative_step) {
  const double count = static_cast<double>(model.entity.size() + model.relation.size());
  const double rms =
      std::sqrt((model.entity.squaredNorm() + model.relation.squaredNorm()) / count);
  return relative_step * std::max(rms, 1e-3);
}

GradientVector hvp(const EmbeddingModel& model, std::span<const Triple> sample,
                   const GradientVector& v, double relative_step, const RegConfig& reg) {
  if (sample.empty()) throw DataError("hvp: empty sample");
  const double step = fd_step_for(model, relative_step);
  EmbeddingModel shifted = model;
  auto grad_at = [&](const GradientVector& displacement) {
    shifted.entity = model.entity + displacement.materialize_entities();
    shifted.relation = model.relation + displacement.materialize_relations();
    return mean_batch_gradient(shifted, sample, reg);
  };
  GradientVector out = central_difference_hvp(grad_at, v, step);
  if (!out.all_finite()) throw DivergenceError("non-finite Hessian-vector product");
  return out;
}

InverseHVP inverse_hvp_lissa(const EmbeddingModel& model, const KnowledgeGraph& kg,
                             const Triple& target, const GradientVector& g_z,
                             const IFConfig& config, const RegConfig& reg, std::uint64_t seed,
                             const IterateObserver& observer) {
  config.validate();
  const auto& train = kg.train();
  if (train.empty()) throw DataError("inverse_hvp_lissa: empty training set");
  std::vector<Triple> sample(static_cast<std::size_t>(config.batch_size));
  auto sampled_hvp = [&](const GradientVector& v, int repeat, int step) {
    Rng rng(derive_seed(derive_seed(seed, static_cast<std::uint64_t>(repeat)),
                        static_cast<std::uint64_t>(step)));
    for (auto& t : sample) t = train[rng.uniform_index(train.size())];
    return hvp(model, sample, v, config.fd_step, reg);
  };
  InverseHVP out;
  out.target = target;
  out.vector = lissa(g_z, sampled_hvp, config, observer);
  return out;
}

double if_score(const EmbeddingModel& model, const Triple& x, const InverseHVP& inverse_hvp,
                const RegConfig& reg) {
  return inverse_hvp.vector.dot(loss_gradient(model, x, reg));
}

double tune_damping(const EmbeddingModel& model, const KnowledgeGraph& kg,
                    std::span<const GradientVector> probe_gradients, const IFConfig& config,
                    const RegConfig& reg, std::uint64_t seed) {
  config.validate();
  const auto& train = kg.train();
  auto make_hvp = [&](std::size_t probe) {
    return [&, probe](const GradientVector& v, int repeat, int step) {
      std::vector<Triple> sample(static_cast<std::size_t>(config.batch_size));
      Rng rng(derive_seed(derive_seed(derive_seed(seed, probe), static_cast<std::uint64_t>(repeat)),
                          static_cast<std::uint64_t>(step)));
      for (auto& t : sample) t = train[rng.uniform_index(train.size())];
      return hvp(model, sample, v, config.fd_step, reg);
    };
  };
  return tune_damping_generic(probe_gradients, make_hvp, config);
}

}  // namespace kgp
