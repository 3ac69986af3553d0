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

#include "kgpoison/synth.hpp"

#include <algorithm>
#include <array>
#include <set>
#include <string>
#include <vector>

namespace kgp {

void SynthConfig::validate() const {
  if (num_relations < 1) throw ConfigError("synthetic graph needs at least one relation");
  if (chain_length < 1 || star_size < 1) throw ConfigError("pattern sizes must be >= 1");
  const int needed = std::max(chain_length + 1, star_size + 1);
  if (num_entities < needed) throw ConfigError("too few entities for the pattern sizes");
  if (num_train < 1) throw ConfigError("num_train must be >= 1");
  if (chain_fraction < 0.0 || chain_fraction > 1.0) {
    throw ConfigError("chain_fraction must lie in [0, 1]");
  }
  if (test_fraction < 0.0 || valid_fraction < 0.0 || test_fraction + valid_fraction >= 1.0) {
    throw ConfigError("held-out fractions must be non-negative and sum below 1");
  }
  if (reciprocal_fraction < 0.0 || reciprocal_fraction > 1.0) {
    throw ConfigError("reciprocal_fraction must lie in [0, 1]");
  }
}

nlohmann::json to_json(const SynthConfig& c) {
  return {
      {"num_entities", c.num_entities},   {"num_relations", c.num_relations},
      {"num_train", c.num_train},         {"chain_fraction", c.chain_fraction},
      {"chain_length", c.chain_length},   {"star_size", c.star_size},
      {"test_fraction", c.test_fraction}, {"valid_fraction", c.valid_fraction},
      {"reciprocal_fraction", c.reciprocal_fraction},
      {"inverse_relations", c.inverse_relations}, {"seed", c.seed},
  };
}

SynthConfig synth_config_from_json(const nlohmann::json& j, SynthConfig c) {
  if (!j.is_object()) throw ConfigError("synthetic config must be a JSON object");
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "num_entities") {
        c.num_entities = value.get<int>();
      } else if (key == "num_relations") {
        c.num_relations = value.get<int>();
      } else if (key == "num_train") {
        c.num_train = value.get<int>();
      } else if (key == "chain_fraction") {
        c.chain_fraction = value.get<double>();
      } else if (key == "chain_length") {
        c.chain_length = value.get<int>();
      } else if (key == "star_size") {
        c.star_size = value.get<int>();
      } else if (key == "test_fraction") {
        c.test_fraction = value.get<double>();
      } else if (key == "valid_fraction") {
        c.valid_fraction = value.get<double>();
      } else if (key == "reciprocal_fraction") {
        c.reciprocal_fraction = value.get<double>();
      } else if (key == "inverse_relations") {
        c.inverse_relations = value.get<bool>();
      } else if (key == "seed") {
        c.seed = value.get<std::uint64_t>();
      } else {
        throw ConfigError("unknown synthetic config key: " + key);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad synthetic config value: ") + e.what());
  }
  c.validate();
  return c;
}

namespace {

// k distinct entities, uniformly without replacement.
std::vector<int> distinct_entities(Rng& rng, int n, int k) {
  std::vector<int> picked;
  while (static_cast<int>(picked.size()) < k) {
    const int e = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(n)));
    if (std::find(picked.begin(), picked.end(), e) == picked.end()) picked.push_back(e);
  }
  return picked;
}

}  // namespace

KnowledgeGraph generate_synthetic(const SynthConfig& config) {
  config.validate();
  Rng rng(config.seed);
  std::vector<std::array<int, 3>> edges;
  std::set<std::array<int, 3>> seen;
  auto push = [&](int s, int r, int o) {
    // A reverse edge would leak the held-out copy into train.
    if (seen.contains({s, r, o}) || seen.contains({o, r, s})) return;
    seen.insert({s, r, o});
    edges.push_back({s, r, o});
  };
  int stalls = 0;
  while (static_cast<int>(edges.size()) < config.num_train) {
    const std::size_t before = edges.size();
    const int r = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(config.num_relations)));
    if (rng.bernoulli(config.chain_fraction)) {
      const auto nodes = distinct_entities(rng, config.num_entities, config.chain_length + 1);
      for (int i = 0; i < config.chain_length; ++i) push(nodes[i], r, nodes[i + 1]);
    } else {
      const auto nodes = distinct_entities(rng, config.num_entities, config.star_size + 1);
      for (int i = 1; i <= config.star_size; ++i) push(nodes[0], r, nodes[i]);
    }
    stalls = edges.size() == before ? stalls + 1 : 0;
    if (stalls > 1000) throw ConfigError("synthetic graph saturated; raise num_entities");
  }

  // Relation ids >= num_relations stand for the paired inverse relations.
  const int inv = config.inverse_relations ? config.num_relations : 0;
  std::vector<std::array<int, 3>> train_raw, valid_raw, test_raw;
  for (const auto& e : edges) {
    train_raw.push_back(e);
    const std::array<int, 3> rev{e[2], e[1] + inv, e[0]};
    const double u = rng.uniform01();
    if (u < config.test_fraction) {
      test_raw.push_back(rev);
    } else if (u < config.test_fraction + config.valid_fraction) {
      valid_raw.push_back(rev);
    } else if (config.reciprocal_fraction > 0.0 && rng.bernoulli(config.reciprocal_fraction)) {
      train_raw.push_back(rev);
    }
  }

  Vocabulary vocab;
  auto encode = [&](const std::array<int, 3>& e) {
    const EntityId s = vocab.intern_entity("e" + std::to_string(e[0]));
    const bool inverse = e[1] >= config.num_relations;
    const int base = inverse ? e[1] - config.num_relations : e[1];
    const RelationId r =
        vocab.intern_relation("r" + std::to_string(base) + (inverse ? "_inv" : ""));
    const EntityId o = vocab.intern_entity("e" + std::to_string(e[2]));
    return Triple{s, r, o};
  };
  std::vector<Triple> train, valid, test;
  for (const auto& e : train_raw) train.push_back(encode(e));
  for (const auto& e : valid_raw) valid.push_back(encode(e));
  for (const auto& e : test_raw) test.push_back(encode(e));
  return KnowledgeGraph::build(std::move(vocab), std::move(train), std::move(valid),
                               std::move(test));
}

}  // namespace kgp
