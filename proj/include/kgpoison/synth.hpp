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

#ifndef KGPOISON_SYNTH_HPP_
#define KGPOISON_SYNTH_HPP_

#include <cstdint>

#include <json.hpp>

#include "kgpoison/common.hpp"
#include "kgpoison/kg_store.hpp"

namespace kgp {

/// Synthetic graph built from chains (e0 -r-> e1 -r-> e2 ...) and stars
/// (hub -r-> leaf_i). Every relation is symmetric in the generated ground
/// truth: a held-out fraction of edges contributes its reverse (o, r, s) to
/// valid or test while the forward edge stays in train.
struct SynthConfig {
  int num_entities = 60;
  int num_relations = 4;
  int num_train = 200;           // approximate; generation stops at the first pattern past it
  double chain_fraction = 0.5;   // probability a pattern is a chain, else a star
  int chain_length = 4;          // edges per chain
  int star_size = 4;             // leaves per star
  double test_fraction = 0.15;   // forward edges whose reverse goes to test
  double valid_fraction = 0.05;  // ... to valid
  /// Share of the remaining edges whose reverse is also put in train, so that
  /// models without built-in symmetry can learn it.
  double reciprocal_fraction = 0.0;
  /// Reverse edges use a paired relation `r<i>_inv` instead of `r<i>`, which
  /// translational models can represent.
  bool inverse_relations = false;
  std::uint64_t seed = 0;

  void validate() const;
};

nlohmann::json to_json(const SynthConfig& config);
SynthConfig synth_config_from_json(const nlohmann::json& j, SynthConfig base = {});

/// Deterministic for a given config. Entity names are `e<i>`, relation names
/// `r<i>`; ids follow first appearance in train so a write/load round trip
/// keeps them.
KnowledgeGraph generate_synthetic(const SynthConfig& config);

}  // namespace kgp

#endif  // KGPOISON_SYNTH_HPP_
