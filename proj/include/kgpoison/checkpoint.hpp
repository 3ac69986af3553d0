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

#ifndef KGPOISON_CHECKPOINT_HPP_
#define KGPOISON_CHECKPOINT_HPP_

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "kgpoison/model.hpp"

namespace kgp {

/// Per-parameter optimizer slots. Adagrad: {acc_entity, acc_relation};
/// Adam: {m_entity, m_relation, v_entity, v_relation}.
struct OptimizerState {
  std::string kind;
  std::int64_t step = 0;
  std::vector<Matrix> slots;
};

struct Checkpoint {
  EmbeddingModel model;
  std::string config_hash;
  int epochs_completed = 0;
  std::optional<OptimizerState> optimizer;
};

/// Binary container: 8-byte magic, u64 header length, JSON header (kind, k,
/// seed, sizes, config hash, slot shapes), then row-major little-endian
/// float64 matrices: entity, relation, optimizer slots.
std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(const std::string& bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Content hash of the serialized checkpoint, hex.
std::string checkpoint_hash(const Checkpoint& ckpt);

/// Throws DataError when the checkpoint's vocabulary sizes differ from the graph's.
void check_compatible(const Checkpoint& ckpt, const KnowledgeGraph& kg);

}  // namespace kgp

#endif  // KGPOISON_CHECKPOINT_HPP_
