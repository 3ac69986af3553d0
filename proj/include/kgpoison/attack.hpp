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

#ifndef KGPOISON_ATTACK_HPP_
#define KGPOISON_ATTACK_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kgpoison/attribution.hpp"
#include "kgpoison/influence.hpp"
#include "kgpoison/kg_store.hpp"
#include "kgpoison/model.hpp"

namespace kgp {

enum class AttackMethod {
  kAttribution,  // uses AttackSpec::metric
  kRandomNeighbourhood,
  kRandomGlobal,
};

/// One-edit-per-target attack description.
struct AttackSpec {
  AttackMethod method = AttackMethod::kAttribution;
  AttributionMetric metric = AttributionMetric::kCos;
  PerturbationKind mode = PerturbationKind::kDelete;
  int budget = 1;
  std::uint64_t seed = 0;

  /// "cos", "grad-dot", ..., "random_n", "random_g".
  std::string metric_name() const;
  void validate() const;
};

/// Parses a metric column value into (method, metric).
AttackSpec parse_attack_metric(std::string_view name, PerturbationKind mode, std::uint64_t seed);
PerturbationKind parse_mode(std::string_view name);

struct AttackOptions {
  AttributionOptions attribution;
  IFConfig influence;
  /// Grid-tune the damping on the first few targets before an IF attack.
  bool tune_damping = false;
  /// Diagnostics stream for LiSSA (`target_id,repeat,depth,iterate_norm`).
  std::function<void(std::size_t target_id, const IterateRecord&)> lissa_log;
};

/// Most influential neighbourhood triple under `metric`, or nullopt when the
/// neighbourhood is empty. `inverse_hvp` is required for the IF metric.
std::optional<InfluenceScore> most_influential(const EmbeddingModel& model,
                                               const KnowledgeGraph& kg, const Triple& z,
                                               AttributionMetric metric,
                                               const AttributionOptions& options,
                                               const GradientVector* inverse_hvp = nullptr);

std::optional<Perturbation> select_deletion(const EmbeddingModel& model, const KnowledgeGraph& kg,
                                            const Triple& z, AttributionMetric metric,
                                            const AttributionOptions& options,
                                            const GradientVector* inverse_hvp = nullptr);

/// Which entities of the influential triple x an addition anchors on. Only
/// kSubjectShared is the primary rule; kObjectShared (subject replaced) and
/// kBothShared (object replaced) are conventions and are flagged in reports.
enum class ReplacementCase { kNone, kSubjectShared, kObjectShared, kBothShared };

/// "" for kNone, else "subject_shared" / "object_shared" / "both_shared".
std::string to_string(ReplacementCase c);
ReplacementCase replacement_case(const Triple& z, const Triple& influential);

/// Replaces the entity of the influential triple x that is not shared with z
/// (the object when x's subject is a target entity, else the subject) by the
/// most dissimilar entity: minimum cosine for multiplicative models, maximum
/// Euclidean distance for TransE. Excludes the replaced entity itself, the
/// target's entities, and replacements producing a known triple.
Perturbation make_addition(const EmbeddingModel& model, const KnowledgeGraph& kg, const Triple& z,
                           const Triple& influential);

std::optional<Perturbation> select_addition(const EmbeddingModel& model, const KnowledgeGraph& kg,
                                            const Triple& z, AttributionMetric metric,
                                            const AttributionOptions& options,
                                            const GradientVector* inverse_hvp = nullptr);

/// Random_n (neighbourhood) / Random_g (global) baselines. Additions are
/// rejection-sampled to be unknown triples; more than 10,000 draws is a
/// DataError. nullopt when a neighbourhood deletion has nothing to delete.
std::optional<Perturbation> random_baseline(const KnowledgeGraph& kg, const Triple& z,
                                            PerturbationKind mode, bool global,
                                            std::uint64_t seed);

struct AttackRecord {
  Perturbation perturbation;
  /// Relation of the influential triple (equals the perturbation's relation
  /// for attribution attacks); -1 for random baselines.
  RelationId influential_relation = -1;
  double selection_seconds = 0.0;
  /// Set for attribution additions.
  ReplacementCase replacement = ReplacementCase::kNone;
};

struct SkipRecord {
  Triple target;
  std::string reason;
};

struct AttackResult {
  AttackSpec spec;
  std::vector<AttackRecord> records;
  std::vector<SkipRecord> skips;

  /// Perturbations with duplicates removed, in target order.
  std::vector<Perturbation> unique_perturbations() const;
  /// Targets that received a perturbation.
  std::vector<Triple> attacked_targets() const;
};

/// One perturbation per non-skipped target. Per-target failures are recorded
/// as skips; they do not abort the batch.
AttackResult run_attack(const EmbeddingModel& model, const KnowledgeGraph& kg,
                        std::span<const Triple> targets, const AttackSpec& spec,
                        const AttackOptions& options);

/// `target_s,target_r,target_o,kind,s,r,o,metric,selection_seconds,replacement`.
std::string perturbation_csv(const Vocabulary& vocab, const AttackResult& result);
/// Reads a perturbation file back into perturbations over `vocab`.
std::vector<Perturbation> parse_perturbation_csv(const Vocabulary& vocab, const std::string& text);

/// `target_s,target_r,target_o,reason`.
std::string skip_csv(const Vocabulary& vocab, const AttackResult& result);
/// Target relation vs influential-triple relation, one row per target.
std::string relation_report_csv(const Vocabulary& vocab, const AttackResult& result);

}  // namespace kgp

#endif  // KGPOISON_ATTACK_HPP_
