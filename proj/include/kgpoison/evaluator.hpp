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

#ifndef KGPOISON_EVALUATOR_HPP_
#define KGPOISON_EVALUATOR_HPP_

#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "kgpoison/kg_store.hpp"
#include "kgpoison/model.hpp"

namespace kgp {

/// Known-true triples excluded from the candidate pool during ranking.
class FilterIndex {
 public:
  FilterIndex() = default;
  explicit FilterIndex(std::initializer_list<std::span<const Triple>> sources);

  /// train ∪ valid ∪ test of `kg`.
  static FilterIndex from_graph(const KnowledgeGraph& kg);

  void insert(const Triple& t);
  bool contains(const Triple& t) const { return known_.contains(t); }
  /// Known objects o′ of (s, r, ·), and known subjects of (·, r, o).
  const std::vector<EntityId>& objects(EntityId s, RelationId r) const;
  const std::vector<EntityId>& subjects(RelationId r, EntityId o) const;

 private:
  static std::uint64_t key(std::int32_t a, std::int32_t b) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
           static_cast<std::uint32_t>(b);
  }
  TripleSet known_;
  std::unordered_map<std::uint64_t, std::vector<EntityId>> objects_;
  std::unordered_map<std::uint64_t, std::vector<EntityId>> subjects_;
};

struct RankPair {
  std::int64_t subject_rank = 0;
  std::int64_t object_rank = 0;
};

/// Aggregates over both sides: 2·|set| ranks.
struct EvalReport {
  double mr = 0.0;
  double mrr = 0.0;
  double hits1 = 0.0;
  double hits3 = 0.0;
  double hits10 = 0.0;
  std::vector<RankPair> ranks;
};

/// 1 + #{candidates c ≠ truth, not filtered, score(c) ≥ score(truth)}:
/// ties count against the truth.
std::int64_t filtered_rank(const Vector& scores, EntityId truth,
                           const std::vector<EntityId>& filtered);

RankPair filtered_ranks(const EmbeddingModel& model, const FilterIndex& filter, const Triple& t);
RankPair filtered_ranks(const EmbeddingModel& model, const KnowledgeGraph& kg, const Triple& t);

EvalReport aggregate(std::span<const RankPair> ranks);

/// Throws DataError on an empty set.
EvalReport evaluate(const EmbeddingModel& model, const FilterIndex& filter,
                    std::span<const Triple> triples);
EvalReport evaluate(const EmbeddingModel& model, const KnowledgeGraph& kg,
                    std::span<const Triple> triples);

/// Test triples ranked 1 on both sides; a seed-deterministic sample of `n`
/// of them when more qualify (returned in test-file order). Throws DataError
/// when none qualify.
std::vector<Triple> select_targets(const EmbeddingModel& model, const KnowledgeGraph& kg,
                                   std::size_t n, std::uint64_t seed);

std::string report_csv_header();
std::string report_csv_row(const std::string& split, const EvalReport& report);
std::string report_table(std::span<const std::pair<std::string, EvalReport>> rows);

}  // namespace kgp

#endif  // KGPOISON_EVALUATOR_HPP_
