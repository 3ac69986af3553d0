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

#ifndef KGPOISON_KG_STORE_HPP_
#define KGPOISON_KG_STORE_HPP_

#include <compare>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace kgp {

using EntityId = std::int32_t;
using RelationId = std::int32_t;

struct Triple {
  EntityId s = 0;
  RelationId r = 0;
  EntityId o = 0;

  friend auto operator<=>(const Triple&, const Triple&) = default;
};

struct TripleHash {
  std::size_t operator()(const Triple& t) const noexcept {
    std::uint64_t h = static_cast<std::uint32_t>(t.s);
    h = h * 0x9e3779b97f4a7c15ULL + static_cast<std::uint32_t>(t.r);
    h = h * 0x9e3779b97f4a7c15ULL + static_cast<std::uint32_t>(t.o);
    return static_cast<std::size_t>(h ^ (h >> 29));
  }
};

using TripleSet = std::unordered_set<Triple, TripleHash>;

class Vocabulary {
 public:
  Vocabulary() = default;
  Vocabulary(std::vector<std::string> entities, std::vector<std::string> relations);

  /// Returns the id of `name`, assigning the next dense id on first sight.
  EntityId intern_entity(const std::string& name);
  RelationId intern_relation(const std::string& name);

  /// -1 when unknown.
  EntityId find_entity(const std::string& name) const;
  RelationId find_relation(const std::string& name) const;

  const std::string& entity_name(EntityId id) const { return entities_.at(id); }
  const std::string& relation_name(RelationId id) const { return relations_.at(id); }

  std::size_t num_entities() const { return entities_.size(); }
  std::size_t num_relations() const { return relations_.size(); }

  const std::vector<std::string>& entities() const { return entities_; }
  const std::vector<std::string>& relations() const { return relations_; }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.entities_ == b.entities_ && a.relations_ == b.relations_;
  }

 private:
  std::vector<std::string> entities_;
  std::vector<std::string> relations_;
  std::unordered_map<std::string, EntityId> entity_ids_;
  std::unordered_map<std::string, RelationId> relation_ids_;
};

enum class PerturbationKind { kDelete, kAdd };

struct Perturbation {
  PerturbationKind kind = PerturbationKind::kDelete;
  Triple triple;
  Triple target;

  friend bool operator==(const Perturbation&, const Perturbation&) = default;
};

const char* to_string(PerturbationKind kind);

/// Immutable, indexed knowledge graph. Safe to share across readers.
class KnowledgeGraph {
 public:
  /// Builds the indices. Duplicate train triples are dropped (with a warning);
  /// valid/test triples mentioning ids outside the train-derived vocabulary
  /// are dropped when `filter_unseen` is set.
  static KnowledgeGraph build(Vocabulary vocab, std::vector<Triple> train,
                              std::vector<Triple> valid, std::vector<Triple> test,
                              bool filter_unseen = true);

  const Vocabulary& vocab() const { return vocab_; }
  std::size_t num_entities() const { return vocab_.num_entities(); }
  std::size_t num_relations() const { return vocab_.num_relations(); }

  const std::vector<Triple>& train() const { return train_; }
  const std::vector<Triple>& valid() const { return valid_; }
  const std::vector<Triple>& test() const { return test_; }

  bool in_train(const Triple& t) const { return train_index_.contains(t); }
  /// Index of `t` in train(), or -1.
  std::int64_t train_index_of(const Triple& t) const;
  /// Membership in train ∪ valid ∪ test.
  bool is_known(const Triple& t) const;

  /// Indices of train triples whose subject or object is `entity`, ascending.
  std::span<const std::uint32_t> touching(EntityId entity) const { return by_entity_.at(entity); }

  bool valid_ids(const Triple& t) const;

 private:
  Vocabulary vocab_;
  std::vector<Triple> train_;
  std::vector<Triple> valid_;
  std::vector<Triple> test_;
  std::unordered_map<Triple, std::uint32_t, TripleHash> train_index_;
  TripleSet eval_set_;
  std::vector<std::vector<std::uint32_t>> by_entity_;
};

/// Loads tab-separated `subject\trelation\tobject` files. Ids are assigned in
/// first-appearance order over the train file, subject before object.
KnowledgeGraph load_dataset(const std::filesystem::path& train_path,
                            const std::filesystem::path& valid_path,
                            const std::filesystem::path& test_path);

/// Loads `train.txt`/`valid.txt`/`test.txt` from a directory. When the
/// directory also carries `entities.txt`/`relations.txt` (as written by
/// write_dataset), ids follow those lists so that a perturbed dataset keeps
/// the vocabulary of the graph it was derived from.
KnowledgeGraph load_dataset_dir(const std::filesystem::path& dir);

/// Writes train/valid/test in the same format plus the vocabulary lists.
void write_dataset(const KnowledgeGraph& kg, const std::filesystem::path& dir);

/// Train indices x with x.s or x.o in {target.s, target.o}; deduplicated,
/// ascending. Throws DataError on an unknown entity.
std::vector<std::uint32_t> neighbourhood(const KnowledgeGraph& kg, const Triple& target);

bool shares_entity(const Triple& a, const Triple& b);

/// Applies deletions/additions, returning a new graph over the same
/// vocabulary. Identical perturbations are applied once. Throws DataError on
/// a Delete of an absent triple, an Add of a known triple, or a triple that
/// appears as both Delete and Add.
KnowledgeGraph apply_perturbations(const KnowledgeGraph& kg,
                                   std::span<const Perturbation> perturbations);

struct SummaryStats {
  double median = 0.0;
  double mean = 0.0;
  double stddev = 0.0;  // population
  std::size_t count = 0;
};

SummaryStats summarize(std::vector<double> values);

SummaryStats neighbourhood_stats(const KnowledgeGraph& kg, std::span<const Triple> targets);

/// `metric,value` CSV.
std::string stats_csv(const SummaryStats& stats);

std::string format_triple(const Vocabulary& vocab, const Triple& t);

}  // namespace kgp

#endif  // KGPOISON_KG_STORE_HPP_
