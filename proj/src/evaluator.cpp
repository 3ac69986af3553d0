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

#include "kgpoison/evaluator.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include <spdlog/spdlog.h>

namespace kgp {

FilterIndex::FilterIndex(std::initializer_list<std::span<const Triple>> sources) {
  for (const auto& src : sources) {
    for (const Triple& t : src) insert(t);
  }
}

FilterIndex FilterIndex::from_graph(const KnowledgeGraph& kg) {
  return FilterIndex({kg.train(), kg.valid(), kg.test()});
}

void FilterIndex::insert(const Triple& t) {
  if (!known_.insert(t).second) return;
  objects_[key(t.s, t.r)].push_back(t.o);
  subjects_[key(t.r, t.o)].push_back(t.s);
}

const std::vector<EntityId>& FilterIndex::objects(EntityId s, RelationId r) const {
  static const std::vector<EntityId> kEmpty;
  auto it = objects_.find(key(s, r));
  return it == objects_.end() ? kEmpty : it->second;
}

const std::vector<EntityId>& FilterIndex::subjects(RelationId r, EntityId o) const {
  static const std::vector<EntityId> kEmpty;
  auto it = subjects_.find(key(r, o));
  return it == subjects_.end() ? kEmpty : it->second;
}

std::int64_t filtered_rank(const Vector& scores, EntityId truth,
                           const std::vector<EntityId>& filtered) {
  const double target = scores(truth);
  std::int64_t above = 0;
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    if (scores(i) >= target) ++above;
  }
  --above;  // the truth itself
  for (EntityId f : filtered) {
    if (f != truth && scores(f) >= target) --above;
  }
  return 1 + above;
}

RankPair filtered_ranks(const EmbeddingModel& model, const FilterIndex& filter, const Triple& t) {
  RankPair rp;
  rp.object_rank = filtered_rank(score_all_objects(model, t.s, t.r), t.o, filter.objects(t.s, t.r));
  rp.subject_rank =
      filtered_rank(score_all_subjects(model, t.r, t.o), t.s, filter.subjects(t.r, t.o));
  return rp;
}

RankPair filtered_ranks(const EmbeddingModel& model, const KnowledgeGraph& kg, const Triple& t) {
  return filtered_ranks(model, FilterIndex::from_graph(kg), t);
}

EvalReport aggregate(std::span<const RankPair> ranks) {
  if (ranks.empty()) throw DataError("evaluate: empty triple set");
  EvalReport rep;
  rep.ranks.assign(ranks.begin(), ranks.end());
  double sum_rank = 0.0, sum_rr = 0.0, h1 = 0.0, h3 = 0.0, h10 = 0.0;
  for (const RankPair& rp : ranks) {
    for (std::int64_t r : {rp.subject_rank, rp.object_rank}) {
      sum_rank += static_cast<double>(r);
      sum_rr += 1.0 / static_cast<double>(r);
      h1 += r <= 1;
      h3 += r <= 3;
      h10 += r <= 10;
    }
  }
  const double n = 2.0 * static_cast<double>(ranks.size());
  rep.mr = sum_rank / n;
  rep.mrr = sum_rr / n;
  rep.hits1 = h1 / n;
  rep.hits3 = h3 / n;
  rep.hits10 = h10 / n;
  return rep;
}

EvalReport evaluate(const EmbeddingModel& model, const FilterIndex& filter,
                    std::span<const Triple> triples) {
  if (triples.empty()) throw DataError("evaluate: empty triple set");
  std::vector<RankPair> ranks;
  ranks.reserve(triples.size());
  for (const Triple& t : triples) ranks.push_back(filtered_ranks(model, filter, t));
  return aggregate(ranks);
}

EvalReport evaluate(const EmbeddingModel& model, const KnowledgeGraph& kg,
                    std::span<const Triple> triples) {
  return evaluate(model, FilterIndex::from_graph(kg), triples);
}

std::vector<Triple> select_targets(const EmbeddingModel& model, const KnowledgeGraph& kg,
                                   std::size_t n, std::uint64_t seed) {
  const FilterIndex filter = FilterIndex::from_graph(kg);
  std::vector<Triple> best;
  for (const Triple& t : kg.test()) {
    const RankPair rp = filtered_ranks(model, filter, t);
    if (rp.subject_rank == 1 && rp.object_rank == 1) best.push_back(t);
  }
  spdlog::info("{} of {} test triples ranked 1 on both sides", best.size(), kg.test().size());
  if (best.empty()) {
    throw DataError("select_targets: no test triple is ranked 1 on both sides (" +
                    std::to_string(kg.test().size()) + " test triples); model undertrained?");
  }
  if (best.size() <= n) return best;
  std::vector<std::size_t> order(best.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order.begin(), order.end());
  order.resize(n);
  std::sort(order.begin(), order.end());
  std::vector<Triple> out;
  out.reserve(n);
  for (std::size_t i : order) out.push_back(best[i]);
  return out;
}

std::string report_csv_header() { return "split,mr,mrr,h1,h3,h10\n"; }

std::string report_csv_row(const std::string& split, const EvalReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%s,%.6f,%.6f,%.6f,%.6f,%.6f\n", split.c_str(), r.mr, r.mrr,
                r.hits1, r.hits3, r.hits10);
  return buf;
}

std::string report_table(std::span<const std::pair<std::string, EvalReport>> rows) {
  std::ostringstream out;
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-12s %10s %8s %8s %8s %8s\n", "split", "MR", "MRR", "H@1",
                "H@3", "H@10");
  out << buf;
  for (const auto& [name, r] : rows) {
    std::snprintf(buf, sizeof(buf), "%-12s %10.2f %8.4f %8.4f %8.4f %8.4f\n", name.c_str(), r.mr,
                  r.mrr, r.hits1, r.hits3, r.hits10);
    out << buf;
  }
  return out.str();
}

}  // namespace kgp
