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

#include "kgpoison/attack.hpp"

#include <chrono>
#include <cstdio>
#include <limits>
#include <sstream>

#include <spdlog/spdlog.h>

namespace kgp {

std::string AttackSpec::metric_name() const {
  switch (method) {
    case AttackMethod::kRandomNeighbourhood:
      return "random_n";
    case AttackMethod::kRandomGlobal:
      return "random_g";
    case AttackMethod::kAttribution:
      break;
  }
  return to_string(metric);
}

void AttackSpec::validate() const {
  if (budget != 1) throw ConfigError("attack budget is fixed at one edit per target");
}

AttackSpec parse_attack_metric(std::string_view name, PerturbationKind mode, std::uint64_t seed) {
  AttackSpec spec;
  spec.mode = mode;
  spec.seed = seed;
  if (name == "random_n") {
    spec.method = AttackMethod::kRandomNeighbourhood;
  } else if (name == "random_g") {
    spec.method = AttackMethod::kRandomGlobal;
  } else {
    spec.method = AttackMethod::kAttribution;
    spec.metric = parse_attribution_metric(name);
  }
  return spec;
}

PerturbationKind parse_mode(std::string_view name) {
  if (name == "delete") return PerturbationKind::kDelete;
  if (name == "add") return PerturbationKind::kAdd;
  throw ConfigError("unknown attack mode: " + std::string(name));
}

std::optional<InfluenceScore> most_influential(const EmbeddingModel& model,
                                               const KnowledgeGraph& kg, const Triple& z,
                                               AttributionMetric metric,
                                               const AttributionOptions& options,
                                               const GradientVector* inverse_hvp) {
  const auto candidates = neighbourhood(kg, z);
  if (candidates.empty()) return std::nullopt;
  auto ranked = rank_candidates(model, kg, z, candidates, metric, options, inverse_hvp);
  return ranked.front();
}

std::optional<Perturbation> select_deletion(const EmbeddingModel& model, const KnowledgeGraph& kg,
                                            const Triple& z, AttributionMetric metric,
                                            const AttributionOptions& options,
                                            const GradientVector* inverse_hvp) {
  auto top = most_influential(model, kg, z, metric, options, inverse_hvp);
  if (!top) return std::nullopt;
  return Perturbation{PerturbationKind::kDelete, top->candidate, z};
}

std::string to_string(ReplacementCase c) {
  switch (c) {
    case ReplacementCase::kNone:
      return "";
    case ReplacementCase::kSubjectShared:
      return "subject_shared";
    case ReplacementCase::kObjectShared:
      return "object_shared";
    case ReplacementCase::kBothShared:
      return "both_shared";
  }
  return "";
}

ReplacementCase replacement_case(const Triple& z, const Triple& influential) {
  const bool s = influential.s == z.s || influential.s == z.o;
  const bool o = influential.o == z.s || influential.o == z.o;
  if (s && o) return ReplacementCase::kBothShared;
  if (s) return ReplacementCase::kSubjectShared;
  if (o) return ReplacementCase::kObjectShared;
  return ReplacementCase::kNone;
}

Perturbation make_addition(const EmbeddingModel& model, const KnowledgeGraph& kg, const Triple& z,
                           const Triple& influential) {
  const bool subject_shared = influential.s == z.s || influential.s == z.o;
  const bool replace_object = subject_shared;
  const EntityId replaced = replace_object ? influential.o : influential.s;
  const auto anchor = model.entity.row(replaced);
  const double anchor_norm = anchor.norm();
  const bool multiplicative = is_multiplicative(model.kind);

  EntityId best = -1;
  // Lower is more dissimilar: cosine for multiplicative models, −distance otherwise.
  double best_value = std::numeric_limits<double>::infinity();
  for (EntityId c = 0; c < static_cast<EntityId>(model.num_entities()); ++c) {
    if (c == replaced || c == z.s || c == z.o) continue;
    Triple candidate = influential;
    (replace_object ? candidate.o : candidate.s) = c;
    if (kg.is_known(candidate)) continue;
    const auto row = model.entity.row(c);
    double value;
    if (multiplicative) {
      const double denom = anchor_norm * row.norm();
      value = denom > 0.0 ? anchor.dot(row) / denom : 0.0;
    } else {
      value = -(anchor - row).norm();
    }
    if (value < best_value) {
      best_value = value;
      best = c;
    }
  }
  if (best < 0) {
    throw DataError("no admissible replacement entity for " +
                    format_triple(kg.vocab(), influential));
  }
  Triple added = influential;
  (replace_object ? added.o : added.s) = best;
  return {PerturbationKind::kAdd, added, z};
}

std::optional<Perturbation> select_addition(const EmbeddingModel& model, const KnowledgeGraph& kg,
                                            const Triple& z, AttributionMetric metric,
                                            const AttributionOptions& options,
                                            const GradientVector* inverse_hvp) {
  auto top = most_influential(model, kg, z, metric, options, inverse_hvp);
  if (!top) return std::nullopt;
  return make_addition(model, kg, z, top->candidate);
}

std::optional<Perturbation> random_baseline(const KnowledgeGraph& kg, const Triple& z,
                                            PerturbationKind mode, bool global,
                                            std::uint64_t seed) {
  Rng rng(seed);
  if (mode == PerturbationKind::kDelete) {
    if (global) {
      if (kg.train().empty()) return std::nullopt;
      return Perturbation{mode, kg.train()[rng.uniform_index(kg.train().size())], z};
    }
    const auto nbhd = neighbourhood(kg, z);
    if (nbhd.empty()) return std::nullopt;
    return Perturbation{mode, kg.train()[nbhd[rng.uniform_index(nbhd.size())]], z};
  }
  const auto ne = kg.num_entities();
  const auto nr = kg.num_relations();
  constexpr int kMaxDraws = 10000;
  for (int draw = 0; draw < kMaxDraws; ++draw) {
    Triple t;
    t.r = static_cast<RelationId>(rng.uniform_index(nr));
    if (global) {
      t.s = static_cast<EntityId>(rng.uniform_index(ne));
      t.o = static_cast<EntityId>(rng.uniform_index(ne));
    } else {
      const EntityId pinned = rng.bernoulli(0.5) ? z.s : z.o;
      const auto other = static_cast<EntityId>(rng.uniform_index(ne));
      if (rng.bernoulli(0.5)) {
        t.s = pinned;
        t.o = other;
      } else {
        t.s = other;
        t.o = pinned;
      }
    }
    if (!kg.is_known(t)) return Perturbation{mode, t, z};
  }
  throw DataError("random addition: rejection sampling exceeded 10000 draws");
}

std::vector<Perturbation> AttackResult::unique_perturbations() const {
  std::vector<Perturbation> out;
  TripleSet seen_delete, seen_add;
  for (const auto& rec : records) {
    auto& seen = rec.perturbation.kind == PerturbationKind::kDelete ? seen_delete : seen_add;
    if (seen.insert(rec.perturbation.triple).second) out.push_back(rec.perturbation);
  }
  return out;
}

std::vector<Triple> AttackResult::attacked_targets() const {
  std::vector<Triple> out;
  out.reserve(records.size());
  for (const auto& rec : records) out.push_back(rec.perturbation.target);
  return out;
}

AttackResult run_attack(const EmbeddingModel& model, const KnowledgeGraph& kg,
                        std::span<const Triple> targets, const AttackSpec& spec,
                        const AttackOptions& options) {
  spec.validate();
  AttackResult result;
  result.spec = spec;
  const bool use_if = spec.method == AttackMethod::kAttribution &&
                      spec.metric == AttributionMetric::kInfluence;
  IFConfig if_config = options.influence;
  const RegConfig grad_reg = options.attribution.gradient_reg();
  if (use_if) {
    if_config.validate();
    if (options.tune_damping) {
      std::vector<GradientVector> probes;
      for (std::size_t i = 0; i < targets.size() && probes.size() < 3; ++i) {
        probes.push_back(loss_gradient(model, targets[i], grad_reg));
      }
      if_config.damping =
          tune_damping(model, kg, probes, if_config, grad_reg, derive_seed(spec.seed, "damping"));
      spdlog::info("tuned damping: {}", if_config.damping);
    }
  }

  for (std::size_t i = 0; i < targets.size(); ++i) {
    const Triple& z = targets[i];
    const std::uint64_t target_seed = derive_seed(spec.seed, i);
    const auto start = std::chrono::steady_clock::now();
    try {
      std::optional<Perturbation> p;
      RelationId influential_relation = -1;
      ReplacementCase replacement = ReplacementCase::kNone;
      if (spec.method != AttackMethod::kAttribution) {
        p = random_baseline(kg, z, spec.mode, spec.method == AttackMethod::kRandomGlobal,
                            target_seed);
      } else {
        std::optional<InverseHVP> ihvp;
        if (use_if && !neighbourhood(kg, z).empty()) {
          IterateObserver observer;
          if (options.lissa_log) {
            observer = [&, i](const IterateRecord& rec) { options.lissa_log(i, rec); };
          }
          ihvp = inverse_hvp_lissa(model, kg, z, loss_gradient(model, z, grad_reg), if_config,
                                   grad_reg, target_seed, observer);
        }
        const GradientVector* iv = ihvp ? &ihvp->vector : nullptr;
        auto top = most_influential(model, kg, z, spec.metric, options.attribution, iv);
        if (top) {
          influential_relation = top->candidate.r;
          if (spec.mode == PerturbationKind::kAdd) {
            replacement = replacement_case(z, top->candidate);
          }
          p = spec.mode == PerturbationKind::kDelete
                  ? Perturbation{PerturbationKind::kDelete, top->candidate, z}
                  : make_addition(model, kg, z, top->candidate);
        }
      }
      const double seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      if (!p) {
        result.skips.push_back({z, "empty neighbourhood"});
        spdlog::info("target {} skipped: empty neighbourhood", format_triple(kg.vocab(), z));
        continue;
      }
      result.records.push_back({*p, influential_relation, seconds, replacement});
    } catch (const std::exception& e) {
      result.skips.push_back({z, e.what()});
      spdlog::warn("target {} skipped: {}", format_triple(kg.vocab(), z), e.what());
    }
  }
  return result;
}

namespace {

std::string triple_fields(const Vocabulary& vocab, const Triple& t) {
  return csv_field(vocab.entity_name(t.s)) + "," + csv_field(vocab.relation_name(t.r)) + "," +
         csv_field(vocab.entity_name(t.o));
}

}  // namespace

std::string perturbation_csv(const Vocabulary& vocab, const AttackResult& result) {
  std::ostringstream out;
  out << "target_s,target_r,target_o,kind,s,r,o,metric,selection_seconds,replacement\n";
  char secs[64];
  for (const auto& rec : result.records) {
    std::snprintf(secs, sizeof(secs), "%.6f", rec.selection_seconds);
    out << triple_fields(vocab, rec.perturbation.target) << ','
        << to_string(rec.perturbation.kind) << ','
        << triple_fields(vocab, rec.perturbation.triple) << ',' << result.spec.metric_name() << ','
        << secs << ',' << to_string(rec.replacement) << '\n';
  }
  return out.str();
}

std::vector<Perturbation> parse_perturbation_csv(const Vocabulary& vocab, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<Perturbation> out;
  bool header = true;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (header) {
      header = false;
      continue;
    }
    if (line.empty()) continue;
    const auto f = parse_csv_line(line);
    if (f.size() != 9 && f.size() != 10) {
      throw DataError("perturbation file line " + std::to_string(line_no) +
                      ": expected 9 or 10 fields");
    }
    auto entity = [&](const std::string& name) {
      const EntityId id = vocab.find_entity(name);
      if (id < 0) throw DataError("perturbation file: unknown entity " + name);
      return id;
    };
    auto relation = [&](const std::string& name) {
      const RelationId id = vocab.find_relation(name);
      if (id < 0) throw DataError("perturbation file: unknown relation " + name);
      return id;
    };
    Perturbation p;
    p.target = {entity(f[0]), relation(f[1]), entity(f[2])};
    if (f[3] == "delete") {
      p.kind = PerturbationKind::kDelete;
    } else if (f[3] == "add") {
      p.kind = PerturbationKind::kAdd;
    } else {
      throw DataError("perturbation file: bad kind " + f[3]);
    }
    p.triple = {entity(f[4]), relation(f[5]), entity(f[6])};
    out.push_back(p);
  }
  return out;
}

std::string skip_csv(const Vocabulary& vocab, const AttackResult& result) {
  std::ostringstream out;
  out << "target_s,target_r,target_o,reason\n";
  for (const auto& skip : result.skips) {
    out << triple_fields(vocab, skip.target) << ',' << csv_field(skip.reason) << '\n';
  }
  return out.str();
}

std::string relation_report_csv(const Vocabulary& vocab, const AttackResult& result) {
  std::ostringstream out;
  out << "target_s,target_r,target_o,target_relation,influential_relation\n";
  for (const auto& rec : result.records) {
    if (rec.influential_relation < 0) continue;
    out << triple_fields(vocab, rec.perturbation.target) << ','
        << csv_field(vocab.relation_name(rec.perturbation.target.r)) << ','
        << csv_field(vocab.relation_name(rec.influential_relation)) << '\n';
  }
  return out.str();
}

}  // namespace kgp
