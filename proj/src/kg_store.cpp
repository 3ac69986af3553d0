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

#include "kgpoison/kg_store.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>

#include <spdlog/spdlog.h>

#include "kgpoison/common.hpp"

namespace kgp {

Vocabulary::Vocabulary(std::vector<std::string> entities, std::vector<std::string> relations) {
  for (const auto& e : entities) {
    if (find_entity(e) >= 0) throw DataError("duplicate entity name in vocabulary: " + e);
    intern_entity(e);
  }
  for (const auto& r : relations) {
    if (find_relation(r) >= 0) throw DataError("duplicate relation name in vocabulary: " + r);
    intern_relation(r);
  }
}

EntityId Vocabulary::intern_entity(const std::string& name) {
  auto [it, inserted] = entity_ids_.try_emplace(name, static_cast<EntityId>(entities_.size()));
  if (inserted) entities_.push_back(name);
  return it->second;
}

RelationId Vocabulary::intern_relation(const std::string& name) {
  auto [it, inserted] = relation_ids_.try_emplace(name, static_cast<RelationId>(relations_.size()));
  if (inserted) relations_.push_back(name);
  return it->second;
}

EntityId Vocabulary::find_entity(const std::string& name) const {
  auto it = entity_ids_.find(name);
  return it == entity_ids_.end() ? -1 : it->second;
}

RelationId Vocabulary::find_relation(const std::string& name) const {
  auto it = relation_ids_.find(name);
  return it == relation_ids_.end() ? -1 : it->second;
}

const char* to_string(PerturbationKind kind) {
  return kind == PerturbationKind::kDelete ? "delete" : "add";
}

KnowledgeGraph KnowledgeGraph::build(Vocabulary vocab, std::vector<Triple> train,
                                     std::vector<Triple> valid, std::vector<Triple> test,
                                     bool filter_unseen) {
  KnowledgeGraph kg;
  kg.vocab_ = std::move(vocab);
  const auto ne = static_cast<EntityId>(kg.vocab_.num_entities());
  const auto nr = static_cast<RelationId>(kg.vocab_.num_relations());

  kg.train_.reserve(train.size());
  std::size_t duplicates = 0;
  for (const Triple& t : train) {
    if (!kg.valid_ids(t)) throw DataError("train triple id out of range");
    auto [it, inserted] =
        kg.train_index_.try_emplace(t, static_cast<std::uint32_t>(kg.train_.size()));
    if (!inserted) {
      ++duplicates;
      continue;
    }
    kg.train_.push_back(t);
  }
  if (duplicates > 0) spdlog::warn("dropped {} duplicate train triples", duplicates);

  // Entities/relations seen in train.
  std::vector<char> seen_entity(ne, 0), seen_relation(nr, 0);
  for (const Triple& t : kg.train_) {
    seen_entity[t.s] = seen_entity[t.o] = 1;
    seen_relation[t.r] = 1;
  }
  auto keep = [&](const Triple& t) {
    if (!kg.valid_ids(t)) return false;
    if (!filter_unseen) return true;
    return seen_entity[t.s] && seen_entity[t.o] && seen_relation[t.r];
  };
  for (auto* split : {&valid, &test}) {
    const std::size_t before = split->size();
    std::erase_if(*split, [&](const Triple& t) { return !keep(t); });
    if (split->size() != before) {
      spdlog::info("filtered {} {} triples with unseen ids", before - split->size(),
                   split == &valid ? "valid" : "test");
    }
  }
  kg.valid_ = std::move(valid);
  kg.test_ = std::move(test);
  for (const auto* split : {&kg.valid_, &kg.test_}) {
    kg.eval_set_.insert(split->begin(), split->end());
  }

  kg.by_entity_.assign(ne, {});
  for (std::uint32_t i = 0; i < kg.train_.size(); ++i) {
    const Triple& t = kg.train_[i];
    kg.by_entity_[t.s].push_back(i);
    if (t.o != t.s) kg.by_entity_[t.o].push_back(i);
  }
  return kg;
}

std::int64_t KnowledgeGraph::train_index_of(const Triple& t) const {
  auto it = train_index_.find(t);
  return it == train_index_.end() ? -1 : static_cast<std::int64_t>(it->second);
}

bool KnowledgeGraph::is_known(const Triple& t) const {
  return train_index_.contains(t) || eval_set_.contains(t);
}

bool KnowledgeGraph::valid_ids(const Triple& t) const {
  const auto ne = static_cast<EntityId>(vocab_.num_entities());
  const auto nr = static_cast<RelationId>(vocab_.num_relations());
  return t.s >= 0 && t.s < ne && t.o >= 0 && t.o < ne && t.r >= 0 && t.r < nr;
}

namespace {

struct RawTriple {
  std::string s, r, o;
};

void rtrim(std::string& line) {
  while (!line.empty() && (line.back() == ' ' || line.back() == '\t' || line.back() == '\r' ||
                           line.back() == '\n')) {
    line.pop_back();
  }
}

std::vector<RawTriple> read_triples(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<RawTriple> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    rtrim(line);
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const auto tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab == std::string::npos ? tab : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (fields.size() != 3) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected 3 tab-separated fields, got " +
                      std::to_string(fields.size()));
    }
    out.push_back({std::move(fields[0]), std::move(fields[1]), std::move(fields[2])});
  }
  return out;
}

std::vector<std::string> read_names(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<std::string> names;
  std::string line;
  while (std::getline(in, line)) {
    rtrim(line);
    names.push_back(line);
  }
  return names;
}

// Maps names through a fixed vocabulary; unknown names yield nullopt.
std::optional<Triple> lookup(const Vocabulary& vocab, const RawTriple& raw) {
  const EntityId s = vocab.find_entity(raw.s);
  const RelationId r = vocab.find_relation(raw.r);
  const EntityId o = vocab.find_entity(raw.o);
  if (s < 0 || r < 0 || o < 0) return std::nullopt;
  return Triple{s, r, o};
}

KnowledgeGraph assemble(Vocabulary vocab, bool fixed_vocab, const std::vector<RawTriple>& raw_train,
                        const std::vector<RawTriple>& raw_valid,
                        const std::vector<RawTriple>& raw_test) {
  std::vector<Triple> train;
  train.reserve(raw_train.size());
  for (const auto& raw : raw_train) {
    if (fixed_vocab) {
      auto t = lookup(vocab, raw);
      if (!t) throw DataError("train triple uses a name missing from the vocabulary files");
      train.push_back(*t);
    } else {
      const EntityId s = vocab.intern_entity(raw.s);
      const RelationId r = vocab.intern_relation(raw.r);
      const EntityId o = vocab.intern_entity(raw.o);
      train.push_back({s, r, o});
    }
  }
  auto map_split = [&](const std::vector<RawTriple>& raws, const char* name) {
    std::vector<Triple> out;
    std::size_t unseen = 0;
    for (const auto& raw : raws) {
      if (auto t = lookup(vocab, raw)) {
        out.push_back(*t);
      } else {
        ++unseen;
      }
    }
    if (unseen > 0) spdlog::info("filtered {} {} triples with unseen names", unseen, name);
    return out;
  };
  std::vector<Triple> valid = map_split(raw_valid, "valid");
  std::vector<Triple> test = map_split(raw_test, "test");
  // With a fixed vocabulary the files may legitimately reference entities no
  // longer present in train (e.g. after a deletion), so skip the train-seen
  // filter there.
  auto kg = KnowledgeGraph::build(std::move(vocab), std::move(train), std::move(valid),
                                  std::move(test), /*filter_unseen=*/!fixed_vocab);
  spdlog::info("loaded graph: {} entities, {} relations, {}/{}/{} train/valid/test",
               kg.num_entities(), kg.num_relations(), kg.train().size(), kg.valid().size(),
               kg.test().size());
  return kg;
}

}  // namespace

KnowledgeGraph load_dataset(const std::filesystem::path& train_path,
                            const std::filesystem::path& valid_path,
                            const std::filesystem::path& test_path) {
  auto raw_train = read_triples(train_path);
  if (raw_train.empty()) throw DataError("empty train file: " + train_path.string());
  return assemble(Vocabulary{}, false, raw_train, read_triples(valid_path),
                  read_triples(test_path));
}

KnowledgeGraph load_dataset_dir(const std::filesystem::path& dir) {
  const auto entities = dir / "entities.txt";
  const auto relations = dir / "relations.txt";
  if (!std::filesystem::exists(entities) || !std::filesystem::exists(relations)) {
    return load_dataset(dir / "train.txt", dir / "valid.txt", dir / "test.txt");
  }
  auto raw_train = read_triples(dir / "train.txt");
  if (raw_train.empty()) throw DataError("empty train file in " + dir.string());
  Vocabulary vocab(read_names(entities), read_names(relations));
  return assemble(std::move(vocab), true, raw_train, read_triples(dir / "valid.txt"),
                  read_triples(dir / "test.txt"));
}

void write_dataset(const KnowledgeGraph& kg, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create " + dir.string() + ": " + ec.message());
  const Vocabulary& vocab = kg.vocab();
  auto write_split = [&](const std::vector<Triple>& triples, const char* name) {
    std::ofstream out(dir / name, std::ios::trunc);
    if (!out) throw DataError("cannot write " + (dir / name).string());
    for (const Triple& t : triples) {
      out << vocab.entity_name(t.s) << '\t' << vocab.relation_name(t.r) << '\t'
          << vocab.entity_name(t.o) << '\n';
    }
    if (!out) throw DataError("write failed: " + (dir / name).string());
  };
  write_split(kg.train(), "train.txt");
  write_split(kg.valid(), "valid.txt");
  write_split(kg.test(), "test.txt");
  auto write_names = [&](const std::vector<std::string>& names, const char* name) {
    std::ofstream out(dir / name, std::ios::trunc);
    for (const auto& n : names) out << n << '\n';
    if (!out) throw DataError("write failed: " + (dir / name).string());
  };
  write_names(vocab.entities(), "entities.txt");
  write_names(vocab.relations(), "relations.txt");
}

std::vector<std::uint32_t> neighbourhood(const KnowledgeGraph& kg, const Triple& target) {
  const auto ne = static_cast<EntityId>(kg.num_entities());
  if (target.s < 0 || target.s >= ne || target.o < 0 || target.o >= ne) {
    throw DataError("neighbourhood: unknown entity in target");
  }
  auto a = kg.touching(target.s);
  if (target.s == target.o) return {a.begin(), a.end()};
  auto b = kg.touching(target.o);
  std::vector<std::uint32_t> out;
  out.reserve(a.size() + b.size());
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

bool shares_entity(const Triple& a, const Triple& b) {
  return a.s == b.s || a.s == b.o || a.o == b.s || a.o == b.o;
}

KnowledgeGraph apply_perturbations(const KnowledgeGraph& kg,
                                   std::span<const Perturbation> perturbations) {
  TripleSet deletes, adds;
  std::vector<Triple> add_order;
  for (const Perturbation& p : perturbations) {
    if (!kg.valid_ids(p.triple)) throw DataError("perturbation triple id out of range");
    if (p.kind == PerturbationKind::kDelete) {
      if (!kg.in_train(p.triple)) {
        throw DataError("delete of a triple not in train: " + format_triple(kg.vocab(), p.triple));
      }
      deletes.insert(p.triple);
    } else {
      if (kg.is_known(p.triple)) {
        throw DataError("add of an existing triple: " + format_triple(kg.vocab(), p.triple));
      }
      if (adds.insert(p.triple).second) add_order.push_back(p.triple);
    }
  }
  for (const Triple& t : adds) {
    if (deletes.contains(t)) {
      throw DataError("triple is both deleted and added: " + format_triple(kg.vocab(), t));
    }
  }
  std::vector<Triple> train;
  train.reserve(kg.train().size() + add_order.size());
  for (const Triple& t : kg.train()) {
    if (!deletes.contains(t)) train.push_back(t);
  }
  train.insert(train.end(), add_order.begin(), add_order.end());
  return KnowledgeGraph::build(kg.vocab(), std::move(train), kg.valid(), kg.test(),
                               /*filter_unseen=*/false);
}

SummaryStats summarize(std::vector<double> values) {
  SummaryStats st;
  st.count = values.size();
  if (values.empty()) return st;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  st.median = n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
  double sum = 0.0;
  for (double v : values) sum += v;
  st.mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (double v : values) ss += (v - st.mean) * (v - st.mean);
  st.stddev = std::sqrt(ss / static_cast<double>(n));
  return st;
}

SummaryStats neighbourhood_stats(const KnowledgeGraph& kg, std::span<const Triple> targets) {
  if (targets.empty()) throw DataError("neighbourhood_stats: no targets");
  std::vector<double> sizes;
  sizes.reserve(targets.size());
  for (const Triple& z : targets) sizes.push_back(static_cast<double>(neighbourhood(kg, z).size()));
  return summarize(std::move(sizes));
}

std::string stats_csv(const SummaryStats& stats) {
  std::ostringstream out;
  out.precision(17);
  out << "metric,value\n"
      << "count," << stats.count << '\n'
      << "median," << stats.median << '\n'
      << "mean," << stats.mean << '\n'
      << "stddev," << stats.stddev << '\n';
  return out.str();
}

std::string format_triple(const Vocabulary& vocab, const Triple& t) {
  auto ent = [&](EntityId e) {
    return e >= 0 && static_cast<std::size_t>(e) < vocab.num_entities() ? vocab.entity_name(e)
                                                                         : "#" + std::to_string(e);
  };
  auto rel = t.r >= 0 && static_cast<std::size_t>(t.r) < vocab.num_relations()
                 ? vocab.relation_name(t.r)
                 : "#" + std::to_string(t.r);
  return "(" + ent(t.s) + ", " + rel + ", " + ent(t.o) + ")";
}

}  // namespace kgp
