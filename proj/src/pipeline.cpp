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

#include "kgpoison/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>

#include <spdlog/spdlog.h>

namespace kgp {

namespace fs = std::filesystem;

void ExperimentManifest::validate() const {
  if (dataset.empty()) throw ConfigError("manifest: dataset path is required");
  if (out.empty()) throw ConfigError("manifest: output directory is required");
  if (metrics.empty()) throw ConfigError("manifest: at least one metric is required");
  if (targets < 1) throw ConfigError("manifest: target count must be >= 1");
  train.validate();
  for (const auto& m : metrics) {
    const AttackSpec spec = parse_attack_metric(m, mode, 0);
    if (spec.method == AttackMethod::kAttribution && spec.metric == AttributionMetric::kInfluence &&
        !influence) {
      throw ConfigError("metric 'if' requires an influence config");
    }
  }
  if (influence) influence->validate();
}

TrainConfig ExperimentManifest::effective_train_config() const {
  TrainConfig c = train;
  c.seed = train_seed();
  return c;
}

nlohmann::json to_json(const ExperimentManifest& m) {
  nlohmann::json j = {
      {"dataset", m.dataset},
      {"train", to_json(m.train)},
      {"metrics", m.metrics},
      {"mode", to_string(m.mode)},
      {"tune_damping", m.tune_damping},
      {"targets", m.targets},
      {"seed", m.seed},
      {"out", m.out},
      {"filter_poisoned_train", m.filter_poisoned_train},
      {"gradient_regularizer", m.gradient_regularizer},
  };
  if (m.influence) j["influence"] = to_json(*m.influence);
  return j;
}

ExperimentManifest manifest_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("manifest must be a JSON object");
  ExperimentManifest m;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "dataset") {
        m.dataset = value.get<std::string>();
      } else if (key == "train") {
        nlohmann::json overrides = value;
        TrainConfig base;
        if (overrides.is_object() && overrides.contains("preset")) {
          base = load_preset(overrides["preset"].get<std::string>());
          overrides.erase("preset");
        }
        m.train = train_config_from_json(overrides, base);
      } else if (key == "metrics") {
        m.metrics = value.get<std::vector<std::string>>();
      } else if (key == "mode") {
        m.mode = parse_mode(value.get<std::string>());
      } else if (key == "influence") {
        m.influence = if_config_from_json(value);
      } else if (key == "tune_damping") {
        m.tune_damping = value.get<bool>();
      } else if (key == "targets") {
        m.targets = value.get<std::size_t>();
      } else if (key == "seed") {
        m.seed = value.get<std::uint64_t>();
      } else if (key == "out") {
        m.out = value.get<std::string>();
      } else if (key == "filter_poisoned_train") {
        m.filter_poisoned_train = value.get<bool>();
      } else if (key == "gradient_regularizer") {
        m.gradient_regularizer = value.get<bool>();
      } else {
        throw ConfigError("unknown manifest key: " + key);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad manifest value: ") + e.what());
  }
  m.validate();
  return m;
}

ExperimentManifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read manifest " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("cannot parse manifest " + path.string() + ": " + e.what());
  }
  return manifest_from_json(j);
}

std::string manifest_text(const ExperimentManifest& manifest) {
  return to_json(manifest).dump(2) + "\n";
}

std::string manifest_hash(const ExperimentManifest& manifest) {
  return hex64(fnv1a64(manifest_text(manifest)));
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw DataError("cannot create " + path.parent_path().string() + ": " + ec.message());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("write failed: " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_triples(const Vocabulary& vocab, std::span<const Triple> triples, const fs::path& path) {
  std::string text;
  for (const Triple& t : triples) {
    text += vocab.entity_name(t.s) + '\t' + vocab.relation_name(t.r) + '\t' +
            vocab.entity_name(t.o) + '\n';
  }
  write_text(path, text);
}

std::vector<Triple> read_triples(const Vocabulary& vocab, const fs::path& path) {
  std::istringstream in(read_text(path));
  std::vector<Triple> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t start = 0;
    for (std::size_t tab; (tab = line.find('\t', start)) != std::string::npos; start = tab + 1) {
      f.push_back(line.substr(start, tab - start));
    }
    f.push_back(line.substr(start));
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (f.size() != 3) throw DataError(where + ": expected 3 tab-separated fields");
    const EntityId s = vocab.find_entity(f[0]);
    const RelationId r = vocab.find_relation(f[1]);
    const EntityId o = vocab.find_entity(f[2]);
    if (s < 0 || r < 0 || o < 0) throw DataError(where + ": unknown entity or relation");
    out.push_back({s, r, o});
  }
  return out;
}

Checkpoint cmd_train(const KnowledgeGraph& kg, const TrainConfig& config, const fs::path& dir,
                     const std::string& name) {
  TrainResult result = train(kg, config);
  save_checkpoint(result.checkpoint, dir / (name + ".ckpt"));
  write_text(dir / (name + "_epochs.csv"), epoch_log_csv(result.log));
  write_text(dir / (name + "_config.json"), to_json(config).dump(2) + "\n");
  std::string eval = report_csv_header();
  std::vector<std::pair<std::string, EvalReport>> rows;
  for (const auto& [split, triples] : {std::pair{"valid", &kg.valid()}, {"test", &kg.test()}}) {
    if (triples->empty()) continue;
    EvalReport report = evaluate(result.checkpoint.model, kg, *triples);
    eval += report_csv_row(split, report);
    rows.emplace_back(split, std::move(report));
  }
  write_text(dir / (name + "_eval.csv"), eval);
  for (const auto& [split, report] : rows) {
    spdlog::info("{} {} mrr {:.4f} h1 {:.4f} h10 {:.4f}", name, split, report.mrr, report.hits1,
                 report.hits10);
  }
  spdlog::info("{} checkpoint hash {}", name, checkpoint_hash(result.checkpoint));
  return std::move(result.checkpoint);
}

namespace {

std::string timing_csv(const Vocabulary& vocab, const AttackResult& result) {
  std::ostringstream out;
  out << "metric,target_s,target_r,target_o,selection_seconds\n";
  char secs[64];
  for (const auto& rec : result.records) {
    const Triple& t = rec.perturbation.target;
    std::snprintf(secs, sizeof(secs), "%.6f", rec.selection_seconds);
    out << result.spec.metric_name() << ',' << csv_field(vocab.entity_name(t.s)) << ','
        << csv_field(vocab.relation_name(t.r)) << ',' << csv_field(vocab.entity_name(t.o)) << ','
        << secs << '\n';
  }
  return out.str();
}

}  // namespace

AttackStageOutput cmd_attack(const EmbeddingModel& model, const KnowledgeGraph& kg,
                             std::optional<std::vector<Triple>> targets, std::size_t n_targets,
                             std::uint64_t targets_seed, const AttackSpec& spec,
                             const AttackOptions& options, const fs::path& dir) {
  if (model.num_entities() != kg.num_entities() || model.num_relations() != kg.num_relations()) {
    throw DataError("checkpoint does not match the dataset vocabulary");
  }
  AttackStageOutput out{targets ? std::move(*targets)
                                : select_targets(model, kg, n_targets, targets_seed),
                        {}, kg};
  spdlog::info("attack {} ({}) on {} targets", spec.metric_name(), to_string(spec.mode),
               out.targets.size());
  out.result = run_attack(model, kg, out.targets, spec, options);
  const Vocabulary& vocab = kg.vocab();
  write_triples(vocab, out.targets, dir / "targets.txt");
  write_text(dir / "perturbations.csv", perturbation_csv(vocab, out.result));
  write_text(dir / "skips.csv", skip_csv(vocab, out.result));
  write_text(dir / "relations.csv", relation_report_csv(vocab, out.result));
  write_text(dir / "timing.csv", timing_csv(vocab, out.result));
  nlohmann::json meta = {
      {"metric", spec.metric_name()},
      {"mode", to_string(spec.mode)},
      {"seed", spec.seed},
      {"reg_weight", options.attribution.reg.weight},
      {"gradient_regularizer", options.attribution.include_regularizer},
      {"targets", out.targets.size()},
      {"attacked", out.result.records.size()},
      {"skipped", out.result.skips.size()},
  };
  if (spec.method == AttackMethod::kAttribution && spec.metric == AttributionMetric::kInfluence) {
    meta["influence"] = to_json(options.influence);
    meta["tune_damping"] = options.tune_damping;
  }
  write_text(dir / "attack.json", meta.dump(2) + "\n");
  const auto perturbations = out.result.unique_perturbations();
  out.poisoned = apply_perturbations(kg, perturbations);
  write_dataset(out.poisoned, dir / "dataset");
  return out;
}

double pct_change(double original, double poisoned) {
  if (original == 0.0) throw DataError("percentage change relative to a zero original value");
  return (poisoned - original) / original * 100.0;
}

double ReportRow::pct_change() const { return kgp::pct_change(original.mrr, poisoned.mrr); }

ReportRow cmd_report(const std::string& metric, const EmbeddingModel& victim,
                     const EmbeddingModel& poisoned, const KnowledgeGraph& original,
                     const KnowledgeGraph& poisoned_kg, std::span<const Triple> targets,
                     bool filter_poisoned_train) {
  if (targets.empty()) throw DataError("report: empty target list");
  if (!(original.vocab() == poisoned_kg.vocab())) {
    throw DataError("report: poisoned dataset vocabulary differs from the original");
  }
  for (const EmbeddingModel* m : {&victim, &poisoned}) {
    if (m->num_entities() != original.num_entities() ||
        m->num_relations() != original.num_relations()) {
      throw DataError("report: checkpoint does not match the dataset vocabulary");
    }
  }
  for (const Triple& t : targets) {
    if (!original.valid_ids(t) || original.in_train(t) || !original.is_known(t)) {
      throw DataError("report: target " + format_triple(original.vocab(), t) +
                      " is not an evaluation triple of the original dataset");
    }
  }
  FilterIndex base = FilterIndex::from_graph(original);
  FilterIndex extended = base;
  if (filter_poisoned_train) {
    for (const Triple& t : poisoned_kg.train()) extended.insert(t);
  }
  ReportRow row;
  row.metric = metric;
  row.original = evaluate(victim, base, targets);
  row.poisoned = evaluate(poisoned, extended, targets);
  return row;
}

namespace {

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

}  // namespace

std::string results_csv(std::span<const ReportRow> rows) {
  std::string out = "metric,mrr_original,mrr_poisoned,h1_original,h1_poisoned,pct_change\n";
  for (const auto& r : rows) {
    out += csv_field(r.metric) + ',' + fmt("%.4f", r.original.mrr) + ',' +
           fmt("%.4f", r.poisoned.mrr) + ',' + fmt("%.4f", r.original.hits1) + ',' +
           fmt("%.4f", r.poisoned.hits1) + ',' + fmt("%.2f", r.pct_change()) + '\n';
  }
  return out;
}

std::string results_table(std::span<const ReportRow> rows) {
  const std::vector<std::string> header = {"metric",      "mrr_original", "mrr_poisoned",
                                           "h1_original", "h1_poisoned",  "pct_change"};
  std::vector<std::vector<std::string>> cells;
  for (const auto& r : rows) {
    cells.push_back({r.metric, fmt("%.4f", r.original.mrr), fmt("%.4f", r.poisoned.mrr),
                     fmt("%.4f", r.original.hits1), fmt("%.4f", r.poisoned.hits1),
                     fmt("%+.2f%%", r.pct_change())});
  }
  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) {
    width[c] = header[c].size();
    for (const auto& row : cells) width[c] = std::max(width[c], row[c].size());
  }
  auto line = [&](const std::vector<std::string>& row) {
    std::string s;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c > 0) s += "  ";
      // Metric names left-aligned, numbers right-aligned.
      const std::string pad(width[c] - row[c].size(), ' ');
      s += c == 0 ? row[c] + pad : pad + row[c];
    }
    while (!s.empty() && s.back() == ' ') s.pop_back();
    return s + '\n';
  };
  std::string out = line(header);
  for (const auto& row : cells) out += line(row);
  return out;
}

namespace {

class StageMarkers {
 public:
  explicit StageMarkers(fs::path dir) : dir_(std::move(dir)) {}

  bool done(const std::string& stage) const { return fs::exists(dir_ / (stage + ".done")); }
  void mark(const std::string& stage, const std::string& note) const {
    write_text(dir_ / (stage + ".done"), note + "\n");
  }

 private:
  fs::path dir_;
};

std::string metric_dir_name(const std::string& metric) { return "attack_" + metric; }

}  // namespace

std::vector<ReportRow> cmd_pipeline(const ExperimentManifest& manifest) {
  manifest.validate();
  const fs::path out(manifest.out);
  const std::string text = manifest_text(manifest);
  const std::string hash = manifest_hash(manifest);
  if (fs::exists(out / "manifest.json")) {
    if (read_text(out / "manifest.json") != text) {
      throw ConfigError("run directory " + out.string() + " belongs to a different manifest");
    }
    spdlog::info("resuming run in {}", out.string());
  }
  write_text(out / "manifest.json", text);
  write_text(out / "manifest.hash", hash + "\n");
  spdlog::info("manifest hash {}; seeds train={} targets={} attack={}", hash,
               manifest.train_seed(), manifest.targets_seed(), manifest.attack_seed());

  const StageMarkers stages(out / "stages");
  const KnowledgeGraph kg = load_dataset_dir(manifest.dataset);
  const TrainConfig config = manifest.effective_train_config();

  Checkpoint victim;
  if (stages.done("victim")) {
    victim = load_checkpoint(out / "victim.ckpt");
    check_compatible(victim, kg);
  } else {
    victim = cmd_train(kg, config, out, "victim");
    stages.mark("victim", checkpoint_hash(victim));
  }

  std::vector<Triple> targets;
  if (stages.done("targets")) {
    targets = read_triples(kg.vocab(), out / "targets.txt");
  } else {
    targets = select_targets(victim.model, kg, manifest.targets, manifest.targets_seed());
    write_triples(kg.vocab(), targets, out / "targets.txt");
    stages.mark("targets", std::to_string(targets.size()) + " targets");
  }
  write_text(out / "neighbourhood_stats.csv", cmd_stats(kg, targets));

  AttackOptions options;
  options.attribution.reg = config.reg();
  options.attribution.include_regularizer = manifest.gradient_regularizer;
  if (manifest.influence) options.influence = *manifest.influence;
  options.tune_damping = manifest.tune_damping;

  std::vector<ReportRow> rows;
  std::string timing = "metric,targets,attacked,skipped,total_seconds,mean_seconds\n";
  std::string relations = "metric,target_s,target_r,target_o,target_relation,influential_relation\n";
  for (const auto& metric : manifest.metrics) {
    const fs::path dir = out / metric_dir_name(metric);
    const std::string attack_stage = "attack_" + metric;
    const std::string poison_stage = "poisoned_" + metric;
    const AttackSpec spec = parse_attack_metric(metric, manifest.mode, manifest.attack_seed());

    if (!stages.done(attack_stage)) {
      options.lissa_log = nullptr;
      std::ofstream lissa_log;
      if (spec.method == AttackMethod::kAttribution &&
          spec.metric == AttributionMetric::kInfluence) {
        fs::create_directories(dir);
        lissa_log.open(dir / "lissa.csv", std::ios::trunc);
        lissa_log << "target_id,repeat,depth,iterate_norm\n";
        options.lissa_log = [&lissa_log](std::size_t id, const IterateRecord& rec) {
          lissa_log << id << ',' << rec.repeat << ',' << rec.depth << ',' << fmt("%.17g", rec.norm)
                    << '\n';
        };
      }
      cmd_attack(victim.model, kg, targets, targets.size(), manifest.targets_seed(), spec, options,
                 dir);
      stages.mark(attack_stage, metric);
    }
    const KnowledgeGraph poisoned_kg = load_dataset_dir(dir / "dataset");

    Checkpoint poisoned;
    if (stages.done(poison_stage)) {
      poisoned = load_checkpoint(dir / "poisoned.ckpt");
      check_compatible(poisoned, poisoned_kg);
    } else {
      poisoned = cmd_train(poisoned_kg, config, dir, "poisoned");
      stages.mark(poison_stage, checkpoint_hash(poisoned));
    }
    if (read_text(out / "victim_config.json") != read_text(dir / "poisoned_config.json")) {
      throw DataError("victim and poisoned training configs differ for " + metric);
    }

    // Skipped targets are excluded from both sides of the comparison.
    std::vector<Triple> evaluated;
    for (const auto& p : parse_perturbation_csv(kg.vocab(), read_text(dir / "perturbations.csv"))) {
      if (evaluated.empty() || !(evaluated.back() == p.target)) evaluated.push_back(p.target);
    }
    write_triples(kg.vocab(), evaluated, dir / "evaluated_targets.txt");
    ReportRow row = cmd_report(metric, victim.model, poisoned.model, kg, poisoned_kg, evaluated,
                               manifest.filter_poisoned_train);
    write_text(dir / "eval.csv", report_csv_header() + report_csv_row("original", row.original) +
                                     report_csv_row("poisoned", row.poisoned));
    rows.push_back(std::move(row));

    // Run-level summaries, rebuilt from the per-metric files.
    std::istringstream t(read_text(dir / "timing.csv"));
    std::string line;
    std::getline(t, line);
    double total = 0.0;
    std::size_t attacked = 0;
    while (std::getline(t, line)) {
      if (line.empty()) continue;
      total += std::stod(parse_csv_line(line).back());
      ++attacked;
    }
    const std::size_t skipped = targets.size() - attacked;
    timing += csv_field(metric) + ',' + std::to_string(targets.size()) + ',' +
              std::to_string(attacked) + ',' + std::to_string(skipped) + ',' +
              fmt("%.6f", total) + ',' +
              fmt("%.6f", attacked > 0 ? total / static_cast<double>(attacked) : 0.0) + '\n';
    std::istringstream rel(read_text(dir / "relations.csv"));
    std::getline(rel, line);
    while (std::getline(rel, line)) {
      if (!line.empty()) relations += csv_field(metric) + ',' + line + '\n';
    }
  }
  write_text(out / "timing.csv", timing);
  write_text(out / "relations.csv", relations);
  write_text(out / "results.csv", results_csv(rows));
  write_text(out / "results.txt", results_table(rows));
  stages.mark("report", std::to_string(rows.size()) + " rows");
  return rows;
}

std::string cmd_stats(const KnowledgeGraph& kg, std::span<const Triple> targets) {
  return stats_csv(neighbourhood_stats(kg, targets));
}

}  // namespace kgp
