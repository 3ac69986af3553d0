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

#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sys/wait.h>

#include "kgpoison/pipeline.hpp"
#include "kgpoison/synth.hpp"
#include "test_util.hpp"

namespace kgp {
namespace {

namespace fs = std::filesystem;

fs::path synthetic_dataset(const std::string& name, std::uint64_t seed = 1) {
  const auto dir = testing::temp_dir(name);
  SynthConfig c;
  c.num_entities = 80;
  c.seed = seed;
  write_dataset(generate_synthetic(c), dir);
  return dir;
}

ExperimentManifest small_manifest(const fs::path& dataset, const fs::path& out) {
  ExperimentManifest m;
  m.dataset = dataset.string();
  m.out = out.string();
  m.train = load_preset("synth-distmult");
  m.train.epochs = 60;
  m.metrics = {"cos", "random_n", "random_g"};
  m.targets = 10;
  m.seed = 4;
  return m;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(KGPOISON_CLI) + " -q " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(PctChange, Examples) {
  EXPECT_DOUBLE_EQ(pct_change(1.0, 0.25), -75.0);
  EXPECT_NEAR(pct_change(1.0, 0.87), -13.0, 1e-12);
  EXPECT_DOUBLE_EQ(pct_change(0.5, 0.5), 0.0);
  EXPECT_THROW(pct_change(0.0, 0.5), DataError);
}

TEST(Manifest, ValidationAndRoundTrip) {
  ExperimentManifest m;
  m.dataset = "d";
  m.out = "o";
  m.metrics = {"cos", "if"};
  EXPECT_THROW(m.validate(), ConfigError);
  m.influence = IFConfig{};
  EXPECT_NO_THROW(m.validate());
  const auto back = manifest_from_json(to_json(m));
  EXPECT_EQ(manifest_text(back), manifest_text(m));
  EXPECT_EQ(manifest_hash(back), manifest_hash(m));
  EXPECT_THROW(manifest_from_json(nlohmann::json{{"bogus", 1}}), ConfigError);
  m.gradient_regularizer = false;
  EXPECT_FALSE(manifest_from_json(to_json(m)).gradient_regularizer);
  EXPECT_NE(manifest_hash(manifest_from_json(to_json(m))), manifest_hash(back));
  m.metrics = {"nope"};
  EXPECT_THROW(m.validate(), ConfigError);
}

TEST(Manifest, PresetWithOverrides) {
  const auto m = manifest_from_json(
      {{"dataset", "d"}, {"out", "o"}, {"train", {{"preset", "synth-complex"}, {"epochs", 7}}}});
  EXPECT_EQ(m.train.model, ModelKind::kComplEx);
  EXPECT_EQ(m.train.epochs, 7);
  EXPECT_EQ(m.effective_train_config().seed, m.train_seed());
  EXPECT_NE(m.train_seed(), m.attack_seed());
}

TEST(Pipeline, DeterministicAcrossRunDirectories) {
  const auto data = synthetic_dataset("pipe_det");
  const auto a = testing::temp_dir("pipe_det_a"), b = testing::temp_dir("pipe_det_b");
  const auto rows = cmd_pipeline(small_manifest(data, a));
  cmd_pipeline(small_manifest(data, b));
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[2].metric, "random_g");
  EXPECT_EQ(read_text(a / "results.csv"), read_text(b / "results.csv"));
  EXPECT_EQ(read_text(a / "victim.ckpt"), read_text(b / "victim.ckpt"));
  for (const char* m : {"cos", "random_n", "random_g"}) {
    const auto dir = std::string("attack_") + m;
    EXPECT_EQ(read_text(a / dir / "poisoned.ckpt"), read_text(b / dir / "poisoned.ckpt")) << m;
  }
  // Victim and poisoned models share one training config.
  EXPECT_EQ(read_text(a / "victim_config.json"), read_text(a / "attack_cos" / "poisoned_config.json"));
  for (const auto& r : rows) EXPECT_DOUBLE_EQ(r.original.mrr, 1.0);
}

TEST(Pipeline, RerunReusesStagesAndRejectsOtherManifest) {
  const auto data = synthetic_dataset("pipe_rerun");
  const auto out = testing::temp_dir("pipe_rerun_out");
  auto m = small_manifest(data, out);
  m.metrics = {"cos"};
  cmd_pipeline(m);
  const auto results = read_text(out / "results.csv");
  const auto stamp = fs::last_write_time(out / "victim.ckpt");
  EXPECT_TRUE(fs::exists(out / "stages" / "victim.done"));
  cmd_pipeline(m);
  EXPECT_EQ(fs::last_write_time(out / "victim.ckpt"), stamp);
  EXPECT_EQ(read_text(out / "results.csv"), results);
  m.seed = 99;
  EXPECT_THROW(cmd_pipeline(m), ConfigError);
}

TEST(Pipeline, ResultsCoverOnlyAttackedTargets) {
  const auto data = synthetic_dataset("pipe_cover");
  const auto out = testing::temp_dir("pipe_cover_out");
  auto m = small_manifest(data, out);
  m.metrics = {"cos"};
  cmd_pipeline(m);
  const auto kg = load_dataset_dir(data);
  const auto evaluated = read_triples(kg.vocab(), out / "attack_cos" / "evaluated_targets.txt");
  const auto perturbations =
      parse_perturbation_csv(kg.vocab(), read_text(out / "attack_cos" / "perturbations.csv"));
  ASSERT_EQ(evaluated.size(), perturbations.size());
  for (std::size_t i = 0; i < evaluated.size(); ++i) EXPECT_EQ(evaluated[i], perturbations[i].target);
  const auto meta = nlohmann::json::parse(read_text(out / "attack_cos" / "attack.json"));
  EXPECT_EQ(meta["gradient_regularizer"], true);
  EXPECT_EQ(meta["attacked"].get<std::size_t>(), perturbations.size());
  const auto csv = read_text(out / "results.csv");
  EXPECT_EQ(csv.rfind("metric,mrr_original,mrr_poisoned,h1_original,h1_poisoned,pct_change\n", 0),
            0u);
}

TEST(Report, RejectsMismatchedInputs) {
  auto kg = testing::make_graph({{"a", "r", "b"}, {"b", "r", "c"}}, {}, {{"a", "r", "c"}});
  auto m = testing::random_model(ModelKind::kDistMult, 3, 1, 2, 1);
  auto other = testing::random_model(ModelKind::kDistMult, 4, 1, 2, 1);
  EXPECT_NO_THROW(cmd_report("cos", m, m, kg, kg, kg.test()));
  EXPECT_THROW(cmd_report("cos", m, other, kg, kg, kg.test()), DataError);
  // A train triple is not an evaluation target.
  EXPECT_THROW(cmd_report("cos", m, m, kg, kg, kg.train()), DataError);
  const auto row = cmd_report("cos", m, m, kg, kg, kg.test());
  EXPECT_DOUBLE_EQ(row.pct_change(), 0.0);
  std::vector<ReportRow> rows = {row};
  EXPECT_NE(results_table(rows).find("+0.00%"), std::string::npos);
}

TEST(Cli, ExitCodes) {
  const auto data = synthetic_dataset("cli_codes");
  const auto out = testing::temp_dir("cli_codes_out");
  EXPECT_EQ(run_cli(""), 1);
  EXPECT_EQ(run_cli("train --out " + out.string()), 1);
  EXPECT_EQ(run_cli("train --dataset /nonexistent/dir --out " + out.string()), 1);
  EXPECT_EQ(run_cli("pipeline --dataset " + data.string() + " --out " + out.string() +
                    " --metric if --preset synth-distmult"),
            1);
  const auto bad = testing::temp_dir("cli_codes_bad");
  std::ofstream(bad / "train.txt") << "a\tr\n";
  std::ofstream(bad / "valid.txt");
  std::ofstream(bad / "test.txt");
  EXPECT_EQ(run_cli("train --dataset " + bad.string() + " --out " + out.string() +
                    " --preset synth-distmult"),
            2);
  std::ofstream(out / "blowup.json") << R"({"model": "distmult", "k": 4, "epochs": 3,
      "batch_size": 64, "learning_rate": 1e200, "optimizer": "adagrad", "reg_weight": 0.0,
      "valid_eval_every": 0})";
  EXPECT_EQ(run_cli("train --dataset " + data.string() + " --out " + (out / "b").string() +
                    " --config " + (out / "blowup.json").string()),
            3);
  std::ofstream(out / "tiny.json") << R"({"model": "distmult", "k": 4, "epochs": 3, "batch_size": 64,
      "learning_rate": 0.1, "optimizer": "adagrad", "reg_weight": 0.0, "valid_eval_every": 0})";
  EXPECT_EQ(run_cli("train --dataset " + data.string() + " --out " + (out / "m").string() +
                    " --config " + (out / "tiny.json").string()),
            0);
}

TEST(Cli, StagewiseCommandsMatchPipeline) {
  const auto data = synthetic_dataset("cli_stages");
  const auto out = testing::temp_dir("cli_stages_out");
  const std::string d = data.string(), o = out.string();
  ASSERT_EQ(run_cli("train --dataset " + d + " --out " + o + " --name victim --preset synth-distmult"),
            0);
  ASSERT_EQ(run_cli("attack --dataset " + d + " --checkpoint " + o + "/victim.ckpt --out " + o +
                    "/atk --metric cos --targets 5 --seed 2"),
            0);
  ASSERT_EQ(run_cli("train --dataset " + o + "/atk/dataset --out " + o +
                    "/atk --name poisoned --preset synth-distmult"),
            0);
  ASSERT_EQ(run_cli("report --dataset " + d + " --poisoned-dataset " + o + "/atk/dataset --victim " +
                    o + "/victim.ckpt --poisoned " + o + "/atk/poisoned.ckpt --targets-file " + o +
                    "/atk/targets.txt --metric cos --out " + o + "/rep"),
            0);
  EXPECT_NE(read_text(out / "rep" / "results.csv").find("\ncos,"), std::string::npos);
  EXPECT_EQ(run_cli("stats --dataset " + d), 0);
  EXPECT_EQ(run_cli("gen-synth --entities 40 --seed 3 --out " + o + "/gen"), 0);
  EXPECT_TRUE(fs::exists(out / "gen" / "train.txt"));
}

}  // namespace
}  // namespace kgp
