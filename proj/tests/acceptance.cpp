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

// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <Eigen/Eigenvalues>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>

#include "kgpoison/attribution.hpp"
#include "kgpoison/evaluator.hpp"
#include "kgpoison/influence.hpp"
#include "kgpoison/pipeline.hpp"
#include "kgpoison/synth.hpp"
#include "kgpoison/trainer.hpp"
#include "test_util.hpp"

namespace kgp {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, a);
  return buf;
}

constexpr ModelKind kAllKinds[] = {ModelKind::kDistMult, ModelKind::kComplEx, ModelKind::kTransE};

// 1. Analytic gradients vs central differences.
Outcome gradient_correctness() {
  constexpr double kTol = 1e-4;
  double worst = 0.0;
  for (auto kind : kAllKinds) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const int ne = 4 + static_cast<int>(seed % 7);  // 4..10
      const int k = 1 + static_cast<int>(seed % 8);   // 1..8
      auto m = testing::random_model(kind, ne, 3, k, seed, 0.5);
      const Triple t{static_cast<EntityId>(seed % ne), static_cast<RelationId>(seed % 3),
                     static_cast<EntityId>((seed + 1) % ne)};
      const RegConfig reg{0.05};
      const Vector analytic = testing::flatten(loss_gradient(m, t, reg));
      const Vector numeric = testing::fd_gradient(m, {t}, reg, 1e-5);
      for (Eigen::Index i = 0; i < analytic.size(); ++i) {
        const double scale = std::max(1e-3, std::max(std::abs(analytic[i]), std::abs(numeric[i])));
        worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / scale);
      }
    }
  }
  return {worst < kTol, "max relative error " + fmt("%.2e", worst) + " < 1e-4"};
}

// 2. Filtered ranks vs a quadratic brute-force oracle.
Outcome ranking_oracle() {
  std::size_t checked = 0, mismatches = 0;
  for (std::uint64_t g = 0; g < 50; ++g) {
    const int ne = 5 + static_cast<int>(g % 46);  // 5..50
    auto kg = testing::random_graph(ne, 1 + static_cast<int>(g % 4), 3 * ne, ne, 1000 + g);
    const ModelKind kind = kAllKinds[g % 3];
    // Every third graph uses integer-valued embeddings so exact ties occur.
    auto m = testing::random_model(kind, ne, static_cast<int>(kg.num_relations()), 4, g);
    if (g % 3 == 0) {
      m.entity = (m.entity * 20.0).array().round();
      m.relation = (m.relation * 20.0).array().round();
    }
    for (const auto& t : kg.test()) {
      const auto got = filtered_ranks(m, kg, t);
      const auto [rs, ro] = testing::brute_force_ranks(m, kg, t);
      ++checked;
      if (got.subject_rank != rs || got.object_rank != ro) ++mismatches;
    }
  }
  return {mismatches == 0 && checked > 0,
          std::to_string(mismatches) + " mismatches over " + std::to_string(checked) +
              " test triples on 50 graphs"};
}

// 3. HVP vs explicit Hessian, LiSSA vs dense solve, quadratic fixed point.
Outcome hvp_lissa() {
  double hvp_err = 0.0;
  for (auto kind : kAllKinds) {
    auto kg = testing::random_graph(6, 2, 12, 2, 7);
    auto m = testing::random_model(kind, 6, 2, 2, 7, 0.5);
    const RegConfig reg{0.05};
    const auto H = testing::fd_hessian(m, kg.train(), reg);
    for (std::uint64_t s = 0; s < 3; ++s) {
      std::mt19937_64 gen(s);
      std::normal_distribution<double> n01;
      Vector v(H.rows());
      for (auto& x : v) x = n01(gen);
      const auto hv = hvp(m, kg.train(), testing::from_flat(v, m), 1e-3, reg);
      hvp_err = std::max(hvp_err, testing::rel_err(testing::flatten(hv), H * v));
    }
  }

  // Tiny DistMult: LiSSA over the full-batch Hessian vs (H + λI)⁻¹ g.
  auto kg = testing::random_graph(6, 2, 12, 2, 3);
  auto m = testing::random_model(ModelKind::kDistMult, 6, 2, 2, 3, 0.5);
  const RegConfig reg{0.05};
  const auto H = testing::fd_hessian(m, kg.train(), reg);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(H);
  IFConfig c;
  c.damping = std::max(0.0, -eig.eigenvalues().minCoeff()) + 0.1;
  c.scale = eig.eigenvalues().maxCoeff() + c.damping;
  c.depth = 2000;
  const auto g = loss_gradient(m, kg.test()[0], reg);
  const Vector exact = (H + c.damping * Eigen::MatrixXd::Identity(H.rows(), H.cols()))
                           .ldlt()
                           .solve(testing::flatten(g));
  auto full_hvp = [&](const GradientVector& v, int, int) { return hvp(m, kg.train(), v, 1e-3, reg); };
  const double lissa_err = testing::rel_err(testing::flatten(lissa(g, full_hvp, c)), exact);

  // Quadratic surrogate: H = 2I, σ = 4, so r* = 2v and the estimate is v/2.
  Eigen::VectorXd v(2);
  v << 1.0, 0.0;
  IFConfig q;
  q.damping = 0.0;
  q.scale = 4.0;
  q.depth = 100;
  auto quad = [](const Eigen::VectorXd& x, int, int) -> Eigen::VectorXd { return 2.0 * x; };
  const double quad_err = (lissa(v, quad, q) - 0.5 * v).cwiseAbs().maxCoeff();

  return {hvp_err < 1e-3 && lissa_err < 0.05 && quad_err < 1e-10,
          "hvp " + fmt("%.2e", hvp_err) + " < 1e-3, lissa " + fmt("%.2e", lissa_err) +
              " < 5e-2, quadratic " + fmt("%.1e", quad_err) + " < 1e-10"};
}

// 4. φ_IF vs leave-one-out retraining on a synthetic graph. The base model is
// trained full-batch to a stationary point; each leave-one-out model continues
// from it with the same config and seed until it is stationary again.
Outcome if_faithfulness() {
  SynthConfig sc;
  sc.num_entities = 40;
  sc.num_train = 200;
  sc.seed = 1;
  const auto kg = generate_synthetic(sc);
  TrainConfig tc;
  tc.model = ModelKind::kDistMult;
  tc.k = 8;
  tc.epochs = 2000;
  tc.batch_size = static_cast<int>(kg.train().size());
  tc.learning_rate = 0.1;
  tc.reg_weight = 0.1;
  tc.seed = 1;
  tc.valid_eval_every = 0;
  Checkpoint base = train(kg, tc).checkpoint;
  const RegConfig reg = tc.reg();

  Triple z{};
  std::size_t widest = 0;
  for (const auto& t : kg.test()) {
    const auto n = neighbourhood(kg, t).size();
    if (n > widest) widest = n, z = t;
  }
  auto candidates = neighbourhood(kg, z);
  if (candidates.size() < 20) return {false, "no target with 20 neighbourhood candidates"};
  candidates.resize(20);

  IFConfig ic;
  ic.damping = 0.01;
  ic.scale = 0.5;
  ic.depth = 1000;
  ic.batch_size = static_cast<int>(kg.train().size());
  ic.repeats = 2;
  const auto ihvp = inverse_hvp_lissa(base.model, kg, z, loss_gradient(base.model, z, reg), ic, reg, 5);

  std::vector<double> phi, drop;
  base.optimizer.reset();
  for (auto i : candidates) {
    const Triple x = kg.train()[i];
    phi.push_back(if_score(base.model, x, ihvp, reg));
    const auto loo = apply_perturbations(kg, std::vector<Perturbation>{{PerturbationKind::kDelete, x, z}});
    TrainConfig lc = tc;
    lc.batch_size = static_cast<int>(loo.train().size());
    const auto retrained = resume(base, loo, lc, 1000).checkpoint.model;
    drop.push_back(score(base.model, z) - score(retrained, z));
  }
  const double rho = testing::spearman(phi, drop);
  return {rho >= 0.5, "Spearman " + fmt("%.3f", rho) + " >= 0.5 over 20 candidates (" +
                          std::to_string(kg.train().size()) + " train triples)"};
}

ExperimentManifest synthetic_manifest(const fs::path& data, const fs::path& out,
                                      PerturbationKind mode, std::uint64_t seed) {
  ExperimentManifest m;
  m.dataset = data.string();
  m.out = out.string();
  m.train = load_preset("synth-distmult");
  m.metrics = {"cos", "random_n"};
  m.mode = mode;
  m.targets = 100;
  m.seed = seed;
  return m;
}

fs::path synthetic_dataset(const std::string& name) {
  const auto dir = testing::temp_dir(name);
  SynthConfig c;
  c.num_entities = 80;
  c.seed = 1;
  write_dataset(generate_synthetic(c), dir);
  return dir;
}

// 5. cos attacks vs Random_n over 5 seeds.
Outcome attack_beats_random() {
  const auto data = synthetic_dataset("acc_attack_data");
  std::string detail;
  bool pass = true;
  for (auto mode : {PerturbationKind::kDelete, PerturbationKind::kAdd}) {
    double cos = 0.0, rnd = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto out = testing::temp_dir("acc_attack_" + std::string(to_string(mode)) + std::to_string(seed));
      for (const auto& row : cmd_pipeline(synthetic_manifest(data, out, mode, seed))) {
        (row.metric == "cos" ? cos : rnd) += row.poisoned.mrr / 5.0;
      }
    }
    const bool ok = mode == PerturbationKind::kDelete ? cos < rnd : cos <= rnd;
    pass = pass && ok;
    detail += std::string(to_string(mode)) + ": cos " + fmt("%.4f", cos) +
              (mode == PerturbationKind::kDelete ? " < " : " <= ") + "random_n " +
              fmt("%.4f", rnd) + "; ";
  }
  detail.resize(detail.size() - 2);
  return {pass, "mean poisoned target MRR, " + detail};
}

// 6. Structured gradient inner products vs dense materialization.
Outcome structured_fidelity() {
  double worst = 0.0;
  for (auto kind : kAllKinds) {
    for (int ne : {5, 12, 20}) {
      auto kg = testing::random_graph(ne, 3, 3 * ne, ne, static_cast<std::uint64_t>(ne));
      auto m = testing::random_model(kind, ne, 3, 4, static_cast<std::uint64_t>(ne), 0.5);
      AttributionOptions opt;
      opt.reg = {0.01};
      for (const auto& z : kg.test()) {
        const auto gz = loss_gradient(m, z, opt.reg);
        const Vector fz = testing::flatten(gz);
        for (auto i : neighbourhood(kg, z)) {
          const auto& x = kg.train()[i];
          const double structured = gradient_similarity(m, z, x, Similarity::kDot, opt);
          const double dense = fz.dot(testing::flatten(loss_gradient(m, x, opt.reg)));
          worst = std::max(worst, std::abs(structured - dense) / std::max(1e-12, std::abs(dense)));
        }
      }
    }
  }
  return {worst < 1e-8, "max relative error " + fmt("%.2e", worst) + " < 1e-8"};
}

// 7. Two runs of the same manifest give byte-identical result tables.
Outcome determinism() {
  const auto data = synthetic_dataset("acc_det_data");
  const auto out = testing::temp_dir("acc_det_run");
  auto m = synthetic_manifest(data, out, PerturbationKind::kDelete, 3);
  m.metrics = {"cos", "random_n", "random_g"};
  cmd_pipeline(m);
  const auto csv = read_text(out / "results.csv");
  const auto table = read_text(out / "results.txt");
  fs::remove_all(out);
  cmd_pipeline(m);
  const bool same = csv == read_text(out / "results.csv") && table == read_text(out / "results.txt");
  return {same, same ? "results.csv and results.txt identical across runs"
                     : "result tables differ between runs"};
}

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;
  std::function<Outcome()> run;
};

}  // namespace
}  // namespace kgp

int main() {
  using namespace kgp;
  spdlog::set_level(spdlog::level::warn);
  const Criterion criteria[] = {
      {1, "gradient correctness", 10, gradient_correctness},
      {2, "ranking oracle", 30, ranking_oracle},
      {3, "HVP/LiSSA correctness", 60, hvp_lissa},
      {4, "IF faithfulness", 600, if_faithfulness},
      {5, "attack beats random", 1200, attack_beats_random},
      {6, "structured-gradient fidelity", 60, structured_fidelity},
      {7, "determinism", 600, determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool pass = o.pass && secs < c.budget_seconds;
    failed += pass ? 0 : 1;
    std::printf("%s criterion %d (%s): %s; %.1f s < %.0f s\n", pass ? "PASS" : "FAIL", c.id, c.name,
                o.detail.c_str(), secs, c.budget_seconds);
    std::fflush(stdout);
  }
  return failed;
}
