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

#include <cmath>

#include "kgpoison/checkpoint.hpp"
#include "kgpoison/model.hpp"
#include "test_util.hpp"

namespace kgp {
namespace {

using testing::flatten;
using testing::random_model;

constexpr ModelKind kAllKinds[] = {ModelKind::kDistMult, ModelKind::kComplEx, ModelKind::kTransE};

EmbeddingModel tiny(ModelKind kind, int ne, int nr, int k) {
  EmbeddingModel m = init_model(kind, ne, nr, k, 0);
  m.entity.setZero();
  m.relation.setZero();
  return m;
}

TEST(Score, DistMultHandExample) {
  auto m = tiny(ModelKind::kDistMult, 2, 1, 2);
  m.entity.row(0) << 1, 2;
  m.relation.row(0) << -1, 1;
  m.entity.row(1) << 2, 0.5;
  EXPECT_DOUBLE_EQ(score(m, {0, 0, 1}), -1.0);
  Vector f = feature_vector(m, {0, 0, 1});
  EXPECT_DOUBLE_EQ(f[0], -2.0);
  EXPECT_DOUBLE_EQ(f[1], 1.0);
}

TEST(Score, ComplExHandExample) {
  auto m = tiny(ModelKind::kComplEx, 2, 1, 1);
  m.entity.row(0) << 1, 0;    // 1 + 0i
  m.relation.row(0) << 0, 1;  // i
  m.entity.row(1) << 0, 1;    // i
  EXPECT_DOUBLE_EQ(score(m, {0, 0, 1}), 1.0);
  Vector f = feature_vector(m, {0, 0, 1});
  ASSERT_EQ(f.size(), 1);
  EXPECT_DOUBLE_EQ(f[0], 1.0);
}

TEST(Score, TransEHandExamples) {
  auto m = tiny(ModelKind::kTransE, 2, 1, 2);
  m.relation.row(0) << 1, 1;
  m.entity.row(1) << 1, 1;
  EXPECT_DOUBLE_EQ(score(m, {0, 0, 1}), 0.0);

  m.entity.row(0) << 1, 0;
  m.relation.row(0) << 0, 1;
  m.entity.row(1) << 0, 0;
  Vector f = feature_vector(m, {0, 0, 1});
  EXPECT_DOUBLE_EQ(f[0], -1.0);
  EXPECT_DOUBLE_EQ(f[1], -1.0);
  EXPECT_LT(score(m, {0, 0, 1}), 0.0);
}

TEST(Score, OutOfRangeIdsThrow) {
  auto m = random_model(ModelKind::kDistMult, 3, 1, 2, 1);
  EXPECT_ANY_THROW(score(m, {0, 0, 3}));
  EXPECT_ANY_THROW(score(m, {0, 1, 0}));
  EXPECT_ANY_THROW(feature_vector(m, {-1, 0, 0}));
}

TEST(Score, ReductionIdentityForMultiplicativeModels) {
  for (auto kind : {ModelKind::kDistMult, ModelKind::kComplEx}) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      auto m = random_model(kind, 6, 2, 5, seed);
      for (EntityId s = 0; s < 6; ++s) {
        const Triple t{s, static_cast<RelationId>(seed % 2), (s + 1) % 6};
        const double sc = score(m, t);
        EXPECT_NEAR(feature_vector(m, t).sum(), sc, 1e-6 * std::max(1.0, std::abs(sc)));
      }
    }
  }
}

TEST(Score, VectorisedMatchesPerTriple) {
  for (auto kind : kAllKinds) {
    auto m = random_model(kind, 7, 2, 4, 3);
    for (EntityId s = 0; s < 7; ++s) {
      const Vector objs = score_all_objects(m, s, 1);
      const Vector subs = score_all_subjects(m, 1, s);
      for (EntityId i = 0; i < 7; ++i) {
        EXPECT_NEAR(objs[i], score(m, {s, 1, i}), 1e-10);
        EXPECT_NEAR(subs[i], score(m, {i, 1, s}), 1e-10);
      }
    }
  }
}

TEST(Score, TransEZeroEmbeddingsScoreZeroAndScoresNonPositive) {
  auto m = tiny(ModelKind::kTransE, 4, 1, 3);
  EXPECT_TRUE(score_all_objects(m, 0, 0).isZero());
  auto r = random_model(ModelKind::kTransE, 5, 2, 3, 2);
  for (EntityId s = 0; s < 5; ++s) EXPECT_LE(score_all_objects(r, s, 0).maxCoeff(), 0.0);
}

TEST(Loss, UniformScoresGiveTwoLogN) {
  const int n = 6;
  auto m = tiny(ModelKind::kDistMult, n, 1, 3);
  EXPECT_NEAR(loss(m, {0, 0, 1}, {0.0}), 2.0 * std::log(n), 1e-12);
}

TEST(Loss, HandSizedReference) {
  // Scalar recomputation of both cross-entropy terms for a 3-entity DistMult.
  auto m = random_model(ModelKind::kDistMult, 3, 1, 2, 11);
  const Triple t{0, 0, 2};
  auto dot3 = [&](int s, int o) {
    double v = 0;
    for (int i = 0; i < 2; ++i) v += m.entity(s, i) * m.relation(0, i) * m.entity(o, i);
    return v;
  };
  double zo = 0, zs = 0;
  for (int c = 0; c < 3; ++c) {
    zo += std::exp(dot3(0, c));
    zs += std::exp(dot3(c, 2));
  }
  const double ce = -dot3(0, 2) + std::log(zo) - dot3(0, 2) + std::log(zs);
  double n3 = 0;
  for (int i = 0; i < 2; ++i) {
    n3 += std::pow(std::abs(m.entity(0, i)), 3) + std::pow(std::abs(m.relation(0, i)), 3) +
          std::pow(std::abs(m.entity(2, i)), 3);
  }
  EXPECT_NEAR(loss(m, t, {0.0}), ce, 1e-12);
  EXPECT_NEAR(loss(m, t, {0.3}), ce + 0.3 * n3, 1e-12);
  EXPECT_GE(loss(m, t, {0.3}), regularizer(m, t, {0.3}));
}

TEST(Loss, LargeMarginApproachesRegulariserOnly) {
  auto m = tiny(ModelKind::kDistMult, 2, 1, 1);
  m.entity << 30, -30;
  m.relation << 1;
  // score(0,0,0) = 900 dominates; the (0,·)->0 and (·,0)->0 terms vanish.
  EXPECT_NEAR(loss(m, {0, 0, 0}, {0.0}), 0.0, 1e-12);
}

TEST(Loss, NonFiniteIsDivergence) {
  auto m = tiny(ModelKind::kDistMult, 2, 1, 1);
  m.entity << std::numeric_limits<double>::infinity(), 1;
  m.relation << 1;
  EXPECT_THROW(loss(m, {0, 0, 1}, {0.0}), DivergenceError);
}

class GradientCheck : public ::testing::TestWithParam<ModelKind> {};

TEST_P(GradientCheck, MatchesCentralDifferences) {
  const ModelKind kind = GetParam();
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto m = random_model(kind, 6, 2, 4, seed, 0.5);
    const Triple t{static_cast<EntityId>(seed % 6), 1, static_cast<EntityId>((seed + 2) % 6)};
    const RegConfig reg{0.05};
    const Vector analytic = flatten(loss_gradient(m, t, reg));
    const Vector numeric = testing::fd_gradient(m, {t}, reg, 1e-5);
    double worst = 0;
    for (Eigen::Index i = 0; i < analytic.size(); ++i) {
      const double err = std::abs(analytic[i] - numeric[i]) /
                         std::max(1e-3, std::max(std::abs(analytic[i]), std::abs(numeric[i])));
      worst = std::max(worst, err);
    }
    EXPECT_LT(worst, 1e-4) << to_string(kind) << " seed " << seed;
  }
}

TEST_P(GradientCheck, BatchGradientIsMeanOfPerTriple) {
  const ModelKind kind = GetParam();
  auto m = random_model(kind, 8, 3, 3, 4, 0.5);
  const std::vector<Triple> batch = {{0, 0, 1}, {2, 1, 3}, {4, 2, 5}, {0, 0, 1}, {7, 1, 6}};
  const RegConfig reg{0.01};
  Vector expect = Vector::Zero(testing::num_params(m));
  for (const auto& t : batch) expect += flatten(loss_gradient(m, t, reg));
  expect /= static_cast<double>(batch.size());
  const Vector got = flatten(mean_batch_gradient(m, batch, reg));
  EXPECT_LT(testing::rel_err(got, expect), 1e-10);
}

INSTANTIATE_TEST_SUITE_P(AllModels, GradientCheck, ::testing::ValuesIn(kAllKinds),
                         [](const auto& info) { return to_string(info.param); });

TEST(Gradient, TransEZeroResidualGivesFiniteGradient) {
  auto m = tiny(ModelKind::kTransE, 3, 1, 2);
  const auto g = loss_gradient(m, {0, 0, 1}, {0.0});
  EXPECT_TRUE(g.all_finite());
}

TEST(Gradient, SmallStepsAlongNegativeGradientDecreaseLoss) {
  // First-order check: loss(θ − ηg) < loss(θ) for small η, and the decrease
  // matches η‖g‖² to leading order.
  for (auto kind : kAllKinds) {
    auto m = random_model(kind, 5, 2, 3, 5, 0.3);
    const Triple t{0, 1, 3};
    const RegConfig reg{0.1};
    const auto g = loss_gradient(m, t, reg);
    const double before = loss(m, t, reg);
    const double eta = 1e-4;
    auto step = m;
    step.entity -= eta * g.materialize_entities();
    step.relation -= eta * g.materialize_relations();
    const double drop = before - loss(step, t, reg);
    EXPECT_GT(drop, 0.0) << to_string(kind);
    EXPECT_NEAR(drop / (eta * g.squared_norm()), 1.0, 1e-2) << to_string(kind);
  }
}

TEST(Init, SeedDeterminismAndRange) {
  auto a = init_model(ModelKind::kComplEx, 5, 2, 3, 42);
  auto b = init_model(ModelKind::kComplEx, 5, 2, 3, 42);
  auto c = init_model(ModelKind::kComplEx, 5, 2, 3, 43);
  EXPECT_EQ(a.entity, b.entity);
  EXPECT_EQ(a.relation, b.relation);
  EXPECT_NE(a.entity, c.entity);
  EXPECT_EQ(a.entity.cols(), 6);  // 2k reals for ComplEx
  EXPECT_LE(a.entity.cwiseAbs().maxCoeff(), 0.1);
}

TEST(Checkpoint, RoundTripAndHash) {
  Checkpoint ck;
  ck.model = random_model(ModelKind::kTransE, 4, 2, 3, 1);
  ck.config_hash = "abc";
  ck.epochs_completed = 7;
  ck.optimizer = OptimizerState{"adagrad", 12, {Matrix::Ones(4, 3), Matrix::Ones(2, 3)}};
  const auto bytes = serialize_checkpoint(ck);
  const auto back = deserialize_checkpoint(bytes);
  EXPECT_EQ(back.model.kind, ck.model.kind);
  EXPECT_EQ(back.model.entity, ck.model.entity);
  EXPECT_EQ(back.model.relation, ck.model.relation);
  EXPECT_EQ(back.epochs_completed, 7);
  ASSERT_TRUE(back.optimizer.has_value());
  EXPECT_EQ(back.optimizer->step, 12);
  EXPECT_EQ(serialize_checkpoint(back), bytes);
  EXPECT_EQ(checkpoint_hash(back), checkpoint_hash(ck));
  EXPECT_THROW(deserialize_checkpoint(bytes.substr(0, 20)), DataError);
  EXPECT_THROW(deserialize_checkpoint("not a checkpoint at all"), DataError);
}

TEST(Checkpoint, RejectsVocabularyMismatch) {
  Checkpoint ck;
  ck.model = random_model(ModelKind::kDistMult, 4, 1, 2, 1);
  auto kg = testing::random_graph(5, 1, 5, 0, 1);
  EXPECT_THROW(check_compatible(ck, kg), DataError);
}

}  // namespace
}  // namespace kgp
