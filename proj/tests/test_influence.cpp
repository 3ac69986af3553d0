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

#include <Eigen/Eigenvalues>

#include "kgpoison/influence.hpp"
#include "test_util.hpp"

namespace kgp {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

auto matrix_hvp(const MatrixXd& A) {
  return [A](const VectorXd& v, int, int) -> VectorXd { return A * v; };
}

IFConfig quad_config(double damping, double scale, int depth) {
  IFConfig c;
  c.damping = damping;
  c.scale = scale;
  c.depth = depth;
  return c;
}

TEST(CentralDifference, ExactOnQuadraticSurrogate) {
  const MatrixXd A = 2.0 * MatrixXd::Identity(2, 2);
  auto grad_at = [&](const VectorXd& d) -> VectorXd { return A * d; };
  VectorXd v(2);
  v << 3.0, -1.0;
  EXPECT_LT((central_difference_hvp(grad_at, v, 1e-3) - A * v).norm(), 1e-12);
  EXPECT_TRUE(central_difference_hvp(grad_at, VectorXd(VectorXd::Zero(2)), 1e-3).isZero());
}

TEST(Lissa, QuadraticSurrogate) {
  const MatrixXd A = 2.0 * MatrixXd::Identity(2, 2);
  VectorXd g(2);
  g << 1.0, 0.0;
  const VectorXd x = lissa(g, matrix_hvp(A), quad_config(0.0, 4.0, 100));
  EXPECT_NEAR(x[0], 0.5, 1e-10);
  EXPECT_NEAR(x[1], 0.0, 1e-10);
}

TEST(Lissa, LargeDampingLimit) {
  const MatrixXd A = 2.0 * MatrixXd::Identity(2, 2);
  VectorXd g(2);
  g << 1.0, -2.0;
  const double lambda = 1000.0;
  const VectorXd x = lissa(g, matrix_hvp(A), quad_config(lambda, 1000.0, 50));
  EXPECT_LT((lambda * x - g).norm() / g.norm(), 1e-2);
}

TEST(Lissa, DivergesWhenScaleTooSmall) {
  const MatrixXd A = 10.0 * MatrixXd::Identity(2, 2);
  VectorXd g(2);
  g << 1.0, 1.0;
  EXPECT_THROW(lissa(g, matrix_hvp(A), quad_config(0.0, 2.0, 60)), DivergenceError);
  EXPECT_THROW(lissa(VectorXd(VectorXd::Zero(2)), matrix_hvp(A), quad_config(0.0, 20.0, 60)), DataError);
}

TEST(Lissa, ConvergesWithDepthToDenseSolve) {
  MatrixXd B = MatrixXd::Random(6, 6);
  const MatrixXd A = B * B.transpose() + 0.5 * MatrixXd::Identity(6, 6);
  const VectorXd g = VectorXd::Random(6);
  const double smax = Eigen::SelfAdjointEigenSolver<MatrixXd>(A).eigenvalues().maxCoeff();
  const VectorXd exact = A.ldlt().solve(g);
  double prev = std::numeric_limits<double>::infinity();
  for (int depth : {10, 50, 200}) {
    const VectorXd x = lissa(g, matrix_hvp(A), quad_config(0.0, smax, depth));
    const double err = (x - exact).norm() / exact.norm();
    EXPECT_LT(err, prev) << depth;
    prev = err;
  }
  EXPECT_LT(prev, 0.05);
}

TEST(TuneDamping, PicksFirstGridValueAboveNegativeEigenvalue) {
  MatrixXd A = MatrixXd::Zero(2, 2);
  A(0, 0) = -0.5;
  A(1, 1) = 1.0;
  std::vector<VectorXd> probes = {VectorXd::Ones(2)};
  IFConfig c = quad_config(0.0, 10.0, 100);
  const double lambda = tune_damping_generic<VectorXd>(
      std::span<const VectorXd>(probes), [&](std::size_t) { return matrix_hvp(A); }, c);
  EXPECT_DOUBLE_EQ(lambda, 0.512);
  EXPECT_THROW(tune_damping_generic<VectorXd>(std::span<const VectorXd>(),
                                              [&](std::size_t) { return matrix_hvp(A); }, c),
               DataError);
}

struct SmallProblem {
  KnowledgeGraph kg;
  EmbeddingModel model;
  RegConfig reg{0.05};
};

SmallProblem small_problem(ModelKind kind, std::uint64_t seed) {
  auto kg = testing::random_graph(6, 2, 12, 2, seed);
  auto m = testing::random_model(kind, 6, 2, 2, seed, 0.5);
  return {std::move(kg), std::move(m)};
}

TEST(Hvp, MatchesExplicitHessian) {
  for (auto kind : {ModelKind::kDistMult, ModelKind::kComplEx, ModelKind::kTransE}) {
    auto p = small_problem(kind, 1);
    const auto H = testing::fd_hessian(p.model, p.kg.train(), p.reg);
    for (std::uint64_t s = 0; s < 3; ++s) {
      const VectorXd v = VectorXd::Random(H.rows());
      const auto hv = hvp(p.model, p.kg.train(), testing::from_flat(v, p.model), 1e-3, p.reg);
      EXPECT_LT(testing::rel_err(testing::flatten(hv), H * v), 1e-3) << to_string(kind);
    }
  }
}

TEST(Hvp, LinearAndSymmetric) {
  auto p = small_problem(ModelKind::kComplEx, 2);
  const auto n = static_cast<Eigen::Index>(testing::num_params(p.model));
  const VectorXd a = VectorXd::Random(n), b = VectorXd::Random(n);
  auto H = [&](const VectorXd& v) {
    return testing::flatten(hvp(p.model, p.kg.train(), testing::from_flat(v, p.model), 1e-3, p.reg));
  };
  EXPECT_LT(testing::rel_err(H(2.0 * a + b), 2.0 * H(a) + H(b)), 1e-4);
  EXPECT_NEAR(a.dot(H(b)), b.dot(H(a)), 1e-4 * std::max(1.0, std::abs(a.dot(H(b)))));
}

TEST(Lissa, ModelHessianMatchesDampedDenseSolve) {
  auto p = small_problem(ModelKind::kDistMult, 3);
  const auto H = testing::fd_hessian(p.model, p.kg.train(), p.reg);
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(H);
  const double lambda = std::max(0.0, -eig.eigenvalues().minCoeff()) + 0.1;
  const double sigma = eig.eigenvalues().maxCoeff() + lambda;
  const auto g = loss_gradient(p.model, p.kg.test()[0], p.reg);
  const VectorXd exact =
      (H + lambda * MatrixXd::Identity(H.rows(), H.cols())).ldlt().solve(testing::flatten(g));
  auto model_hvp = [&](const GradientVector& v, int, int) {
    return hvp(p.model, p.kg.train(), v, 1e-3, p.reg);
  };
  const auto x = lissa(g, model_hvp, quad_config(lambda, sigma, 2000));
  EXPECT_LT(testing::rel_err(testing::flatten(x), exact), 0.05);
}

TEST(InverseHvpLissa, SeedDeterministicAndObserved) {
  auto p = small_problem(ModelKind::kDistMult, 4);
  IFConfig c = quad_config(0.5, 20.0, 30);
  c.batch_size = 4;
  const Triple z = p.kg.test()[0];
  const auto g = loss_gradient(p.model, z, p.reg);
  std::vector<IterateRecord> log;
  const auto a = inverse_hvp_lissa(p.model, p.kg, z, g, c, p.reg, 7,
                                   [&](const IterateRecord& r) { log.push_back(r); });
  const auto b = inverse_hvp_lissa(p.model, p.kg, z, g, c, p.reg, 7);
  EXPECT_EQ(testing::flatten(a.vector), testing::flatten(b.vector));
  ASSERT_EQ(log.size(), 30u);
  EXPECT_EQ(log.back().depth, 30);
  const auto s = inverse_hvp_lissa(p.model, p.kg, z, g, c, p.reg, 8);
  EXPECT_NE(testing::flatten(s.vector), testing::flatten(a.vector));
  EXPECT_DOUBLE_EQ(if_score(p.model, p.kg.train()[0], a, p.reg),
                   a.vector.dot(loss_gradient(p.model, p.kg.train()[0], p.reg)));
}

TEST(IFConfig, ValidationAndJson) {
  IFConfig c;
  c.depth = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  IFConfig d;
  d.damping = 0.25;
  EXPECT_DOUBLE_EQ(if_config_from_json(to_json(d)).damping, 0.25);
}

}  // namespace
}  // namespace kgp
