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

#ifndef KGPOISON_MODEL_HPP_
#define KGPOISON_MODEL_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "kgpoison/common.hpp"
#include "kgpoison/gradient.hpp"
#include "kgpoison/kg_store.hpp"

namespace kgp {

enum class ModelKind { kDistMult, kComplEx, kTransE };

std::string to_string(ModelKind kind);
/// Accepts "distmult", "complex", "transe" (case-insensitive).
ModelKind parse_model_kind(std::string_view name);
/// DistMult and ComplEx; TransE is additive.
bool is_multiplicative(ModelKind kind);

template <class Scalar>
using MatrixT = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// θ = {E, R}. Rows have width `dim()`: k for the real models, 2k for ComplEx
/// (k real parts followed by k imaginary parts).
struct EmbeddingModel {
  ModelKind kind = ModelKind::kDistMult;
  int k = 0;
  std::uint64_t seed = 0;
  Matrix entity;
  Matrix relation;

  std::size_t num_entities() const { return static_cast<std::size_t>(entity.rows()); }
  std::size_t num_relations() const { return static_cast<std::size_t>(relation.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(entity.cols()); }
  int feature_width() const { return k; }
};

/// Regularization weight. N3 on the three embedding rows of a triple for
/// DistMult/ComplEx (|z|³ per complex coordinate for ComplEx), squared L2 on
/// the same rows for TransE.
struct RegConfig {
  double weight = 0.0;
};

/// Uniform in [-0.1, 0.1] per entry, bit-reproducible from `seed`.
EmbeddingModel init_model(ModelKind kind, std::size_t num_entities, std::size_t num_relations,
                          int k, std::uint64_t seed);

double score(const EmbeddingModel& model, const Triple& t);

/// Unreduced scoring function, length k. Sums to score() for the
/// multiplicative models. For TransE it is −(e_s + e_r − e_o).
Vector feature_vector(const EmbeddingModel& model, const Triple& t);

/// Entry i is score(s, r, i).
Vector score_all_objects(const EmbeddingModel& model, EntityId s, RelationId r);
/// Entry i is score(i, r, o).
Vector score_all_subjects(const EmbeddingModel& model, RelationId r, EntityId o);

/// Regularization term of one triple.
double regularizer(const EmbeddingModel& model, const Triple& t, const RegConfig& reg);

/// 1-N cross-entropy over objects for (s,r) plus over subjects for (r,o), plus
/// the regularizer. Throws DivergenceError on a non-finite value.
double loss(const EmbeddingModel& model, const Triple& t, const RegConfig& reg);

/// ∇θ loss(t). Structured (rank-one terms plus rows {s, o}) for the
/// multiplicative models, dense for TransE.
GradientVector loss_gradient(const EmbeddingModel& model, const Triple& t, const RegConfig& reg);

/// Adds `weight` · Σ_t ∇θ loss(t) over `batch` into (grad_entity,
/// grad_relation), returning `weight` · Σ_t loss(t). Used by the trainer
/// (Scalar = float or double) and by Hessian-vector products.
template <class Scalar>
double accumulate_batch_gradient(ModelKind kind, const MatrixT<Scalar>& entity,
                                 const MatrixT<Scalar>& relation, std::span<const Triple> batch,
                                 const RegConfig& reg, double weight,
                                 MatrixT<Scalar>& grad_entity, MatrixT<Scalar>& grad_relation);

/// Mean loss gradient over `triples`, dense.
GradientVector mean_batch_gradient(const EmbeddingModel& model, std::span<const Triple> triples,
                                   const RegConfig& reg);

/// Throws DataError unless t's ids fit the model.
void check_ids(const EmbeddingModel& model, const Triple& t);

}  // namespace kgp

#endif  // KGPOISON_MODEL_HPP_
