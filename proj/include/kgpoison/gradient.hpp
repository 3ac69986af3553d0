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

#ifndef KGPOISON_GRADIENT_HPP_
#define KGPOISON_GRADIENT_HPP_

#include <cstdint>
#include <map>
#include <vector>

#include "kgpoison/common.hpp"

namespace kgp {

/// An element of the parameter space θ = {E, R}: an |E|×d entity block and an
/// |R|×d relation block.
///
/// Two representations share one interface:
///  - structured: entity block = Σ_k weights_k ⊗ direction_k + sparse rows,
///    relation block = sparse rows. A 1-N loss gradient of a multiplicative
///    model fits this with two rank-one terms, so inner products between two
///    such gradients cost O(|E| + d) instead of O(|E|·d).
///  - dense: both blocks held as full matrices.
///
/// All algebra is value-equal to the dense materialization; the form is an
/// internal detail. Mixed operations promote to dense where needed.
class GradientVector {
 public:
  struct RankOne {
    Vector weights;    // |E|
    Vector direction;  // d
  };
  using Rows = std::map<std::int32_t, Vector>;

  GradientVector() = default;
  /// Zero vector, structured form.
  GradientVector(std::size_t num_entities, std::size_t num_relations, std::size_t dim);

  static GradientVector dense(Matrix entity, Matrix relation);

  std::size_t num_entities() const { return num_entities_; }
  std::size_t num_relations() const { return num_relations_; }
  std::size_t dim() const { return dim_; }
  bool is_dense() const { return dense_; }

  void add_rank_one(Vector weights, Vector direction);
  void add_entity_row(std::int32_t id, const Eigen::Ref<const Vector>& row);
  void add_relation_row(std::int32_t id, const Eigen::Ref<const Vector>& row);

  const std::vector<RankOne>& rank_one_terms() const { return factors_; }
  const Rows& entity_rows() const { return entity_rows_; }
  const Rows& relation_rows() const { return relation_rows_; }
  const Matrix& dense_entity() const { return entity_; }
  const Matrix& dense_relation() const { return relation_; }

  double dot(const GradientVector& other) const;
  double squared_norm() const { return dot(*this); }
  double norm() const;

  GradientVector& scale(double c);
  /// this += alpha * x.
  GradientVector& axpy(double alpha, const GradientVector& x);
  /// Converts to the dense form in place.
  GradientVector& densify();

  Matrix materialize_entities() const;
  Matrix materialize_relations() const;

  /// Largest absolute coefficient; used for finiteness/divergence checks.
  double max_abs() const;
  bool all_finite() const;

  GradientVector& operator+=(const GradientVector& x) { return axpy(1.0, x); }
  GradientVector& operator-=(const GradientVector& x) { return axpy(-1.0, x); }
  GradientVector& operator*=(double c) { return scale(c); }

 private:
  void check_shape(const GradientVector& other) const;
  void add_into_dense(double alpha, const GradientVector& x);

  std::size_t num_entities_ = 0;
  std::size_t num_relations_ = 0;
  std::size_t dim_ = 0;
  bool dense_ = false;
  // Structured form.
  std::vector<RankOne> factors_;
  Rows entity_rows_;
  Rows relation_rows_;
  // Dense form.
  Matrix entity_;
  Matrix relation_;
};

inline double inner_product(const GradientVector& a, const GradientVector& b) { return a.dot(b); }
inline double norm(const GradientVector& v) { return v.norm(); }

GradientVector operator+(GradientVector a, const GradientVector& b);
GradientVector operator-(GradientVector a, const GradientVector& b);
GradientVector operator*(double c, GradientVector a);

}  // namespace kgp

#endif  // KGPOISON_GRADIENT_HPP_
