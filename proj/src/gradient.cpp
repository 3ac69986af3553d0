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

#include "kgpoison/gradient.hpp"

#include <cmath>
#include <stdexcept>

namespace kgp {
namespace {

void add_row(GradientVector::Rows& rows, std::int32_t id, const Eigen::Ref<const Vector>& row) {
  auto it = rows.find(id);
  if (it == rows.end()) {
    rows.emplace(id, row);
  } else {
    it->second += row;
  }
}

double rows_dot(const GradientVector::Rows& a, const GradientVector::Rows& b) {
  double sum = 0.0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (ia->first < ib->first) {
      ++ia;
    } else if (ib->first < ia->first) {
      ++ib;
    } else {
      sum += ia->second.dot(ib->second);
      ++ia;
      ++ib;
    }
  }
  return sum;
}

double dense_rows_dot(const Matrix& m, const GradientVector::Rows& rows) {
  double sum = 0.0;
  for (const auto& [id, row] : rows) sum += m.row(id).dot(row);
  return sum;
}

double factor_rows_dot(const GradientVector::RankOne& f, const GradientVector::Rows& rows) {
  double sum = 0.0;
  for (const auto& [id, row] : rows) sum += f.weights[id] * f.direction.dot(row);
  return sum;
}

// Structured entity block (factors + rows) against a dense matrix.
double structured_dense_dot(const std::vector<GradientVector::RankOne>& factors,
                            const GradientVector::Rows& rows, const Matrix& m) {
  double sum = dense_rows_dot(m, rows);
  for (const auto& f : factors) sum += f.weights.dot(m * f.direction);
  return sum;
}

}  // namespace

GradientVector::GradientVector(std::size_t num_entities, std::size_t num_relations,
                               std::size_t dim)
    : num_entities_(num_entities), num_relations_(num_relations), dim_(dim) {}

GradientVector GradientVector::dense(Matrix entity, Matrix relation) {
  if (entity.cols() != relation.cols()) throw std::invalid_argument("GradientVector: width mismatch");
  GradientVector g(entity.rows(), relation.rows(), entity.cols());
  g.dense_ = true;
  g.entity_ = std::move(entity);
  g.relation_ = std::move(relation);
  return g;
}

void GradientVector::add_rank_one(Vector weights, Vector direction) {
  if (static_cast<std::size_t>(weights.size()) != num_entities_ ||
      static_cast<std::size_t>(direction.size()) != dim_) {
    throw std::invalid_argument("GradientVector::add_rank_one: shape mismatch");
  }
  if (dense_) {
    entity_.noalias() += weights * direction.transpose();
  } else {
    factors_.push_back({std::move(weights), std::move(direction)});
  }
}

void GradientVector::add_entity_row(std::int32_t id, const Eigen::Ref<const Vector>& row) {
  if (dense_) {
    entity_.row(id) += row.transpose();
  } else {
    add_row(entity_rows_, id, row);
  }
}

void GradientVector::add_relation_row(std::int32_t id, const Eigen::Ref<const Vector>& row) {
  if (dense_) {
    relation_.row(id) += row.transpose();
  } else {
    add_row(relation_rows_, id, row);
  }
}

void GradientVector::check_shape(const GradientVector& other) const {
  if (num_entities_ != other.num_entities_ || num_relations_ != other.num_relations_ ||
      dim_ != other.dim_) {
    throw std::invalid_argument("GradientVector: shape mismatch");
  }
}

double GradientVector::dot(const GradientVector& other) const {
  check_shape(other);
  const GradientVector& a = *this;
  const GradientVector& b = other;
  double entity = 0.0;
  double relation = 0.0;
  if (a.dense_ && b.dense_) {
    entity = a.entity_.cwiseProduct(b.entity_).sum();
    relation = a.relation_.cwiseProduct(b.relation_).sum();
  } else if (a.dense_ || b.dense_) {
    const GradientVector& d = a.dense_ ? a : b;
    const GradientVector& s = a.dense_ ? b : a;
    entity = structured_dense_dot(s.factors_, s.entity_rows_, d.entity_);
    relation = dense_rows_dot(d.relation_, s.relation_rows_);
  } else {
    for (const auto& fa : a.factors_) {
      for (const auto& fb : b.factors_) {
        entity += fa.weights.dot(fb.weights) * fa.direction.dot(fb.direction);
      }
      entity += factor_rows_dot(fa, b.entity_rows_);
    }
    for (const auto& fb : b.factors_) entity += factor_rows_dot(fb, a.entity_rows_);
    entity += rows_dot(a.entity_rows_, b.entity_rows_);
    relation = rows_dot(a.relation_rows_, b.relation_rows_);
  }
  return entity + relation;
}

double GradientVector::norm() const { return std::sqrt(std::max(0.0, squared_norm())); }

GradientVector& GradientVector::scale(double c) {
  if (dense_) {
    entity_ *= c;
    relation_ *= c;
    return *this;
  }
  for (auto& f : factors_) f.weights *= c;
  for (auto& [id, row] : entity_rows_) row *= c;
  for (auto& [id, row] : relation_rows_) row *= c;
  return *this;
}

void GradientVector::add_into_dense(double alpha, const GradientVector& x) {
  if (x.dense_) {
    entity_ += alpha * x.entity_;
    relation_ += alpha * x.relation_;
    return;
  }
  for (const auto& f : x.factors_) entity_.noalias() += (alpha * f.weights) * f.direction.transpose();
  for (const auto& [id, row] : x.entity_rows_) entity_.row(id) += alpha * row.transpose();
  for (const auto& [id, row] : x.relation_rows_) relation_.row(id) += alpha * row.transpose();
}

GradientVector& GradientVector::axpy(double alpha, const GradientVector& x) {
  check_shape(x);
  if (x.dense_ && !dense_) densify();
  if (dense_) {
    add_into_dense(alpha, x);
    return *this;
  }
  for (const auto& f : x.factors_) factors_.push_back({alpha * f.weights, f.direction});
  for (const auto& [id, row] : x.entity_rows_) add_row(entity_rows_, id, alpha * row);
  for (const auto& [id, row] : x.relation_rows_) add_row(relation_rows_, id, alpha * row);
  return *this;
}

GradientVector& GradientVector::densify() {
  if (dense_) return *this;
  Matrix e = materialize_entities();
  Matrix r = materialize_relations();
  factors_.clear();
  entity_rows_.clear();
  relation_rows_.clear();
  entity_ = std::move(e);
  relation_ = std::move(r);
  dense_ = true;
  return *this;
}

Matrix GradientVector::materialize_entities() const {
  if (dense_) return entity_;
  Matrix m = Matrix::Zero(num_entities_, dim_);
  for (const auto& f : factors_) m.noalias() += f.weights * f.direction.transpose();
  for (const auto& [id, row] : entity_rows_) m.row(id) += row.transpose();
  return m;
}

Matrix GradientVector::materialize_relations() const {
  if (dense_) return relation_;
  Matrix m = Matrix::Zero(num_relations_, dim_);
  for (const auto& [id, row] : relation_rows_) m.row(id) += row.transpose();
  return m;
}

double GradientVector::max_abs() const {
  if (dense_) {
    double m = 0.0;
    if (entity_.size() > 0) m = entity_.cwiseAbs().maxCoeff();
    if (relation_.size() > 0) m = std::max(m, relation_.cwiseAbs().maxCoeff());
    return m;
  }
  return std::max(materialize_entities().cwiseAbs().maxCoeff(),
                  relation_rows_.empty() ? 0.0 : materialize_relations().cwiseAbs().maxCoeff());
}

bool GradientVector::all_finite() const {
  if (dense_) return entity_.allFinite() && relation_.allFinite();
  for (const auto& f : factors_) {
    if (!f.weights.allFinite() || !f.direction.allFinite()) return false;
  }
  for (const auto& [id, row] : entity_rows_) {
    if (!row.allFinite()) return false;
  }
  for (const auto& [id, row] : relation_rows_) {
    if (!row.allFinite()) return false;
  }
  return true;
}

GradientVector operator+(GradientVector a, const GradientVector& b) { return std::move(a.axpy(1.0, b)); }
GradientVector operator-(GradientVector a, const GradientVector& b) { return std::move(a.axpy(-1.0, b)); }
GradientVector operator*(double c, GradientVector a) { return std::move(a.scale(c)); }

}  // namespace kgp
