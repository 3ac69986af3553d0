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

#include "kgpoison/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace kgp {

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kDistMult:
      return "distmult";
    case ModelKind::kComplEx:
      return "complex";
    case ModelKind::kTransE:
      return "transe";
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "distmult") return ModelKind::kDistMult;
  if (lower == "complex") return ModelKind::kComplEx;
  if (lower == "transe") return ModelKind::kTransE;
  throw ConfigError("unknown model kind: " + std::string(name));
}

bool is_multiplicative(ModelKind kind) { return kind != ModelKind::kTransE; }

namespace {

template <class S>
using VectorT = Eigen::Matrix<S, Eigen::Dynamic, 1>;

// Multiplicative models score (s, r, i) as <object_context(s, r), e_i> and
// (i, r, o) as <subject_context(r, o), e_i>.
template <class S, class A, class B>
VectorT<S> object_context(ModelKind kind, const A& es, const B& er) {
  const Eigen::Index d = es.size();
  VectorT<S> c(d);
  if (kind == ModelKind::kDistMult) {
    c = es.cwiseProduct(er).transpose();
    return c;
  }
  const Eigen::Index k = d / 2;
  for (Eigen::Index i = 0; i < k; ++i) {
    const S sr = es(i), si = es(k + i), rr = er(i), ri = er(k + i);
    c(i) = sr * rr - si * ri;
    c(k + i) = sr * ri + si * rr;
  }
  return c;
}

template <class S, class A, class B>
VectorT<S> subject_context(ModelKind kind, const A& er, const B& eo) {
  const Eigen::Index d = er.size();
  VectorT<S> c(d);
  if (kind == ModelKind::kDistMult) {
    c = er.cwiseProduct(eo).transpose();
    return c;
  }
  const Eigen::Index k = d / 2;
  for (Eigen::Index i = 0; i < k; ++i) {
    const S rr = er(i), ri = er(k + i), orr = eo(i), oi = eo(k + i);
    c(i) = rr * orr + ri * oi;
    c(k + i) = rr * oi - ri * orr;
  }
  return c;
}

// Given u = dL/d(object_context), accumulate dL/de_s and dL/de_r.
template <class S, class A, class B, class U, class GS, class GR>
void object_context_backward(ModelKind kind, const A& es, const B& er, const U& u, GS&& ges,
                             GR&& ger) {
  const Eigen::Index d = es.size();
  if (kind == ModelKind::kDistMult) {
    for (Eigen::Index i = 0; i < d; ++i) {
      ges(i) += u(i) * er(i);
      ger(i) += u(i) * es(i);
    }
    return;
  }
  const Eigen::Index k = d / 2;
  for (Eigen::Index i = 0; i < k; ++i) {
    const S sr = es(i), si = es(k + i), rr = er(i), ri = er(k + i);
    const S ur = u(i), ui = u(k + i);
    ges(i) += ur * rr + ui * ri;
    ges(k + i) += -ur * ri + ui * rr;
    ger(i) += ur * sr + ui * si;
    ger(k + i) += -ur * si + ui * sr;
  }
}

template <class S, class B, class C, class W, class GR, class GO>
void subject_context_backward(ModelKind kind, const B& er, const C& eo, const W& w, GR&& ger,
                              GO&& geo) {
  const Eigen::Index d = er.size();
  if (kind == ModelKind::kDistMult) {
    for (Eigen::Index i = 0; i < d; ++i) {
      ger(i) += w(i) * eo(i);
      geo(i) += w(i) * er(i);
    }
    return;
  }
  const Eigen::Index k = d / 2;
  for (Eigen::Index i = 0; i < k; ++i) {
    const S rr = er(i), ri = er(k + i), orr = eo(i), oi = eo(k + i);
    const S wr = w(i), wi = w(k + i);
    ger(i) += wr * orr + wi * oi;
    ger(k + i) += wr * oi - wi * orr;
    geo(i) += wr * rr - wi * ri;
    geo(k + i) += wr * ri + wi * rr;
  }
}

// Regularizer of one embedding row; adds weight·∇ into `grad` when non-null.
template <class S, class X, class G>
double row_regularizer(ModelKind kind, const X& x, double weight, G* grad, double grad_scale) {
  if (weight == 0.0) return 0.0;
  const Eigen::Index d = x.size();
  double value = 0.0;
  switch (kind) {
    case ModelKind::kDistMult:
      for (Eigen::Index i = 0; i < d; ++i) {
        const double a = std::abs(static_cast<double>(x(i)));
        value += a * a * a;
        if (grad) (*grad)(i) += static_cast<S>(grad_scale * weight * 3.0 * x(i) * a);
      }
      break;
    case ModelKind::kComplEx: {
      const Eigen::Index k = d / 2;
      for (Eigen::Index i = 0; i < k; ++i) {
        const double re = x(i), im = x(k + i);
        const double m = std::sqrt(re * re + im * im);
        value += m * m * m;
        if (grad) {
          (*grad)(i) += static_cast<S>(grad_scale * weight * 3.0 * re * m);
          (*grad)(k + i) += static_cast<S>(grad_scale * weight * 3.0 * im * m);
        }
      }
      break;
    }
    case ModelKind::kTransE:
      for (Eigen::Index i = 0; i < d; ++i) {
        value += static_cast<double>(x(i)) * x(i);
        if (grad) (*grad)(i) += static_cast<S>(grad_scale * weight * 2.0 * x(i));
      }
      break;
  }
  return weight * value;
}

// Softmax of row `b` of `scores` in place, returning log-sum-exp.
template <class S, class Row>
double softmax_inplace(Row&& row) {
  const S max = row.maxCoeff();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < row.size(); ++i) {
    const S e = std::exp(row(i) - max);
    row(i) = e;
    sum += e;
  }
  row /= static_cast<S>(sum);
  return static_cast<double>(max) + std::log(sum);
}

void check_finite(double value, const char* what) {
  if (!std::isfinite(value)) throw DivergenceError(std::string("non-finite ") + what);
}

}  // namespace

void check_ids(const EmbeddingModel& model, const Triple& t) {
  const auto ne = static_cast<EntityId>(model.num_entities());
  const auto nr = static_cast<RelationId>(model.num_relations());
  if (t.s < 0 || t.s >= ne || t.o < 0 || t.o >= ne || t.r < 0 || t.r >= nr) {
    throw DataError("triple id out of range (" + std::to_string(t.s) + "," + std::to_string(t.r) +
                    "," + std::to_string(t.o) + ")");
  }
}

EmbeddingModel init_model(ModelKind kind, std::size_t num_entities, std::size_t num_relations,
                          int k, std::uint64_t seed) {
  if (num_entities == 0 || num_relations == 0 || k <= 0) {
    throw ConfigError("init_model: dimensions must be positive");
  }
  EmbeddingModel m;
  m.kind = kind;
  m.k = k;
  m.seed = seed;
  const Eigen::Index d = kind == ModelKind::kComplEx ? 2 * k : k;
  m.entity.resize(num_entities, d);
  m.relation.resize(num_relations, d);
  Rng rng(seed);
  for (Eigen::Index i = 0; i < m.entity.size(); ++i) m.entity.data()[i] = rng.uniform(-0.1, 0.1);
  for (Eigen::Index i = 0; i < m.relation.size(); ++i) {
    m.relation.data()[i] = rng.uniform(-0.1, 0.1);
  }
  return m;
}

double score(const EmbeddingModel& model, const Triple& t) {
  check_ids(model, t);
  const auto es = model.entity.row(t.s);
  const auto er = model.relation.row(t.r);
  const auto eo = model.entity.row(t.o);
  if (model.kind == ModelKind::kTransE) return -(es + er - eo).norm();
  return object_context<double>(model.kind, es, er).dot(eo.transpose());
}

Vector feature_vector(const EmbeddingModel& model, const Triple& t) {
  check_ids(model, t);
  const auto es = model.entity.row(t.s);
  const auto er = model.relation.row(t.r);
  const auto eo = model.entity.row(t.o);
  switch (model.kind) {
    case ModelKind::kDistMult:
      return es.cwiseProduct(er).cwiseProduct(eo).transpose();
    case ModelKind::kTransE:
      return -(es + er - eo).transpose();
    case ModelKind::kComplEx:
      break;
  }
  const int k = model.k;
  Vector f(k);
  for (int i = 0; i < k; ++i) {
    const double sr = es(i), si = es(k + i), rr = er(i), ri = er(k + i), orr = eo(i),
                 oi = eo(k + i);
    f(i) = (sr * rr - si * ri) * orr + (sr * ri + si * rr) * oi;
  }
  return f;
}

Vector score_all_objects(const EmbeddingModel& model, EntityId s, RelationId r) {
  check_ids(model, {s, r, s});
  const auto es = model.entity.row(s);
  const auto er = model.relation.row(r);
  if (model.kind == ModelKind::kTransE) {
    const Eigen::RowVectorXd q = es + er;
    return -(model.entity.rowwise() - q).rowwise().norm();
  }
  return model.entity * object_context<double>(model.kind, es, er);
}

Vector score_all_subjects(const EmbeddingModel& model, RelationId r, EntityId o) {
  check_ids(model, {o, r, o});
  const auto er = model.relation.row(r);
  const auto eo = model.entity.row(o);
  if (model.kind == ModelKind::kTransE) {
    const Eigen::RowVectorXd q = eo - er;
    return -(model.entity.rowwise() - q).rowwise().norm();
  }
  return model.entity * subject_context<double>(model.kind, er, eo);
}

double regularizer(const EmbeddingModel& model, const Triple& t, const RegConfig& reg) {
  check_ids(model, t);
  Vector* none = nullptr;
  return row_regularizer<double>(model.kind, model.entity.row(t.s), reg.weight, none, 1.0) +
         row_regularizer<double>(model.kind, model.relation.row(t.r), reg.weight, none, 1.0) +
         row_regularizer<double>(model.kind, model.entity.row(t.o), reg.weight, none, 1.0);
}

namespace {

double log_sum_exp(const Vector& v) {
  const double max = v.maxCoeff();
  return max + std::log((v.array() - max).exp().sum());
}

}  // namespace

double loss(const EmbeddingModel& model, const Triple& t, const RegConfig& reg) {
  if (reg.weight < 0.0) throw ConfigError("regularization weight must be non-negative");
  const Vector obj = score_all_objects(model, t.s, t.r);
  const Vector subj = score_all_subjects(model, t.r, t.o);
  const double value = (log_sum_exp(obj) - obj(t.o)) + (log_sum_exp(subj) - subj(t.s)) +
                       regularizer(model, t, reg);
  check_finite(value, "loss");
  return value;
}

GradientVector loss_gradient(const EmbeddingModel& model, const Triple& t, const RegConfig& reg) {
  if (reg.weight < 0.0) throw ConfigError("regularization weight must be non-negative");
  check_ids(model, t);
  const std::size_t ne = model.num_entities();
  const std::size_t nr = model.num_relations();
  const Eigen::Index d = static_cast<Eigen::Index>(model.dim());
  const Vector es = model.entity.row(t.s).transpose();
  const Vector er = model.relation.row(t.r).transpose();
  const Vector eo = model.entity.row(t.o).transpose();

  Vector ges = Vector::Zero(d), ger = Vector::Zero(d), geo = Vector::Zero(d);

  GradientVector g(ne, nr, d);
  if (is_multiplicative(model.kind)) {
    // Object side: weights p − onehot(o) against context c_obj.
    const Vector c_obj = object_context<double>(model.kind, es, er);
    Vector p = model.entity * c_obj;
    softmax_inplace<double>(p);
    const Vector u = model.entity.transpose() * p - eo;
    object_context_backward<double>(model.kind, es, er, u, ges, ger);
    g.add_entity_row(t.o, -c_obj);
    g.add_rank_one(std::move(p), c_obj);

    const Vector c_subj = subject_context<double>(model.kind, er, eo);
    Vector q = model.entity * c_subj;
    softmax_inplace<double>(q);
    const Vector w = model.entity.transpose() * q - es;
    subject_context_backward<double>(model.kind, er, eo, w, ger, geo);
    g.add_entity_row(t.s, -c_subj);
    g.add_rank_one(std::move(q), c_subj);
  } else {
    Matrix dense_e = Matrix::Zero(ne, d);
    // Both sides score −‖query − e_i‖.
    auto side = [&](const Vector& query, EntityId truth) -> Vector {
      Matrix diff = (-model.entity).rowwise() + query.transpose();  // row i: query − e_i
      Vector dist = diff.rowwise().norm();
      Vector p = -dist;
      softmax_inplace<double>(p);
      p(truth) -= 1.0;
      Vector g_query = Vector::Zero(d);
      for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(ne); ++i) {
        if (dist(i) == 0.0) continue;
        const double c = p(i) / dist(i);
        dense_e.row(i) += c * diff.row(i);
        g_query -= c * diff.row(i).transpose();
      }
      return g_query;
    };
    const Vector gq_obj = side(es + er, t.o);
    ges += gq_obj;
    ger += gq_obj;
    const Vector gq_subj = side(eo - er, t.s);
    geo += gq_subj;
    ger -= gq_subj;
    g = GradientVector::dense(std::move(dense_e), Matrix::Zero(nr, d));
  }
  row_regularizer<double>(model.kind, es, reg.weight, &ges, 1.0);
  row_regularizer<double>(model.kind, er, reg.weight, &ger, 1.0);
  row_regularizer<double>(model.kind, eo, reg.weight, &geo, 1.0);
  g.add_entity_row(t.s, ges);
  g.add_entity_row(t.o, geo);
  g.add_relation_row(t.r, ger);
  if (!g.all_finite()) throw DivergenceError("non-finite loss gradient");
  return g;
}

template <class S>
double accumulate_batch_gradient(ModelKind kind, const MatrixT<S>& entity,
                                 const MatrixT<S>& relation, std::span<const Triple> batch,
                                 const RegConfig& reg, double weight, MatrixT<S>& grad_entity,
                                 MatrixT<S>& grad_relation) {
  const Eigen::Index n = static_cast<Eigen::Index>(batch.size());
  const Eigen::Index d = entity.cols();
  const Eigen::Index ne = entity.rows();
  if (n == 0) return 0.0;
  const S w = static_cast<S>(weight);
  double total = 0.0;

  // Per-side queries: contexts (multiplicative) or translation points (TransE).
  MatrixT<S> queries(n, d);
  MatrixT<S> probs(n, ne);
  for (int side = 0; side < 2; ++side) {
    const bool object_side = side == 0;
    for (Eigen::Index b = 0; b < n; ++b) {
      const Triple& t = batch[b];
      const auto es = entity.row(t.s);
      const auto er = relation.row(t.r);
      const auto eo = entity.row(t.o);
      if (kind == ModelKind::kTransE) {
        queries.row(b) = object_side ? (es + er).eval() : (eo - er).eval();
      } else {
        queries.row(b) = object_side ? object_context<S>(kind, es, er).transpose()
                                     : subject_context<S>(kind, er, eo).transpose();
      }
    }
    MatrixT<S> dist;
    if (kind == ModelKind::kTransE) {
      dist.resize(n, ne);
      for (Eigen::Index b = 0; b < n; ++b) {
        for (Eigen::Index i = 0; i < ne; ++i) {
          dist(b, i) = (queries.row(b) - entity.row(i)).norm();
        }
      }
      probs = -dist;
    } else {
      probs.noalias() = queries * entity.transpose();
    }
    for (Eigen::Index b = 0; b < n; ++b) {
      const Triple& t = batch[b];
      const EntityId truth = object_side ? t.o : t.s;
      const double true_score = probs(b, truth);
      const double lse = softmax_inplace<S>(probs.row(b));
      total += weight * (lse - true_score);
      probs(b, truth) -= S(1);
    }
    probs *= w;  // probs now holds weight · dL/dscore
    MatrixT<S> query_grad;
    if (kind == ModelKind::kTransE) {
      // score_bi = −‖q_b − e_i‖; W_bi = G_bi / dist_bi.
      for (Eigen::Index b = 0; b < n; ++b) {
        for (Eigen::Index i = 0; i < ne; ++i) {
          probs(b, i) = dist(b, i) == S(0) ? S(0) : probs(b, i) / dist(b, i);
        }
      }
      grad_entity.noalias() += probs.transpose() * queries;
      const Eigen::Matrix<S, Eigen::Dynamic, 1> col_sums = probs.colwise().sum().transpose();
      grad_entity -= col_sums.asDiagonal() * entity;
      query_grad.noalias() = probs * entity;
      const Eigen::Matrix<S, Eigen::Dynamic, 1> row_sums = probs.rowwise().sum();
      query_grad -= row_sums.asDiagonal() * queries;
    } else {
      grad_entity.noalias() += probs.transpose() * queries;
      query_grad.noalias() = probs * entity;
    }
    for (Eigen::Index b = 0; b < n; ++b) {
      const Triple& t = batch[b];
      const auto u = query_grad.row(b);
      if (kind == ModelKind::kTransE) {
        if (object_side) {
          grad_entity.row(t.s) += u;
          grad_relation.row(t.r) += u;
        } else {
          grad_entity.row(t.o) += u;
          grad_relation.row(t.r) -= u;
        }
        continue;
      }
      const auto es = entity.row(t.s);
      const auto er = relation.row(t.r);
      const auto eo = entity.row(t.o);
      if (object_side) {
        object_context_backward<S>(kind, es, er, u, grad_entity.row(t.s), grad_relation.row(t.r));
      } else {
        subject_context_backward<S>(kind, er, eo, u, grad_relation.row(t.r), grad_entity.row(t.o));
      }
    }
  }
  if (reg.weight > 0.0) {
    for (const Triple& t : batch) {
      auto gs = grad_entity.row(t.s);
      auto gr = grad_relation.row(t.r);
      auto go = grad_entity.row(t.o);
      total += weight * row_regularizer<S>(kind, entity.row(t.s), reg.weight, &gs, weight);
      total += weight * row_regularizer<S>(kind, relation.row(t.r), reg.weight, &gr, weight);
      total += weight * row_regularizer<S>(kind, entity.row(t.o), reg.weight, &go, weight);
    }
  }
  return total;
}

template double accumulate_batch_gradient<double>(ModelKind, const MatrixT<double>&,
                                                  const MatrixT<double>&, std::span<const Triple>,
                                                  const RegConfig&, double, MatrixT<double>&,
                                                  MatrixT<double>&);
template double accumulate_batch_gradient<float>(ModelKind, const MatrixT<float>&,
                                                 const MatrixT<float>&, std::span<const Triple>,
                                                 const RegConfig&, double, MatrixT<float>&,
                                                 MatrixT<float>&);

GradientVector mean_batch_gradient(const EmbeddingModel& model, std::span<const Triple> triples,
                                   const RegConfig& reg) {
  Matrix ge = Matrix::Zero(model.entity.rows(), model.entity.cols());
  Matrix gr = Matrix::Zero(model.relation.rows(), model.relation.cols());
  if (!triples.empty()) {
    for (const Triple& t : triples) check_ids(model, t);
    const double value = accumulate_batch_gradient<double>(
        model.kind, model.entity, model.relation, triples, reg,
        1.0 / static_cast<double>(triples.size()), ge, gr);
    check_finite(value, "batch loss");
  }
  auto g = GradientVector::dense(std::move(ge), std::move(gr));
  if (!g.all_finite()) throw DivergenceError("non-finite batch gradient");
  return g;
}

}  // namespace kgp
