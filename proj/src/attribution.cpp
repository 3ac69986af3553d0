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

#include "kgpoison/attribution.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <spdlog/spdlog.h>

namespace kgp {

std::string to_string(AttributionMetric metric) {
  switch (metric) {
    case AttributionMetric::kDot:
      return "dot";
    case AttributionMetric::kL2:
      return "l2";
    case AttributionMetric::kCos:
      return "cos";
    case AttributionMetric::kGradDot:
      return "grad-dot";
    case AttributionMetric::kGradL2:
      return "grad-l2";
    case AttributionMetric::kGradCos:
      return "grad-cos";
    case AttributionMetric::kInfluence:
      return "if";
  }
  return "unknown";
}

AttributionMetric parse_attribution_metric(std::string_view name) {
  for (auto m : {AttributionMetric::kDot, AttributionMetric::kL2, AttributionMetric::kCos,
                 AttributionMetric::kGradDot, AttributionMetric::kGradL2,
                 AttributionMetric::kGradCos, AttributionMetric::kInfluence}) {
    if (to_string(m) == name) return m;
  }
  throw ConfigError("unknown attribution metric: " + std::string(name));
}

bool is_gradient_metric(AttributionMetric metric) {
  return metric == AttributionMetric::kGradDot || metric == AttributionMetric::kGradL2 ||
         metric == AttributionMetric::kGradCos;
}

Similarity similarity_of(AttributionMetric metric) {
  switch (metric) {
    case AttributionMetric::kDot:
    case AttributionMetric::kGradDot:
    case AttributionMetric::kInfluence:
      return Similarity::kDot;
    case AttributionMetric::kL2:
    case AttributionMetric::kGradL2:
      return Similarity::kL2;
    case AttributionMetric::kCos:
    case AttributionMetric::kGradCos:
      return Similarity::kCos;
  }
  return Similarity::kDot;
}

namespace {

// Shared kernel once ⟨a,a⟩, ⟨b,b⟩, ⟨a,b⟩ are known. For l2 the caller may pass
// an exact squared distance instead.
double from_inner_products(double aa, double bb, double ab, Similarity kind) {
  switch (kind) {
    case Similarity::kDot:
      return ab;
    case Similarity::kL2:
      return -std::sqrt(std::max(0.0, aa + bb - 2.0 * ab));
    case Similarity::kCos: {
      if (aa <= 0.0 || bb <= 0.0) {
        spdlog::debug("cosine with a zero vector defined as 0");
        return 0.0;
      }
      return std::clamp(ab / (std::sqrt(aa) * std::sqrt(bb)), -1.0, 1.0);
    }
  }
  return 0.0;
}

}  // namespace

double similarity(const Vector& a, const Vector& b, Similarity kind) {
  if (kind == Similarity::kL2) return -(a - b).norm();
  return from_inner_products(a.squaredNorm(), b.squaredNorm(), a.dot(b), kind);
}

double similarity(const GradientVector& a, const GradientVector& b, Similarity kind) {
  return from_inner_products(a.squared_norm(), b.squared_norm(), a.dot(b), kind);
}

double instance_similarity(const EmbeddingModel& model, const Triple& z, const Triple& x,
                           Similarity kind) {
  return similarity(feature_vector(model, z), feature_vector(model, x), kind);
}

double gradient_similarity(const EmbeddingModel& model, const Triple& z, const Triple& x,
                           Similarity kind, const AttributionOptions& options) {
  const RegConfig reg = options.gradient_reg();
  return similarity(loss_gradient(model, z, reg), loss_gradient(model, x, reg), kind);
}

void sort_scores(std::vector<InfluenceScore>& scores) {
  std::sort(scores.begin(), scores.end(), [](const InfluenceScore& a, const InfluenceScore& b) {
    if (a.value != b.value) return a.value > b.value;
    return a.train_index < b.train_index;
  });
}

std::vector<InfluenceScore> rank_candidates(const EmbeddingModel& model, const KnowledgeGraph& kg,
                                            const Triple& z,
                                            std::span<const std::uint32_t> candidates,
                                            AttributionMetric metric,
                                            const AttributionOptions& options,
                                            const GradientVector* inverse_hvp) {
  if (candidates.empty()) throw DataError("rank_candidates: no candidates");
  const Similarity kind = similarity_of(metric);
  std::vector<InfluenceScore> scores;
  scores.reserve(candidates.size());
  auto push = [&](std::uint32_t idx, double value) {
    if (!std::isfinite(value)) throw DivergenceError("non-finite influence score");
    scores.push_back({z, kg.train().at(idx), idx, metric, value});
  };

  if (metric == AttributionMetric::kInfluence) {
    if (inverse_hvp == nullptr) throw ConfigError("influence metric requires an inverse HVP");
    const RegConfig reg = options.gradient_reg();
    for (std::uint32_t idx : candidates) {
      push(idx, inverse_hvp->dot(loss_gradient(model, kg.train().at(idx), reg)));
    }
  } else if (is_gradient_metric(metric)) {
    const RegConfig reg = options.gradient_reg();
    const GradientVector gz = loss_gradient(model, z, reg);
    const double zz = gz.squared_norm();
    for (std::uint32_t idx : candidates) {
      const GradientVector gx = loss_gradient(model, kg.train().at(idx), reg);
      push(idx, from_inner_products(zz, gx.squared_norm(), gz.dot(gx), kind));
    }
  } else {
    const Vector fz = feature_vector(model, z);
    for (std::uint32_t idx : candidates) {
      push(idx, similarity(fz, feature_vector(model, kg.train().at(idx)), kind));
    }
  }
  sort_scores(scores);
  return scores;
}

std::string influence_csv_header() {
  return "target_s,target_r,target_o,cand_s,cand_r,cand_o,metric,value\n";
}

std::string influence_csv_rows(const Vocabulary& vocab, std::span<const InfluenceScore> scores) {
  std::ostringstream out;
  char value[64];
  for (const auto& s : scores) {
    std::snprintf(value, sizeof(value), "%.17g", s.value);
    out << csv_field(vocab.entity_name(s.target.s)) << ','
        << csv_field(vocab.relation_name(s.target.r)) << ','
        << csv_field(vocab.entity_name(s.target.o)) << ','
        << csv_field(vocab.entity_name(s.candidate.s)) << ','
        << csv_field(vocab.relation_name(s.candidate.r)) << ','
        << csv_field(vocab.entity_name(s.candidate.o)) << ',' << to_string(s.metric) << ','
        << value << '\n';
  }
  return out.str();
}

}  // namespace kgp
