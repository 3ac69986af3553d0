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

#ifndef KGPOISON_ATTRIBUTION_HPP_
#define KGPOISON_ATTRIBUTION_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kgpoison/gradient.hpp"
#include "kgpoison/kg_store.hpp"
#include "kgpoison/model.hpp"

namespace kgp {

enum class Similarity { kDot, kL2, kCos };

/// Instance-attribution metrics φ(z, x).
enum class AttributionMetric { kDot, kL2, kCos, kGradDot, kGradL2, kGradCos, kInfluence };

/// "dot", "l2", "cos", "grad-dot", "grad-l2", "grad-cos", "if".
std::string to_string(AttributionMetric metric);
AttributionMetric parse_attribution_metric(std::string_view name);
bool is_gradient_metric(AttributionMetric metric);
Similarity similarity_of(AttributionMetric metric);

struct AttributionOptions {
  RegConfig reg;
  /// Include the regularizer in attribution gradients (it is part of the
  /// trained loss). Off for ablations.
  bool include_regularizer = true;

  RegConfig gradient_reg() const { return include_regularizer ? reg : RegConfig{0.0}; }
};

struct InfluenceScore {
  Triple target;
  Triple candidate;
  std::uint32_t train_index = 0;
  AttributionMetric metric = AttributionMetric::kCos;
  double value = 0.0;
};

/// dot: ⟨a,b⟩; l2: −‖a−b‖₂; cos: ⟨a,b⟩/(‖a‖‖b‖), defined as 0 when either
/// norm is zero.
double similarity(const Vector& a, const Vector& b, Similarity kind);
double similarity(const GradientVector& a, const GradientVector& b, Similarity kind);

double instance_similarity(const EmbeddingModel& model, const Triple& z, const Triple& x,
                           Similarity kind);

double gradient_similarity(const EmbeddingModel& model, const Triple& z, const Triple& x,
                           Similarity kind, const AttributionOptions& options);

/// Scores each train triple indexed by `candidates` against target `z` and
/// orders them by descending value, ties by ascending train index.
/// For AttributionMetric::kInfluence, `inverse_hvp` (≈ H⁻¹ g(z)) is required
/// and φ(z, x) = ⟨inverse_hvp, g(x)⟩. Throws DataError on empty candidates.
std::vector<InfluenceScore> rank_candidates(const EmbeddingModel& model, const KnowledgeGraph& kg,
                                            const Triple& z,
                                            std::span<const std::uint32_t> candidates,
                                            AttributionMetric metric,
                                            const AttributionOptions& options,
                                            const GradientVector* inverse_hvp = nullptr);

/// Sorts scores descending by value, ties by ascending train index.
void sort_scores(std::vector<InfluenceScore>& scores);

std::string influence_csv_header();
std::string influence_csv_rows(const Vocabulary& vocab, std::span<const InfluenceScore> scores);

}  // namespace kgp

#endif  // KGPOISON_ATTRIBUTION_HPP_
