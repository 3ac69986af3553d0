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

#ifndef KGPOISON_INFLUENCE_HPP_
#define KGPOISON_INFLUENCE_HPP_

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "kgpoison/attribution.hpp"
#include "kgpoison/gradient.hpp"
#include "kgpoison/kg_store.hpp"
#include "kgpoison/model.hpp"

namespace kgp {

/// Influence-function estimator settings.
struct IFConfig {
  double damping = 0.01;   // λ
  double scale = 10.0;     // σ; needs σ > (λ_max(H) + λ) / 2
  int depth = 100;         // D, LiSSA recursion steps per repeat
  int batch_size = 16;     // b, train triples sampled per step
  int repeats = 1;         // R
  double fd_step = 1e-3;   // δ, relative to the RMS parameter magnitude
  // Divergence checks on the iterates r_j.
  double max_norm_ratio = 1e8;    // abort when ‖r_j‖ > ratio · ‖g‖
  double growth_tolerance = 1.5;  // abort when ‖Δr_D‖ > tol · ‖Δr_{D/2}‖
  // Damping grid λ₀·2^i, i < damping_grid_size.
  double damping_grid_base = 1e-3;
  int damping_grid_size = 24;

  void validate() const;
};

nlohmann::json to_json(const IFConfig& config);
IFConfig if_config_from_json(const nlohmann::json& j, IFConfig base = {});

/// One LiSSA iterate norm, for the `target_id,repeat,depth,iterate_norm` log.
struct IterateRecord {
  int repeat = 0;
  int depth = 0;
  double norm = 0.0;
};
using IterateObserver = std::function<void(const IterateRecord&)>;

/// Central-difference Hessian-vector product: with v̂ = v/‖v‖,
/// [grad_at(h·v̂) − grad_at(−h·v̂)] · ‖v‖ / (2h), where grad_at(d) is the
/// gradient at θ̂ + d. Returns the zero vector for v = 0.
template <class V, class GradAt>
V central_difference_hvp(GradAt&& grad_at, const V& v, double step) {
  const double nv = v.norm();
  if (nv == 0.0) return 0.0 * v;
  const V unit = (1.0 / nv) * v;
  V plus = grad_at((step)*unit);
  const V minus = grad_at((-step) * unit);
  plus -= minus;
  plus *= nv / (2.0 * step);
  return plus;
}

/// Damped LiSSA recursion, generic over the vector type:
///   r₀ = g;  r_{j+1} = g + r_j − (hvp(r_j) + λ·r_j)/σ  for j < D,
/// estimate = mean over R repeats of r_D/σ ≈ (H + λI)⁻¹ g.
/// `hvp(v, repeat, step)` evaluates the (possibly sampled) Hessian product.
/// Throws DivergenceError when an iterate is non-finite, exceeds
/// max_norm_ratio·‖g‖, or the increment ‖r_{j+1} − r_j‖ at depth D exceeds
/// growth_tolerance times the one at depth D/2.
template <class V, class Hvp>
V lissa(const V& g, Hvp&& hvp, const IFConfig& cfg, const IterateObserver& observer = {}) {
  const double gnorm = g.norm();
  if (!(gnorm > 0.0)) throw DataError("inverse HVP of a zero vector");
  const double lambda = cfg.damping;
  const double sigma = cfg.scale;
  V estimate = 0.0 * g;
  for (int rep = 0; rep < cfg.repeats; ++rep) {
    V r = g;
    double half_step = 0.0;
    double last_step = 0.0;
    for (int j = 0; j < cfg.depth; ++j) {
      const V hv = hvp(r, rep, j);
      V next = (1.0 - lambda / sigma) * r;
      next -= (1.0 / sigma) * hv;
      next += g;
      V delta = next;
      delta -= r;
      last_step = delta.norm();
      r = std::move(next);
      const double norm = r.norm();
      if (observer) observer({rep, j + 1, norm});
      if (!std::isfinite(norm) || norm > cfg.max_norm_ratio * gnorm) {
        throw DivergenceError("LiSSA diverged at depth " + std::to_string(j + 1) +
                              " (iterate norm " + std::to_string(norm) +
                              "); increase damping or scale");
      }
      if (j + 1 == cfg.depth / 2) half_step = last_step;
    }
    // A convergent series has shrinking (or, with sampling, flat) increments;
    // growing ones mean some |1 − (μ + λ)/σ| > 1.
    if (cfg.depth >= 4 && last_step > cfg.growth_tolerance * half_step) {
      throw DivergenceError("LiSSA increments growing (" + std::to_string(half_step) + " -> " +
                            std::to_string(last_step) + "); increase damping or scale");
    }
    estimate += (1.0 / sigma) * r;
  }
  estimate *= 1.0 / static_cast<double>(cfg.repeats);
  return estimate;
}

/// Smallest λ in the grid λ₀·2^i for which lissa converges on every probe.
template <class V, class HvpFactory>
double tune_damping_generic(std::span<const V> probes, HvpFactory&& make_hvp, IFConfig cfg) {
  if (probes.empty()) throw DataError("tune_damping: no probe gradients");
  for (int i = 0; i < cfg.damping_grid_size; ++i) {
    cfg.damping = cfg.damping_grid_base * std::ldexp(1.0, i);
    bool ok = true;
    for (std::size_t p = 0; p < probes.size() && ok; ++p) {
      try {
        (void)lissa(probes[p], make_hvp(p), cfg);
      } catch (const DivergenceError&) {
        ok = false;
      }
    }
    if (ok) return cfg.damping;
  }
  throw DivergenceError("tune_damping: no damping value in the grid converges");
}

/// Estimate of (H + λI)⁻¹ g(z) for one target.
struct InverseHVP {
  Triple target;
  GradientVector vector;
};

/// Finite-difference step actually used for a model: δ · RMS(θ).
double fd_step_for(const EmbeddingModel& model, double relative_step);

/// Hessian of the mean loss over `sample` times v, by central differences of
/// the analytic gradient.
GradientVector hvp(const EmbeddingModel& model, std::span<const Triple> sample,
                   const GradientVector& v, double relative_step, const RegConfig& reg);

/// LiSSA estimate of H⁻¹ g_z where H is the mean train-loss Hessian; step j
/// of repeat i samples b train triples with a seed-derived generator.
InverseHVP inverse_hvp_lissa(const EmbeddingModel& model, const KnowledgeGraph& kg,
                             const Triple& target, const GradientVector& g_z,
                             const IFConfig& config, const RegConfig& reg, std::uint64_t seed,
                             const IterateObserver& observer = {});

/// φ_IF(z, x) = ⟨H⁻¹ g(z), g(x)⟩.
double if_score(const EmbeddingModel& model, const Triple& x, const InverseHVP& inverse_hvp,
                const RegConfig& reg);

/// Grid search for the damping (see tune_damping_generic) on model gradients.
double tune_damping(const EmbeddingModel& model, const KnowledgeGraph& kg,
                    std::span<const GradientVector> probe_gradients, const IFConfig& config,
                    const RegConfig& reg, std::uint64_t seed);

}  // namespace kgp

#endif  // KGPOISON_INFLUENCE_HPP_
