#pragma once

// Synthetic robust subspace-recovery instances: a Haar-random rank-k ground
// truth P and m unit samples drawn around range(P) with a corruption rate p.
//
//   spiked:    q_i = P z_i / ||P z_i||  w.p. 1 - p,  q_i = z_i  w.p. p
//   corrupted: q_i = P z_i / ||P z_i||, then w.p. p one uniform coordinate is
//              overwritten with +1 or -1
//
// with z_i uniform on the unit sphere (normalized Gaussians).

#include <cstdint>
#include <memory>
#include <string>

#include "fantope/geometry.hpp"
#include "fantope/objectives.hpp"
#include "fantope/random.hpp"

namespace fantope {

enum class ModelKind { Spiked, Corrupted };

inline const char* to_string(ModelKind m) {
  return m == ModelKind::Spiked ? "spiked" : "corrupted";
}

inline ModelKind parse_model_kind(const std::string& s) {
  if (s == "spiked") return ModelKind::Spiked;
  if (s == "corrupted") return ModelKind::Corrupted;
  throw ConfigError("model must be 'spiked' or 'corrupted', got '" + s + "'");
}

struct ModelConfig {
  int n = 100;
  int k = 10;
  int m = 500;
  double p = 0.1;
  ModelKind model = ModelKind::Spiked;
  std::uint64_t seed = 0;

  /// Checks the documented ranges; errors name the offending field.
  void validate() const {
    if (n < 2) throw ConfigError("n must be >= 2");
    if (k < 1 || k >= n) throw ConfigError("k must satisfy 1 <= k < n");
    if (m < 1) throw ConfigError("m must be >= 1");
    if (!(p > 0.0 && p <= 0.5)) throw ConfigError("p must be in (0,0.5]");
  }
};

struct Instance {
  ProjectionMatrix truth;
  std::shared_ptr<const SampleSet> data;
  ModelConfig config;
};

namespace detail {

// Generators accept p = 0 (no corruption) so the clean limit can be exercised;
// ModelConfig::validate() is the user-facing check.
inline void require_generator_config(const ModelConfig& c) {
  if (c.n < 1 || c.k < 1 || c.k > c.n || c.m < 1 || !(c.p >= 0.0 && c.p <= 1.0)) {
    throw InputError("generator: invalid model configuration");
  }
}

inline Vector unit_vector(Index n, Rng& rng) {
  for (;;) {
    Vector z(n);
    for (Index i = 0; i < n; ++i) z(i) = rng.normal();
    const double nz = z.norm();
    if (nz > 0.0) return z / nz;
  }
}

// P z / ||P z|| with z redrawn on the (probability zero) event P z = 0.
// Returns the z that produced it through `z_out`.
inline Vector inlier(const Matrix& frame, Rng& rng, Vector& z_out) {
  for (;;) {
    z_out = unit_vector(frame.rows(), rng);
    Vector pz = frame * (frame.transpose() * z_out);
    const double norm = pz.norm();
    if (norm > 0.0) return pz / norm;
  }
}

inline ProjectionMatrix ground_truth(const ModelConfig& c) {
  Rng rng = stream_rng(c.seed, 0);
  return random_projection(c.n, c.k, rng);
}

}  // namespace detail

/// One spiked-covariance sample; sample i uses stream i + 1.
inline Vector spiked_sample(const ModelConfig& c, const Matrix& frame, Index i) {
  Rng rng = stream_rng(c.seed, static_cast<std::uint64_t>(i) + 1);
  Vector z;
  Vector q = detail::inlier(frame, rng, z);
  if (rng.bernoulli(c.p)) return z;
  return q;
}

/// One corrupted-entries sample and whether it was corrupted.
inline Vector corrupted_sample(const ModelConfig& c, const Matrix& frame, Index i,
                               bool* corrupted = nullptr) {
  Rng rng = stream_rng(c.seed, static_cast<std::uint64_t>(i) + 1);
  Vector z;
  Vector q = detail::inlier(frame, rng, z);
  const bool hit = rng.bernoulli(c.p);
  if (hit) {
    const auto j = static_cast<Index>(rng.index(static_cast<std::uint64_t>(c.n)));
    q(j) = rng.bernoulli(0.5) ? 1.0 : -1.0;
  }
  if (corrupted) *corrupted = hit;
  return q;
}

inline Instance gen_spiked(const ModelConfig& c) {
  detail::require_generator_config(c);
  ProjectionMatrix truth = detail::ground_truth(c);
  Matrix q(c.n, c.m);
  for (Index i = 0; i < c.m; ++i) q.col(i) = spiked_sample(c, truth.frame.basis(), i);
  ModelConfig cfg = c;
  cfg.model = ModelKind::Spiked;
  return {std::move(truth), std::make_shared<const SampleSet>(std::move(q)), cfg};
}

inline Instance gen_corrupted(const ModelConfig& c) {
  detail::require_generator_config(c);
  ProjectionMatrix truth = detail::ground_truth(c);
  Matrix q(c.n, c.m);
  for (Index i = 0; i < c.m; ++i) q.col(i) = corrupted_sample(c, truth.frame.basis(), i);
  ModelConfig cfg = c;
  cfg.model = ModelKind::Corrupted;
  return {std::move(truth), std::make_shared<const SampleSet>(std::move(q)), cfg};
}

inline Instance generate(const ModelConfig& c) {
  return c.model == ModelKind::Spiked ? gen_spiked(c) : gen_corrupted(c);
}

/// The Huber loss matching an instance's model.
inline std::unique_ptr<Objective> make_objective(const Instance& inst, const HuberParams& params) {
  if (inst.config.model == ModelKind::Spiked) {
    return std::make_unique<SpikedLoss>(inst.data, params);
  }
  return std::make_unique<CorruptedLoss>(inst.data, params);
}

/// Recovery error ||X - P||_F.
inline double recovery_error(const SymMatrix& x, const ProjectionMatrix& truth) {
  return distance(x, truth.matrix());
}

}  // namespace fantope
