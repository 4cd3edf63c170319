#pragma once

// Portable seeded random streams. Every draw is derived from std::mt19937_64
// (bit-exact across standard libraries) with hand-written uniform and normal
// transforms, since std:: distributions are implementation-defined.
//
// Stream splitting: stream_rng(seed, s) seeds an independent engine from a
// SplitMix64 hash of (seed, s). Generators use stream 0 for the ground truth
// and stream i + 1 for sample i, so samples can be drawn in any order.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "fantope/geometry.hpp"

namespace fantope {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller (one value per call; no cached pair).
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  bool bernoulli(double p) { return uniform() < p; }

  /// Uniform integer in [0, n).
  std::uint64_t index(std::uint64_t n) {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(engine_()) * n) >> 64);
  }

  Matrix gaussian(Index rows, Index cols) {
    Matrix out(rows, cols);
    for (Index j = 0; j < cols; ++j) {
      for (Index i = 0; i < rows; ++i) out(i, j) = normal();
    }
    return out;
  }

  /// Symmetric matrix with N(0,1) entries on and above the diagonal.
  SymMatrix gaussian_symmetric(Index n) {
    Matrix a(n, n);
    for (Index j = 0; j < n; ++j) {
      for (Index i = 0; i <= j; ++i) {
        a(i, j) = normal();
        a(j, i) = a(i, j);
      }
    }
    return SymMatrix(std::move(a));
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

inline Rng stream_rng(std::uint64_t seed, std::uint64_t stream) {
  return Rng(splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x5851F42D4C957F2DULL)));
}

/// Haar-distributed rank-k projection: QR of an n x k standard Gaussian matrix.
inline ProjectionMatrix random_projection(Index n, int k, Rng& rng) {
  detail::require_k(n, k, "random_projection");
  for (;;) {
    try {
      return ProjectionMatrix{qr_orthonormalize(rng.gaussian(n, k)).q, true};
    } catch (const DegenerateFrameError&) {
      // probability zero; redraw
    }
  }
}

/// Convex combination of `parts` random projections with uniform-simplex
/// weights; a point of the Fantope that is typically of rank > k.
inline FantopePoint random_fantope_point(Index n, int k, Rng& rng, int parts = 3) {
  Vector w(parts);
  for (int i = 0; i < parts; ++i) w(i) = -std::log(1.0 - rng.uniform());
  w /= w.sum();
  SymMatrix x = SymMatrix::zero(n);
  for (int i = 0; i < parts; ++i) x += w(i) * random_projection(n, k, rng).matrix();
  return {std::move(x), k};
}

}  // namespace fantope
