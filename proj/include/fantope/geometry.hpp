#pragma once

// Projections and linear oracles for the rank-k projection matrices P_{n,k}
// and their convex hull, the Fantope F_{n,k} = {X : 0 <= X <= I, Tr X = k}.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fantope/spectral.hpp"

namespace fantope {

// An eigenvalue counts toward the rank of a projected point above this value.
inline constexpr double kRankThreshold = 1e-9;

/// Point of the Fantope: symmetric, spectrum in [0, 1], trace k.
struct FantopePoint {
  SymMatrix matrix;
  int k = 0;

  /// Largest violation of the Fantope constraints (0 for an exact member).
  double infeasibility() const {
    const Vector ev = sym_eigenvalues(matrix);
    const double below = std::max(0.0, -ev(ev.size() - 1));
    const double above = std::max(0.0, ev(0) - 1.0);
    const double trace = std::abs(matrix.trace() - static_cast<double>(k));
    return std::max({below, above, trace});
  }

  bool feasible(double tol = 1e-10) const {
    const Vector ev = sym_eigenvalues(matrix);
    return ev(ev.size() - 1) >= -tol && ev(0) <= 1.0 + tol &&
           std::abs(matrix.trace() - static_cast<double>(k)) <= tol * std::max(1, k);
  }
};

/// Rank-k orthogonal projection Q Q^T, carried by its frame. `unique` is false
/// when the defining eigenvalue problem had a tie at position k.
struct ProjectionMatrix {
  OrthoFrame frame;
  bool unique = true;

  Index dim() const { return frame.rows(); }
  int rank() const { return static_cast<int>(frame.cols()); }
  SymMatrix matrix() const { return frame.projector(); }
  FantopePoint as_fantope_point() const { return {matrix(), rank()}; }
};

/// Solution of sum_i min(max(gamma_i - theta, 0), 1) = k.
struct WaterfillResult {
  double theta = 0.0;
  Vector clipped;  // gamma_i^+(theta), aligned with the non-increasing spectrum
  int rank = 0;    // entries of `clipped` above kRankThreshold
};

namespace detail {

inline void require_k(Index n, int k, const char* what) {
  if (k < 1 || k > n) {
    throw InputError(std::string(what) + ": need 1 <= k <= n, got n=" + std::to_string(n) +
                     " k=" + std::to_string(k));
  }
}

inline double clipped_sum(const Vector& gamma, double theta) {
  double s = 0.0;
  for (Index i = 0; i < gamma.size(); ++i) s += std::clamp(gamma(i) - theta, 0.0, 1.0);
  return s;
}

inline Vector clip(const Vector& gamma, double theta) {
  return (gamma.array() - theta).max(0.0).min(1.0).matrix();
}

}  // namespace detail

/// Water-filling threshold for a non-increasing spectrum `gamma`.
///
/// The map theta -> sum_i gamma_i^+(theta) is continuous and non-increasing;
/// it equals n at gamma_n - 1 and 0 at gamma_1, so bisection over that bracket
/// converges. Once the bracket isolates the active set, theta is recomputed in
/// closed form from the partially clipped eigenvalues.
inline WaterfillResult waterfill(const Vector& gamma, int k) {
  const Index n = gamma.size();
  detail::require_k(n, k, "waterfill");
  const double target = static_cast<double>(k);

  double lo = gamma(n - 1) - 1.0;  // sum == n >= k
  double hi = gamma(0);            // sum == 0 <= k
  double theta = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    theta = 0.5 * (lo + hi);
    const double s = detail::clipped_sum(gamma, theta);
    if (std::abs(s - target) <= 1e-12) break;
    if (s > target) {
      lo = theta;
    } else {
      hi = theta;
    }
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(theta))) break;
  }

  // Polish: sum over the linear part (0 < gamma - theta < 1) plus saturated count.
  double linear_sum = 0.0;
  int linear_count = 0;
  int saturated = 0;
  for (Index i = 0; i < n; ++i) {
    const double v = gamma(i) - theta;
    if (v >= 1.0) {
      ++saturated;
    } else if (v > 0.0) {
      linear_sum += gamma(i);
      ++linear_count;
    }
  }
  if (linear_count > 0) {
    const double polished = (linear_sum + saturated - target) / linear_count;
    if (std::abs(detail::clipped_sum(gamma, polished) - target) <=
        std::abs(detail::clipped_sum(gamma, theta) - target)) {
      theta = polished;
    }
  }

  WaterfillResult out;
  out.theta = theta;
  out.clipped = detail::clip(gamma, theta);
  out.rank = static_cast<int>((out.clipped.array() > kRankThreshold).count());
  return out;
}

struct FantopeProjection {
  FantopePoint point;
  WaterfillResult waterfill;
};

/// Euclidean projection onto F_{n,k} from a precomputed decomposition.
inline FantopeProjection fantope_project(const SpectralDecomp& decomp, int k) {
  WaterfillResult wf = waterfill(decomp.eigenvalues, k);
  // Only eigenvectors with nonzero weight contribute.
  const Index r = static_cast<Index>((wf.clipped.array() > 0.0).count());
  const Matrix& u = decomp.eigenvectors;
  Matrix x = u.leftCols(r) * wf.clipped.head(r).asDiagonal() * u.leftCols(r).transpose();
  return {FantopePoint{SymMatrix(std::move(x)), k}, std::move(wf)};
}

/// Euclidean projection onto F_{n,k}.
inline FantopeProjection fantope_project(const SymMatrix& x, int k) {
  detail::require_k(x.dim(), k, "fantope_project");
  return fantope_project(sym_eig(x), k);
}

/// True iff the Fantope projection of the decomposed matrix has rank <= r,
/// i.e. sum_{i<=r} min(gamma_i - gamma_{r+1}, 1) >= k.
inline bool projection_rank_at_most(const SpectralDecomp& decomp, int k, int r) {
  const Index n = decomp.dim();
  if (k < 1 || r < k || r > n - 1) {
    throw InputError("projection_rank_at_most: need 1 <= k <= r <= n-1");
  }
  const Vector& g = decomp.eigenvalues;
  double s = 0.0;
  for (Index i = 0; i < r; ++i) s += std::min(g(i) - g(r), 1.0);
  return s >= static_cast<double>(k) - 1e-12;
}

namespace detail {

// Eigenvalues within this relative distance count as tied.
inline bool tied(const Vector& values, Index a, Index b) {
  const double scale = 1.0 + values.cwiseAbs().maxCoeff();
  return values(a) - values(b) <= 1e-12 * scale;
}

inline ProjectionMatrix top_k_projection(const SpectralDecomp& decomp, int k) {
  const Index n = decomp.dim();
  ProjectionMatrix p{detail::FrameAccess::make(decomp.eigenvectors.leftCols(k)), true};
  if (k < n) p.unique = !tied(decomp.eigenvalues, k - 1, k);
  return p;
}

}  // namespace detail

/// Projection onto the span of the top-k eigenvectors of X; a maximizer of
/// <P, X> over P_{n,k}. Ties at position k are flagged, not rejected.
inline ProjectionMatrix pnk_project(const SpectralDecomp& decomp, int k) {
  detail::require_k(decomp.dim(), k, "pnk_project");
  return detail::top_k_projection(decomp, k);
}

inline ProjectionMatrix pnk_project(const SymMatrix& x, int k) {
  detail::require_k(x.dim(), k, "pnk_project");
  return detail::top_k_projection(sym_eig(x), k);
}

/// Linear minimization oracle: argmin over P_{n,k} of <V, G>, the projection
/// onto the eigenvectors of the k smallest eigenvalues of G.
inline ProjectionMatrix fantope_lmo(const SymMatrix& g, int k) { return pnk_project(-g, k); }

}  // namespace fantope
