#pragma once

// Optimality diagnostics at a candidate solution X* of min f over F_{n,k}:
// eigen-gap of the gradient, an explicit strictly complementary dual
// certificate (Z1, Z2, s), KKT residuals and a quadratic-growth probe.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include "fantope/geometry.hpp"
#include "fantope/objectives.hpp"
#include "fantope/random.hpp"

namespace fantope {

// Eigenvalue differences at or below this count as "no gap".
inline constexpr double kGapThreshold = 1e-9;

struct GapReport {
  double gap = 0.0;         // lambda_{n-k} - lambda_{n-k+1} of grad f(X)
  double lambda_nk = 0.0;   // lambda_{n-k}
  double lambda_nk1 = 0.0;  // lambda_{n-k+1}
  int r_star = 0;           // smallest r >= k with mu_r - mu_{r+1} > threshold, mu = eig(-grad f)
};

/// Gap report for a gradient matrix directly. For k == n there is no
/// lambda_{n-k}; gap is reported as +inf.
inline GapReport eigen_gap_of_gradient(const SymMatrix& g, int k,
                                       double threshold = kGapThreshold) {
  const Index n = g.dim();
  detail::require_k(n, k, "eigen_gap");
  const Vector lambda = sym_eigenvalues(g);  // non-increasing
  GapReport rep;
  rep.lambda_nk1 = lambda(n - k);
  if (k < n) {
    rep.lambda_nk = lambda(n - k - 1);
    rep.gap = rep.lambda_nk - rep.lambda_nk1;
  } else {
    rep.lambda_nk = std::numeric_limits<double>::infinity();
    rep.gap = std::numeric_limits<double>::infinity();
  }
  // mu_i = -lambda_{n+1-i}; mu_r - mu_{r+1} = lambda_{n-r} - lambda_{n+1-r} (1-based).
  rep.r_star = static_cast<int>(n);
  for (int r = k; r <= n - 1; ++r) {
    const double mu_r = -lambda(n - r);
    const double mu_r1 = -lambda(n - r - 1);
    if (mu_r - mu_r1 > threshold) {
      rep.r_star = r;
      break;
    }
  }
  return rep;
}

inline GapReport eigen_gap(const SymMatrix& x, const Objective& f, int k,
                           double threshold = kGapThreshold) {
  return eigen_gap_of_gradient(f.evaluate(x).gradient, k, threshold);
}

/// Dual variables of the KKT system grad f(X) = Z1 - Z2 + s I with Z1, Z2 PSD.
struct DualCertificate {
  SymMatrix z1;
  SymMatrix z2;
  double s = 0.0;
};

struct CertificateOptions {
  double gap_threshold = kGapThreshold;
  // Largest allowed ||X* - V||_F, V the projection onto the bottom-k
  // eigenvectors of grad f(X*). A point with duality gap g is within
  // sqrt(2 g / delta) of V, about 1e-5 at g = 1e-10.
  double alignment_tol = 1e-4;
};

/// Builds the strictly complementary certificate at X*: with
/// grad f(X*) = sum_i lambda_i u_i u_i^T and s the midpoint of
/// [lambda_{n-k+1}, lambda_{n-k}],
///   Z1 = sum_{i <= n-k} (lambda_i - s) u_i u_i^T   (rank n - k)
///   Z2 = sum_{i >  n-k} (s - lambda_i) u_i u_i^T   (rank k).
inline DualCertificate build_dual_certificate(const SymMatrix& x_star, const Objective& f, int k,
                                              const CertificateOptions& opts = {}) {
  const Index n = x_star.dim();
  detail::require_k(n, k, "build_dual_certificate");
  if (k == n) throw CertificateError("build_dual_certificate: k == n has no eigen-gap");
  const SymMatrix g = f.evaluate(x_star).gradient;
  const SpectralDecomp d = sym_eig(g);
  const Vector& lambda = d.eigenvalues;
  const Index split = n - k;
  const double gap = lambda(split - 1) - lambda(split);
  if (!(gap > opts.gap_threshold)) {
    throw CertificateError("build_dual_certificate: eigen-gap " + std::to_string(gap) +
                           " is not above the threshold");
  }
  const Matrix& u = d.eigenvectors;
  const Matrix v = u.rightCols(k) * u.rightCols(k).transpose();
  const double misalignment = (x_star.matrix() - v).norm();
  if (misalignment > opts.alignment_tol) {
    throw CertificateError(
        "build_dual_certificate: X* does not span the bottom-k eigenvectors of the gradient "
        "(distance " + std::to_string(misalignment) + ")");
  }

  const double s = 0.5 * (lambda(split - 1) + lambda(split));
  const Vector top = (lambda.head(split).array() - s).matrix();
  const Vector bottom = (s - lambda.tail(k).array()).matrix();
  DualCertificate cert;
  cert.s = s;
  cert.z1 = SymMatrix(Matrix(u.leftCols(split) * top.asDiagonal() * u.leftCols(split).transpose()));
  cert.z2 = SymMatrix(Matrix(u.rightCols(k) * bottom.asDiagonal() * u.rightCols(k).transpose()));
  return cert;
}

inline DualCertificate build_dual_certificate(const ProjectionMatrix& x_star, const Objective& f,
                                              const CertificateOptions& opts = {}) {
  return build_dual_certificate(x_star.matrix(), f, x_star.rank(), opts);
}

/// Individual KKT violations; worst() is the scalar residual.
struct KktReport {
  double stationarity = 0.0;        // ||grad f(X) - Z1 + Z2 - s I||_F
  double complementarity_z1 = 0.0;  // |<Z1, X>|
  double complementarity_z2 = 0.0;  // |<Z2, I - X>|
  double dual_feasibility = 0.0;    // max(0, -lambda_min(Z1), -lambda_min(Z2))
  double primal_feasibility = 0.0;  // spectrum outside [0, 1], |Tr X - k|

  double worst() const {
    return std::max({stationarity, complementarity_z1, complementarity_z2, dual_feasibility,
                     primal_feasibility});
  }
};

inline KktReport kkt_report(const SymMatrix& x, const DualCertificate& cert, const Objective& f,
                            int k) {
  const Index n = x.dim();
  KktReport rep;
  const SymMatrix g = f.evaluate(x).gradient;
  rep.stationarity = (g - cert.z1 + cert.z2 - cert.s * SymMatrix::identity(n)).norm();
  rep.complementarity_z1 = std::abs(inner(cert.z1, x));
  rep.complementarity_z2 = std::abs(inner(cert.z2, SymMatrix::identity(n) - x));
  const Vector e1 = sym_eigenvalues(cert.z1);
  const Vector e2 = sym_eigenvalues(cert.z2);
  rep.dual_feasibility = std::max({0.0, -e1(n - 1), -e2(n - 1)});
  rep.primal_feasibility = FantopePoint{x, k}.infeasibility();
  return rep;
}

inline double kkt_residual(const SymMatrix& x, const DualCertificate& cert, const Objective& f,
                           int k) {
  return kkt_report(x, cert, f, k).worst();
}

/// Number of eigenvalues above `threshold`.
inline int numerical_rank(const SymMatrix& a, double threshold = kGapThreshold) {
  return static_cast<int>((sym_eigenvalues(a).array() > threshold).count());
}

struct GrowthReport {
  int samples = 0;
  int violations = 0;
  // min over samples of (f(X) - f*) - (delta / 2) ||X - X*||_F^2; >= -tol when
  // quadratic growth holds.
  double worst_slack = std::numeric_limits<double>::infinity();
};

/// Samples Fantope points X = (1 - t) X* + t Y, with t log-uniform in
/// [1e-4, 1] and Y a random convex combination of three rank-k projections,
/// and checks f(X) - f(X*) >= (delta / 2) ||X - X*||_F^2 - tol.
inline GrowthReport quadratic_growth_probe(const SymMatrix& x_star, const Objective& f, int k,
                                           double delta, int samples, std::uint64_t seed = 0,
                                           double tol = 1e-8) {
  const Index n = x_star.dim();
  const double f_star = f.value(x_star);
  Rng rng = stream_rng(seed, 0x9a0);
  GrowthReport rep;
  rep.samples = samples;
  for (int s = 0; s < samples; ++s) {
    const double t = std::pow(10.0, -4.0 * rng.uniform());
    Vector w(3);
    for (int i = 0; i < 3; ++i) w(i) = -std::log(1.0 - rng.uniform());
    w *= t / w.sum();
    SymMatrix x = (1.0 - t) * x_star;
    for (int i = 0; i < 3; ++i) x += w(i) * random_projection(n, k, rng).matrix();
    const double d = distance(x, x_star);
    const double slack = (f.value(x) - f_star) - 0.5 * delta * d * d;
    rep.worst_slack = std::min(rep.worst_slack, slack);
    if (slack < -tol) ++rep.violations;
  }
  return rep;
}

}  // namespace fantope
