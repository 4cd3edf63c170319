#pragma once

// Test-only reference computations. Nothing here calls into the library's
// spectral or projection code: eigenvalues come from a cyclic Jacobi sweep,
// the Fantope projection from plain bisection on the threshold.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <utility>
#include <vector>

namespace oracle {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct Eig {
  VectorXd values;   // non-increasing
  MatrixXd vectors;  // columns
};

// Cyclic Jacobi rotations until the off-diagonal mass is negligible.
inline Eig jacobi_eig(MatrixXd a) {
  const Eigen::Index n = a.rows();
  MatrixXd v = MatrixXd::Identity(n, n);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    if (off <= 1e-30 * std::max(1.0, a.squaredNorm())) break;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::sort(order.begin(), order.end(), [&](auto x, auto y) { return a(x, x) > a(y, y); });
  Eig out{VectorXd(n), MatrixXd(n, n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    out.values(i) = a(order[i], order[i]);
    out.vectors.col(i) = v.col(order[i]);
  }
  return out;
}

// Euclidean projection onto {0 <= X <= I, Tr X = k} by 200 bisection steps on
// the threshold over [min eig - 1, max eig].
inline MatrixXd bisection_fantope_projection(const MatrixXd& x, int k, int iters = 200) {
  const Eig e = jacobi_eig(0.5 * (x + x.transpose()));
  auto clipped_sum = [&](double theta) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < e.values.size(); ++i)
      s += std::min(std::max(e.values(i) - theta, 0.0), 1.0);
    return s;
  };
  double lo = e.values.minCoeff() - 1.0;
  double hi = e.values.maxCoeff();
  for (int it = 0; it < iters; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (clipped_sum(mid) > k) lo = mid; else hi = mid;
  }
  const double theta = 0.5 * (lo + hi);
  MatrixXd out = MatrixXd::Zero(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < e.values.size(); ++i) {
    const double w = std::min(std::max(e.values(i) - theta, 0.0), 1.0);
    out += w * e.vectors.col(i) * e.vectors.col(i).transpose();
  }
  return out;
}

// Central difference of f along direction d at x.
inline double directional_derivative(const std::function<double(const MatrixXd&)>& f,
                                     const MatrixXd& x, const MatrixXd& d, double h) {
  return (f(x + h * d) - f(x - h * d)) / (2.0 * h);
}

// Full gradient of f over symmetric matrices by central differences along the
// orthonormal basis e_i e_i^T and (e_i e_j^T + e_j e_i^T) / sqrt 2.
inline MatrixXd fd_gradient(const std::function<double(const MatrixXd&)>& f, const MatrixXd& x,
                            double h) {
  const Eigen::Index n = x.rows();
  MatrixXd g = MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      MatrixXd e = MatrixXd::Zero(n, n);
      if (i == j) {
        e(i, i) = 1.0;
        g(i, i) = directional_derivative(f, x, e, h);
      } else {
        e(i, j) = e(j, i) = 1.0 / std::sqrt(2.0);
        g(i, j) = g(j, i) = directional_derivative(f, x, e, h) / std::sqrt(2.0);
      }
    }
  }
  return g;
}

inline MatrixXd random_symmetric(Eigen::Index n, std::mt19937_64& gen, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  MatrixXd a(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i <= j; ++i) a(i, j) = a(j, i) = nd(gen);
  return a;
}

// Random rank-k orthogonal projection via Gram-Schmidt of Gaussian columns.
inline MatrixXd random_projection(Eigen::Index n, int k, std::mt19937_64& gen) {
  std::normal_distribution<double> nd;
  MatrixXd q(n, k);
  for (int j = 0; j < k; ++j) {
    VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = nd(gen);
    for (int l = 0; l < j; ++l) v -= q.col(l).dot(v) * q.col(l);
    for (int l = 0; l < j; ++l) v -= q.col(l).dot(v) * q.col(l);
    q.col(j) = v.normalized();
  }
  return q * q.transpose();
}

}  // namespace oracle
