#pragma once

// Dense symmetric spectral kernels: symmetric matrices, orthonormal frames,
// full eigendecomposition, sign-normalized thin QR and orthogonal iteration.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "fantope/errors.hpp"

namespace fantope {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Dense real symmetric n x n matrix. Symmetry is exact: every constructor
/// replaces the input A by (A + A^T) / 2.
class SymMatrix {
 public:
  SymMatrix() = default;

  explicit SymMatrix(const Matrix& a) : m_(symmetrized(a)) {}
  explicit SymMatrix(Matrix&& a) : m_(std::move(a)) { symmetrize_in_place(m_); }

  static SymMatrix zero(Index n) { return SymMatrix(Matrix::Zero(n, n)); }
  static SymMatrix identity(Index n) { return SymMatrix(Matrix::Identity(n, n)); }
  static SymMatrix diagonal(const Vector& d) { return SymMatrix(Matrix(d.asDiagonal())); }

  Index dim() const { return m_.rows(); }
  const Matrix& matrix() const { return m_; }
  double operator()(Index i, Index j) const { return m_(i, j); }

  double trace() const { return m_.trace(); }
  double norm() const { return m_.norm(); }
  bool all_finite() const { return m_.allFinite(); }

  SymMatrix& operator+=(const SymMatrix& o) {
    m_ += o.m_;
    return *this;
  }
  SymMatrix& operator-=(const SymMatrix& o) {
    m_ -= o.m_;
    return *this;
  }
  SymMatrix& operator*=(double s) {
    m_ *= s;
    return *this;
  }

  friend SymMatrix operator+(SymMatrix a, const SymMatrix& b) { return a += b; }
  friend SymMatrix operator-(SymMatrix a, const SymMatrix& b) { return a -= b; }
  friend SymMatrix operator*(double s, SymMatrix a) { return a *= s; }
  friend SymMatrix operator*(SymMatrix a, double s) { return a *= s; }
  friend SymMatrix operator-(SymMatrix a) { return a *= -1.0; }

 private:
  static Matrix symmetrized(const Matrix& a) {
    Matrix out = a;
    symmetrize_in_place(out);
    return out;
  }
  static void symmetrize_in_place(Matrix& a) {
    if (a.rows() != a.cols()) {
      throw InputError("SymMatrix: matrix is " + std::to_string(a.rows()) + "x" +
                       std::to_string(a.cols()) + ", expected square");
    }
    if (a.rows() < 1) throw InputError("SymMatrix: dimension must be >= 1");
    const Index n = a.rows();
    for (Index j = 0; j < n; ++j) {
      for (Index i = j + 1; i < n; ++i) {
        const double v = 0.5 * (a(i, j) + a(j, i));
        a(i, j) = v;
        a(j, i) = v;
      }
    }
  }

  Matrix m_;
};

/// Frobenius inner product <A, B> = Tr(A^T B).
inline double inner(const SymMatrix& a, const SymMatrix& b) {
  return a.matrix().cwiseProduct(b.matrix()).sum();
}

inline double distance(const SymMatrix& a, const SymMatrix& b) {
  return (a.matrix() - b.matrix()).norm();
}

// Tolerance for the orthonormality invariant, per column.
inline constexpr double kFrameTolerance = 1e-12;

class OrthoFrame;
namespace detail {
struct FrameAccess;
}

/// n x k matrix with orthonormal columns.
class OrthoFrame {
 public:
  OrthoFrame() = default;

  // Accepts a basis that is already orthonormal; re-orthonormalizes it (thin
  // QR) when ||Q^T Q - I||_F exceeds 1e-12 k.
  explicit OrthoFrame(Matrix q);

  Index rows() const { return q_.rows(); }
  Index cols() const { return q_.cols(); }
  const Matrix& basis() const { return q_; }

  /// Q Q^T.
  SymMatrix projector() const { return SymMatrix(Matrix(q_ * q_.transpose())); }

  double orthonormality_error() const {
    return (q_.transpose() * q_ - Matrix::Identity(q_.cols(), q_.cols())).norm();
  }

 private:
  friend struct detail::FrameAccess;
  struct Trusted {};
  OrthoFrame(Matrix q, Trusted) : q_(std::move(q)) {}

  Matrix q_;
};

/// Eigenvalues sorted non-increasing, with the matching orthonormal
/// eigenvectors stored column-wise.
struct SpectralDecomp {
  Vector eigenvalues;
  Matrix eigenvectors;

  Index dim() const { return eigenvalues.size(); }

  SymMatrix reconstruct() const {
    return SymMatrix(Matrix(eigenvectors * eigenvalues.asDiagonal() * eigenvectors.transpose()));
  }
};

struct QrResult {
  OrthoFrame q;
  Matrix r;  // k x k upper triangular, non-negative diagonal
};

namespace detail {

struct FrameAccess {
  static OrthoFrame make(Matrix q) { return OrthoFrame(std::move(q), OrthoFrame::Trusted{}); }
};

// Reorders an ascending eigen-solver output to non-increasing order. Ties keep
// the backend's relative order (original-index tiebreak).
inline SpectralDecomp sorted_descending(const Vector& values, const Matrix& vectors) {
  const Index n = values.size();
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return values(a) > values(b); });
  SpectralDecomp out;
  out.eigenvalues.resize(n);
  out.eigenvectors.resize(vectors.rows(), n);
  for (Index i = 0; i < n; ++i) {
    out.eigenvalues(i) = values(order[static_cast<std::size_t>(i)]);
    out.eigenvectors.col(i) = vectors.col(order[static_cast<std::size_t>(i)]);
  }
  return out;
}

inline void require_finite(const SymMatrix& a, const char* what) {
  if (!a.all_finite()) throw InputError(std::string(what) + ": matrix has non-finite entries");
}

}  // namespace detail

/// Full symmetric eigendecomposition, eigenvalues non-increasing.
inline SpectralDecomp sym_eig(const SymMatrix& a) {
  detail::require_finite(a, "sym_eig");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(a.matrix());
  if (solver.info() != Eigen::Success) throw InputError("sym_eig: eigen-solver did not converge");
  return detail::sorted_descending(solver.eigenvalues(), solver.eigenvectors());
}

/// Eigenvalues only, non-increasing.
inline Vector sym_eigenvalues(const SymMatrix& a) {
  detail::require_finite(a, "sym_eigenvalues");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(a.matrix(), Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw InputError("sym_eigenvalues: eigen-solver did not converge");
  }
  return solver.eigenvalues().reverse();
}

/// Thin QR of an n x k matrix with the diagonal of R forced non-negative.
/// Throws DegenerateFrameError when sigma_min(Z) <= 1e-12 sigma_max(Z).
inline QrResult qr_orthonormalize(const Matrix& z) {
  const Index n = z.rows();
  const Index k = z.cols();
  if (k < 1 || k > n) {
    throw InputError("qr_orthonormalize: need 1 <= k <= n, got n=" + std::to_string(n) +
                     " k=" + std::to_string(k));
  }
  if (!z.allFinite()) throw InputError("qr_orthonormalize: non-finite entries");

  Eigen::HouseholderQR<Matrix> qr(z);
  Matrix q = qr.householderQ() * Matrix::Identity(n, k);
  Matrix r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();

  const Vector sv = Eigen::JacobiSVD<Matrix>(r).singularValues();
  if (sv(0) == 0.0 || sv(k - 1) <= 1e-12 * sv(0)) {
    throw DegenerateFrameError("qr_orthonormalize: input is numerically rank deficient");
  }

  for (Index j = 0; j < k; ++j) {
    if (r(j, j) < 0.0) {
      q.col(j) *= -1.0;
      r.row(j) *= -1.0;
    }
  }

  // One refinement pass for the rare case where Householder loses orthogonality.
  const double err = (q.transpose() * q - Matrix::Identity(k, k)).norm();
  if (err > kFrameTolerance * static_cast<double>(k)) {
    QrResult again = qr_orthonormalize(q);
    return {std::move(again.q), again.r * r};
  }
  return {detail::FrameAccess::make(std::move(q)), std::move(r)};
}

inline OrthoFrame::OrthoFrame(Matrix q) : q_(std::move(q)) {
  if (q_.cols() < 1 || q_.cols() > q_.rows()) {
    throw InputError("OrthoFrame: need 1 <= cols <= rows");
  }
  if (orthonormality_error() > kFrameTolerance * static_cast<double>(q_.cols())) {
    q_ = qr_orthonormalize(q_).q.basis();
  }
}

struct SubspaceIteration {
  OrthoFrame frame;
  int iterations = 0;
  double last_change = 0.0;  // ||Q_{s+1}Q_{s+1}^T - Q_s Q_s^T||_F of the final step
};

/// Orthogonal (subspace) iteration: (Q, R) <- QR(A Q), repeated.
/// A is expected to be PSD already; no shift is applied. Stops after `iters`
/// steps or once the subspace change drops to `tol`.
inline SubspaceIteration orthogonal_iteration(const SymMatrix& a, const OrthoFrame& start,
                                              int iters, double tol) {
  if (start.rows() != a.dim()) throw InputError("orthogonal_iteration: dimension mismatch");
  SubspaceIteration out{start, 0, 0.0};
  Matrix prev = start.basis() * start.basis().transpose();
  for (int s = 0; s < iters; ++s) {
    QrResult step = qr_orthonormalize(a.matrix() * out.frame.basis());
    Matrix next = step.q.basis() * step.q.basis().transpose();
    out.last_change = (next - prev).norm();
    out.frame = std::move(step.q);
    out.iterations = s + 1;
    prev = std::move(next);
    if (out.last_change <= tol) break;
  }
  return out;
}

}  // namespace fantope
