#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "fantope/spectral.hpp"
#include "oracles.hpp"

using namespace fantope;

namespace {

Matrix gaussian(Index rows, Index cols, std::mt19937_64& gen) {
  std::normal_distribution<double> nd;
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = nd(gen);
  return m;
}

}  // namespace

TEST(SymMatrix, SymmetrizesExactly) {
  Matrix a(2, 2);
  a << 1.0, 2.0, 4.0, 3.0;
  SymMatrix s(a);
  EXPECT_EQ(s(0, 1), 3.0);
  EXPECT_EQ(s(1, 0), 3.0);
  EXPECT_EQ((s.matrix() - s.matrix().transpose()).norm(), 0.0);
}

TEST(SymMatrix, RejectsNonSquare) {
  EXPECT_THROW(SymMatrix(Matrix::Zero(2, 3)), InputError);
  EXPECT_THROW(SymMatrix(Matrix(0, 0)), InputError);
}

TEST(SymEig, DiagonalInput) {
  const SpectralDecomp d = sym_eig(SymMatrix::diagonal(Vector(Eigen::Vector3d(3, 1, 2))));
  EXPECT_DOUBLE_EQ(d.eigenvalues(0), 3.0);
  EXPECT_DOUBLE_EQ(d.eigenvalues(1), 2.0);
  EXPECT_DOUBLE_EQ(d.eigenvalues(2), 1.0);
  // Columns are signed identity columns e1, e3, e2.
  EXPECT_NEAR(std::abs(d.eigenvectors(0, 0)), 1.0, 1e-15);
  EXPECT_NEAR(std::abs(d.eigenvectors(2, 1)), 1.0, 1e-15);
  EXPECT_NEAR(std::abs(d.eigenvectors(1, 2)), 1.0, 1e-15);
}

TEST(SymEig, IdentityGivesOrthonormalBasis) {
  const SpectralDecomp d = sym_eig(SymMatrix::identity(4));
  for (Index i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(d.eigenvalues(i), 1.0);
  EXPECT_LE((d.eigenvectors.transpose() * d.eigenvectors - Matrix::Identity(4, 4)).norm(), 1e-14);
}

TEST(SymEig, RandomReconstructionSortAndTrace) {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 50; ++trial) {
    const Index n = 2 + trial % 9;
    const SymMatrix a(oracle::random_symmetric(n, gen));
    const SpectralDecomp d = sym_eig(a);
    EXPECT_LE(distance(d.reconstruct(), a), 1e-10 * a.norm());
    for (Index i = 0; i + 1 < n; ++i) EXPECT_GE(d.eigenvalues(i), d.eigenvalues(i + 1));
    EXPECT_NEAR(d.eigenvalues.sum(), a.trace(), 1e-10 * static_cast<double>(n) * a.norm());
    // Independent Jacobi oracle agrees on the spectrum.
    const oracle::Eig ref = oracle::jacobi_eig(a.matrix());
    EXPECT_LE((ref.values - d.eigenvalues).norm(), 1e-10 * a.norm());
  }
}

TEST(SymEig, NonFiniteIsInputError) {
  Matrix a = Matrix::Identity(3, 3);
  a(1, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(sym_eig(SymMatrix(a)), InputError);
}

TEST(QrOrthonormalize, OrthonormalInputIsFixed) {
  std::mt19937_64 gen(3);
  const Matrix z = Eigen::HouseholderQR<Matrix>(gaussian(6, 3, gen)).householderQ() *
                   Matrix::Identity(6, 3);
  const QrResult qr = qr_orthonormalize(z);
  EXPECT_LE((qr.r.cwiseAbs() - Matrix::Identity(3, 3)).norm(), 1e-12);
  for (Index j = 0; j < 3; ++j) {
    const double sign = qr.r(j, j) >= 0 ? 1.0 : -1.0;
    EXPECT_LE((qr.q.basis().col(j) - sign * z.col(j)).norm(), 1e-12);
  }
}

TEST(QrOrthonormalize, ScaledCanonicalColumns) {
  Matrix z(3, 2);
  z << 2, 0, 0, 3, 0, 0;
  const QrResult qr = qr_orthonormalize(z);
  Matrix q_expected(3, 2);
  q_expected << 1, 0, 0, 1, 0, 0;
  EXPECT_LE((qr.q.basis() - q_expected).norm(), 1e-15);
  EXPECT_LE((qr.r - Eigen::Vector2d(2, 3).asDiagonal().toDenseMatrix()).norm(), 1e-15);
}

TEST(QrOrthonormalize, RandomReconstructionProperty) {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = 3 + trial % 10;
    const Index k = 1 + trial % n;
    const Matrix z = gaussian(n, k, gen);
    const QrResult qr = qr_orthonormalize(z);
    EXPECT_LE(qr.q.orthonormality_error(), 1e-12 * static_cast<double>(k));
    EXPECT_LE((qr.q.basis() * qr.r - z).norm(), 1e-12 * z.norm());
    for (Index j = 0; j < k; ++j) EXPECT_GE(qr.r(j, j), 0.0);
    for (Index j = 0; j < k; ++j)
      for (Index i = j + 1; i < k; ++i) EXPECT_EQ(qr.r(i, j), 0.0);
  }
}

TEST(QrOrthonormalize, RankDeficientIsDegenerateFrame) {
  Matrix z(4, 2);
  z << 1, 2, 1, 2, 0, 0, 3, 6;
  EXPECT_THROW(qr_orthonormalize(z), DegenerateFrameError);
  EXPECT_THROW(qr_orthonormalize(Matrix::Zero(4, 2)), DegenerateFrameError);
  EXPECT_THROW(qr_orthonormalize(Matrix::Zero(2, 3)), InputError);
}

TEST(QrOrthonormalize, SignConventionIsReproducible) {
  std::mt19937_64 gen(9);
  const Matrix z = gaussian(7, 3, gen);
  const QrResult a = qr_orthonormalize(z);
  const QrResult b = qr_orthonormalize(z);
  EXPECT_EQ(a.q.basis(), b.q.basis());
  EXPECT_EQ(a.r, b.r);
}

TEST(OrthoFrame, ReorthonormalizesDriftedBasis) {
  Matrix q = Matrix::Identity(5, 2);
  q(3, 0) = 1e-6;
  const OrthoFrame f(q);
  EXPECT_LE(f.orthonormality_error(), 1e-12 * 2);
}

TEST(OrthogonalIteration, InvariantSubspaceConvergesImmediately) {
  const SymMatrix a = SymMatrix::diagonal(Vector(Eigen::Vector3d(3, 2, 1)));
  const OrthoFrame start(Matrix::Identity(3, 2));
  const SubspaceIteration it = orthogonal_iteration(a, start, 50, 1e-12);
  EXPECT_EQ(it.iterations, 1);
  Matrix p_expected = Matrix::Zero(3, 3);
  p_expected(0, 0) = p_expected(1, 1) = 1.0;
  EXPECT_LE((it.frame.projector().matrix() - p_expected).norm(), 1e-14);
}

TEST(OrthogonalIteration, PowerMethodRate) {
  // A = diag(3,2,1), start (e1+e3)/sqrt2: tan(angle to e1) = (1/3)^s, so
  // log(1/tol)/log(3) steps (plus slack) reach ||QQ^T - e1e1^T|| <= tol.
  const SymMatrix a = SymMatrix::diagonal(Vector(Eigen::Vector3d(3, 2, 1)));
  Matrix s(3, 1);
  s << 1.0 / std::sqrt(2.0), 0.0, 1.0 / std::sqrt(2.0);
  const double tol = 1e-10;
  const int iters = static_cast<int>(std::ceil(std::log(1.0 / tol) / std::log(3.0))) + 2;
  const SubspaceIteration it = orthogonal_iteration(a, OrthoFrame(s), iters, 0.0);
  Matrix e1e1 = Matrix::Zero(3, 3);
  e1e1(0, 0) = 1.0;
  EXPECT_LE((it.frame.projector().matrix() - e1e1).norm(), tol);
  // Early stopping on the subspace change.
  const SubspaceIteration early = orthogonal_iteration(a, OrthoFrame(s), 1000, 1e-8);
  EXPECT_LT(early.iterations, 30);
  EXPECT_LE(early.last_change, 1e-8);
}

TEST(OrthogonalIteration, TiedEigenvaluesStillGiveProjection) {
  const SymMatrix a = SymMatrix::diagonal(Vector(Eigen::Vector4d(2, 1, 1, 0.5)));
  std::mt19937_64 gen(1);
  const OrthoFrame start(qr_orthonormalize(gaussian(4, 2, gen)).q);
  const SubspaceIteration it = orthogonal_iteration(a, start, 200, 1e-14);
  const Matrix p = it.frame.projector().matrix();
  EXPECT_LE((p * p - p).norm(), 1e-10);
  EXPECT_NEAR(p.trace(), 2.0, 1e-10);
}
