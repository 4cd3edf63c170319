#include <gtest/gtest.h>

#include <cmath>

#include "fantope/certificates.hpp"
#include "fantope/datagen.hpp"
#include "fantope/solvers.hpp"

using namespace fantope;

namespace {

SymMatrix diag(std::initializer_list<double> v) {
  Vector d(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) d(i++) = x;
  return SymMatrix::diagonal(d);
}

// A fixed objective whose gradient is the same matrix everywhere.
class LinearLoss final : public Objective {
 public:
  explicit LinearLoss(SymMatrix c) : c_(std::move(c)) {}
  Index dim() const override { return c_.dim(); }
  std::string name() const override { return "linear"; }
  Evaluation evaluate(const SymMatrix& x) const override { return {inner(x, c_), c_}; }
  ObjectiveMetadata analytic_metadata() const override {
    return {1.0, 1.0, MetadataSource::Analytic, std::nullopt};
  }

 private:
  SymMatrix c_;
};

SymMatrix e3e3() {
  Matrix m = Matrix::Zero(3, 3);
  m(2, 2) = 1.0;
  return SymMatrix(m);
}

}  // namespace

TEST(EigenGap, DiagonalExamples) {
  const GapReport a = eigen_gap_of_gradient(diag({5, 4, 1}), 1);
  EXPECT_DOUBLE_EQ(a.gap, 3.0);
  EXPECT_DOUBLE_EQ(a.lambda_nk, 4.0);
  EXPECT_DOUBLE_EQ(a.lambda_nk1, 1.0);
  EXPECT_EQ(a.r_star, 1);

  const GapReport b = eigen_gap_of_gradient(diag({5, 1, 1}), 1);
  EXPECT_DOUBLE_EQ(b.gap, 0.0);
  EXPECT_EQ(b.r_star, 2);

  const LinearLoss f(diag({5, 4, 1}));
  EXPECT_DOUBLE_EQ(eigen_gap(e3e3(), f, 1).gap, 3.0);
}

TEST(EigenGap, RStarEqualsKWhenGapPositive) {
  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const int k = 1 + trial % 4;
    const GapReport r = eigen_gap_of_gradient(rng.gaussian_symmetric(7), k);
    if (r.gap > kGapThreshold) EXPECT_EQ(r.r_star, k);
    EXPECT_GE(r.r_star, k);
    EXPECT_EQ(r.gap, r.lambda_nk - r.lambda_nk1);
  }
}

TEST(DualCertificate, HandConstruction) {
  const LinearLoss f(diag({5, 4, 1}));
  const DualCertificate c = build_dual_certificate(e3e3(), f, 1);
  EXPECT_DOUBLE_EQ(c.s, 2.5);
  EXPECT_LE((c.z1.matrix() - diag({2.5, 1.5, 0}).matrix()).norm(), 1e-14);
  EXPECT_LE((c.z2.matrix() - diag({0, 0, 1.5}).matrix()).norm(), 1e-14);
  EXPECT_LE(kkt_residual(e3e3(), c, f, 1), 1e-14);
  EXPECT_LE((c.z1.matrix() * c.z2.matrix()).norm(), 1e-14);
}

TEST(DualCertificate, ShiftedMultiplierResidualIsSqrtN) {
  const LinearLoss f(diag({5, 4, 1}));
  DualCertificate c = build_dual_certificate(e3e3(), f, 1);
  c.s += 1.0;
  EXPECT_NEAR(kkt_report(e3e3(), c, f, 1).stationarity, std::sqrt(3.0), 1e-9);
}

TEST(DualCertificate, Errors) {
  EXPECT_THROW(build_dual_certificate(e3e3(), LinearLoss(diag({5, 1, 1})), 1), CertificateError);
  Matrix e1 = Matrix::Zero(3, 3);
  e1(0, 0) = 1.0;
  EXPECT_THROW(build_dual_certificate(SymMatrix(e1), LinearLoss(diag({5, 4, 1})), 1),
               CertificateError);
}

TEST(DualCertificate, StrictComplementarityOnQuadraticOptima) {
  Rng rng(2);
  int built = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const Index n = 9;
    const int k = 1 + trial % 4;
    SymMatrix m = 2.0 * random_projection(n, k, rng).matrix();
    m += 0.2 * rng.gaussian_symmetric(n);
    const QuadraticLoss f(m);
    const FantopeProjection proj = fantope_project(m, k);
    if (proj.waterfill.rank != k) continue;
    ++built;
    const SymMatrix x = proj.point.matrix;
    const DualCertificate c = build_dual_certificate(x, f, k);
    EXPECT_LE(kkt_residual(x, c, f, k), 1e-8);
    EXPECT_EQ(numerical_rank(c.z1) + numerical_rank(c.z2), n);
    EXPECT_EQ(numerical_rank(c.z1), n - k);
    EXPECT_LE((c.z1.matrix() * c.z2.matrix()).norm(), 1e-9);
    // A positive gap means the optimum is a rank-k projection.
    const Vector ev = sym_eigenvalues(x);
    EXPECT_EQ((ev.array() > 1.0 - 1e-6).count(), k);
    EXPECT_EQ((ev.array() < 1e-6).count(), n - k);
  }
  EXPECT_GT(built, 30);
}

TEST(KktResidual, PerturbedPointIsDetected) {
  Rng rng(3);
  const int k = 2;
  SymMatrix m = 2.0 * random_projection(8, k, rng).matrix();
  m += 0.1 * rng.gaussian_symmetric(8);
  const QuadraticLoss f(m);
  const SymMatrix x = fantope_project(m, k).point.matrix;
  const DualCertificate c = build_dual_certificate(x, f, k);
  SymMatrix d = rng.gaussian_symmetric(8);
  d *= 0.1 / d.norm();
  EXPECT_GT(kkt_residual(x + d, c, f, k), 0.01);
}

TEST(QuadraticGrowth, EqualityCaseWithUnitGap) {
  // f = 1/2 ||X - 2P||^2: X* = P, grad f(X*) = -P has gap exactly 1 and
  // f(X) - f* = 1/2 ||X - P||^2 + <X - P, -P> >= 1/2 ||X - P||^2.
  Rng rng(4);
  const ProjectionMatrix p = random_projection(8, 3, rng);
  const QuadraticLoss f(2.0 * p.matrix());
  const GapReport gap = eigen_gap(p.matrix(), f, 3);
  EXPECT_NEAR(gap.gap, 1.0, 1e-12);
  const GrowthReport rep = quadratic_growth_probe(p.matrix(), f, 3, gap.gap, 200);
  EXPECT_EQ(rep.violations, 0);
  EXPECT_GE(rep.worst_slack, -1e-8);
  // At X = X* both sides vanish.
  EXPECT_EQ(f.value(p.matrix()) - f.value(p.matrix()), 0.0);
}

TEST(QuadraticGrowth, OverstatedDeltaIsReported) {
  // With M = P (gradient zero at the optimum), growth is exactly 1/2, so a
  // claimed delta of 3 must produce violations.
  Rng rng(5);
  const ProjectionMatrix p = random_projection(8, 3, rng);
  const QuadraticLoss f(p.matrix());
  const GrowthReport rep = quadratic_growth_probe(p.matrix(), f, 3, 3.0, 50);
  EXPECT_EQ(rep.violations, 50);
  EXPECT_LT(rep.worst_slack, 0.0);
}

TEST(Certificates, SolvedSpikedInstance) {
  ModelConfig c;
  c.n = 30;
  c.k = 3;
  c.m = 150;
  c.p = 0.1;
  c.seed = 2;
  const Instance inst = gen_spiked(c);
  const auto f = make_objective(inst, HuberParams{0.1, 0.9});
  const auto res = solve_pgd_convex(*f, 3, pca_projection(*inst.data, 3).as_fantope_point(),
                                    StepPolicy::empirical_lambda());
  ASSERT_EQ(res.trace.reason, Termination::GapTolerance);
  const GapReport gap = eigen_gap(res.solution.matrix, *f, 3);
  ASSERT_GT(gap.gap, 0.0);
  const DualCertificate cert = build_dual_certificate(res.solution.matrix, *f, 3);
  EXPECT_LE(kkt_residual(res.solution.matrix, cert, *f, 3), 1e-8);
  const GrowthReport rep = quadratic_growth_probe(res.solution.matrix, *f, 3, gap.gap, 100);
  EXPECT_EQ(rep.violations, 0);
}
