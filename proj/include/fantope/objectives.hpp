#pragma once

// Convex smooth losses over symmetric matrices: the robust-PCA Huber losses,
// a quadratic test loss, and smoothness / gradient-bound metadata.

#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fantope/geometry.hpp"
#include "fantope/random.hpp"

namespace fantope {

enum class MetadataSource { Analytic, UserSupplied, Estimated };

inline const char* to_string(MetadataSource s) {
  switch (s) {
    case MetadataSource::Analytic: return "analytic";
    case MetadataSource::UserSupplied: return "user-supplied";
    case MetadataSource::Estimated: return "estimated";
  }
  return "unknown";
}

/// Smoothness constant beta and a bound G >= sup_{X in F} ||grad f(X)||_2.
struct ObjectiveMetadata {
  double beta = 1.0;
  double g_bound = 1.0;
  MetadataSource source = MetadataSource::Analytic;
  // lambda_1(sum_i q_i q_i^T) for sample-based losses.
  std::optional<double> covariance_top;

  void validate() const {
    if (!(beta > 0.0) || !(g_bound > 0.0)) {
      throw InputError("ObjectiveMetadata: beta and g_bound must be positive");
    }
  }
};

struct HuberParams {
  double gamma = 0.1;   // knee
  double shrink = 1.0;  // the multiplier a in q - a X q

  void validate() const {
    if (!(gamma > 0.0)) throw InputError("HuberParams: gamma must be > 0");
    if (!(shrink > 0.0 && shrink <= 1.0)) throw InputError("HuberParams: a must be in (0,1]");
  }
};

/// m samples in R^n stored column-wise (n x m). Immutable after construction.
class SampleSet {
 public:
  SampleSet() = default;
  explicit SampleSet(Matrix points) : points_(std::move(points)) {
    if (points_.rows() < 1) throw InputError("SampleSet: dimension must be >= 1");
    if (!points_.allFinite()) throw InputError("SampleSet: non-finite entries");
  }

  Index n() const { return points_.rows(); }
  Index m() const { return points_.cols(); }
  const Matrix& points() const { return points_; }
  auto sample(Index i) const { return points_.col(i); }

  /// sum_i q_i q_i^T.
  SymMatrix scatter() const { return SymMatrix(Matrix(points_ * points_.transpose())); }

 private:
  Matrix points_;
};

/// Huber_gamma(x) = x^2 / 2 for |x| <= gamma, gamma (|x| - gamma / 2) otherwise.
inline double huber(double x, double gamma) {
  const double ax = std::abs(x);
  return ax <= gamma ? 0.5 * x * x : gamma * (ax - 0.5 * gamma);
}

inline double huber_derivative(double x, double gamma) {
  if (x > gamma) return gamma;
  if (x < -gamma) return -gamma;
  return x;
}

struct Evaluation {
  double value = 0.0;
  SymMatrix gradient;
};

/// Convex, smooth f on S^n. Gradients are returned symmetrized.
class Objective {
 public:
  virtual ~Objective() = default;

  virtual Index dim() const = 0;
  virtual std::string name() const = 0;

  /// Value and gradient in one pass.
  virtual Evaluation evaluate(const SymMatrix& x) const = 0;
  virtual double value(const SymMatrix& x) const { return evaluate(x).value; }

  /// t -> f(x + t d). Implementations may precompute per-segment data.
  virtual std::function<double(double)> segment(const SymMatrix& x, const SymMatrix& d) const {
    return [this, x, d](double t) { return value(x + t * d); };
  }

  virtual ObjectiveMetadata analytic_metadata() const = 0;
};

/// f(X) = 1/2 ||X - M||_F^2. Its minimizer over F_{n,k} is the Fantope
/// projection of M.
class QuadraticLoss final : public Objective {
 public:
  explicit QuadraticLoss(SymMatrix target) : target_(std::move(target)) {}

  Index dim() const override { return target_.dim(); }
  std::string name() const override { return "quadratic"; }
  const SymMatrix& target() const { return target_; }

  Evaluation evaluate(const SymMatrix& x) const override {
    SymMatrix g = x - target_;
    const double v = 0.5 * g.matrix().squaredNorm();
    return {v, std::move(g)};
  }

  double value(const SymMatrix& x) const override {
    return 0.5 * (x.matrix() - target_.matrix()).squaredNorm();
  }

  // ||X - M||_2 <= ||X||_2 + ||M||_2 <= 1 + ||M||_2 on the Fantope.
  ObjectiveMetadata analytic_metadata() const override {
    const Vector ev = sym_eigenvalues(target_);
    const double m_norm = std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
    return {1.0, 1.0 + m_norm, MetadataSource::Analytic, std::nullopt};
  }

 private:
  SymMatrix target_;
};

namespace detail {

// Shared machinery for the two sample-based Huber losses.
class HuberSampleLoss : public Objective {
 public:
  HuberSampleLoss(std::shared_ptr<const SampleSet> data, HuberParams params)
      : data_(std::move(data)), params_(params) {
    if (!data_ || data_->m() < 1) throw InputError("Huber loss: empty sample set");
    params_.validate();
    covariance_top_ = sym_eigenvalues(data_->scatter())(0);
  }

  Index dim() const override { return data_->n(); }
  const SampleSet& data() const { return *data_; }
  const HuberParams& params() const { return params_; }
  double covariance_top() const { return covariance_top_; }

  Evaluation evaluate(const SymMatrix& x) const override {
    const Matrix& q = data_->points();
    const double a = params_.shrink;
    Matrix r = q - a * (x.matrix() * q);
    double v = 0.0;
    Matrix h = residual_gradient(r, v);
    // Symmetric part of -a H Q^T.
    return {v, SymMatrix(Matrix(-a * (h * q.transpose())))};
  }

  double value(const SymMatrix& x) const override {
    const Matrix& q = data_->points();
    return residual_value(q - params_.shrink * (x.matrix() * q));
  }

  std::function<double(double)> segment(const SymMatrix& x, const SymMatrix& d) const override {
    const Matrix& q = data_->points();
    const double a = params_.shrink;
    Matrix base = q - a * (x.matrix() * q);
    Matrix dir = -a * (d.matrix() * q);
    return [this, base = std::move(base), dir = std::move(dir)](double t) {
      return residual_value(base + t * dir);
    };
  }

  ObjectiveMetadata analytic_metadata() const override {
    const double a = params_.shrink;
    return {a * a * covariance_top_, gradient_bound(), MetadataSource::Analytic, covariance_top_};
  }

 protected:
  // Sum of losses over the residual columns.
  virtual double residual_value(const Matrix& r) const = 0;
  // d loss / d residual, column-wise; accumulates the loss value into `value`.
  virtual Matrix residual_gradient(const Matrix& r, double& value) const = 0;
  virtual double gradient_bound() const = 0;

  std::shared_ptr<const SampleSet> data_;
  HuberParams params_;
  double covariance_top_ = 0.0;
};

}  // namespace detail

/// Spiked-covariance loss f(X) = sum_i Huber(||q_i - a X q_i||).
class SpikedLoss final : public detail::HuberSampleLoss {
 public:
  using HuberSampleLoss::HuberSampleLoss;
  std::string name() const override { return "spiked"; }

 protected:
  double residual_value(const Matrix& r) const override {
    double v = 0.0;
    for (Index i = 0; i < r.cols(); ++i) v += huber(r.col(i).norm(), params_.gamma);
    return v;
  }

  // d/dr Huber(||r||) = w r with w = 1 inside the knee, gamma / ||r|| outside;
  // w = 1 at r = 0 (smooth limit).
  Matrix residual_gradient(const Matrix& r, double& value) const override {
    const double g = params_.gamma;
    Matrix h = r;
    value = 0.0;
    for (Index i = 0; i < r.cols(); ++i) {
      const double rho = r.col(i).norm();
      value += huber(rho, g);
      if (rho > g) h.col(i) *= g / rho;
    }
    return h;
  }

  // ||w_i r_i|| <= gamma for every sample.
  double gradient_bound() const override {
    return params_.shrink * params_.gamma * data_->points().colwise().norm().sum();
  }
};

/// Corrupted-entries loss f(X) = sum_i sum_j Huber([q_i - a X q_i]_j).
class CorruptedLoss final : public detail::HuberSampleLoss {
 public:
  using HuberSampleLoss::HuberSampleLoss;
  std::string name() const override { return "corrupted"; }

 protected:
  double residual_value(const Matrix& r) const override {
    const double g = params_.gamma;
    double v = 0.0;
    for (Index j = 0; j < r.cols(); ++j) {
      for (Index i = 0; i < r.rows(); ++i) v += huber(r(i, j), g);
    }
    return v;
  }

  Matrix residual_gradient(const Matrix& r, double& value) const override {
    const double g = params_.gamma;
    Matrix h(r.rows(), r.cols());
    value = 0.0;
    for (Index j = 0; j < r.cols(); ++j) {
      for (Index i = 0; i < r.rows(); ++i) {
        value += huber(r(i, j), g);
        h(i, j) = huber_derivative(r(i, j), g);
      }
    }
    return h;
  }

  // ||h(r_i)|| <= min(gamma sqrt(n), ||r_i||) and ||r_i|| <= (1 + a)||q_i|| on F.
  double gradient_bound() const override {
    const double a = params_.shrink;
    const double cap = params_.gamma * std::sqrt(static_cast<double>(data_->n()));
    double s = 0.0;
    for (Index i = 0; i < data_->m(); ++i) {
      const double qn = data_->sample(i).norm();
      s += qn * std::min(cap, (1.0 + a) * qn);
    }
    return a * s;
  }
};

/// Spectral norm of a symmetric matrix.
inline double spectral_norm(const SymMatrix& a) {
  const Vector ev = sym_eigenvalues(a);
  return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
}

/// Analytic metadata refined by sampling: g_bound becomes the smaller of the
/// analytic bound and twice the largest ||grad f||_2 seen over `samples`
/// random Fantope points plus the caller's probe points.
inline ObjectiveMetadata estimate_metadata(const Objective& f, int k,
                                           const std::vector<SymMatrix>& probes = {},
                                           int samples = 32, std::uint64_t seed = 0) {
  ObjectiveMetadata meta = f.analytic_metadata();
  Rng rng = stream_rng(seed, 0xfeed);
  double observed = 0.0;
  for (const SymMatrix& p : probes) observed = std::max(observed, spectral_norm(f.evaluate(p).gradient));
  for (int s = 0; s < samples; ++s) {
    const FantopePoint x = random_fantope_point(f.dim(), k, rng);
    observed = std::max(observed, spectral_norm(f.evaluate(x.matrix).gradient));
  }
  if (observed > 0.0 && 2.0 * observed < meta.g_bound) {
    meta.g_bound = 2.0 * observed;
    meta.source = MetadataSource::Estimated;
  }
  return meta;
}

/// Classical PCA: projection onto the top-k eigenvectors of sum_i q_i q_i^T.
inline ProjectionMatrix pca_projection(const SampleSet& data, int k) {
  return pnk_project(data.scatter(), k);
}

}  // namespace fantope
