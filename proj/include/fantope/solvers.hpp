#pragma once

// First-order methods over P_{n,k} and F_{n,k}:
//   solve_goi            gradient step on the factor Q, then one thin QR
//   solve_pgd_nonconvex  X <- top-k eigenprojection of X - eta grad f(X)
//   solve_pgd_convex     X <- Fantope projection of X - eta grad f(X)
//   solve_frank_wolfe    X <- (1 - eta) X + eta V, V the rank-k LMO vertex
// Every run returns its final point and a per-iteration trace.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "fantope/geometry.hpp"
#include "fantope/objectives.hpp"

namespace fantope {

enum class StepKind {
  Fixed,
  InverseBeta,           // 1 / beta
  TheoremGoi,            // 1 / (5 max(beta, G))
  EmpiricalLambda,       // 1 / lambda_1(sum_i q_i q_i^T)
  FwExactLinesearch,     // argmin over [0, 1] of f on the segment
  FwQuadraticSurrogate,  // minimizer of the beta-quadratic upper model
};

struct StepPolicy {
  StepKind kind = StepKind::InverseBeta;
  double value = 0.0;  // used by Fixed

  static StepPolicy fixed(double eta) { return {StepKind::Fixed, eta}; }
  static StepPolicy inverse_beta() { return {StepKind::InverseBeta, 0.0}; }
  static StepPolicy theorem_goi() { return {StepKind::TheoremGoi, 0.0}; }
  static StepPolicy empirical_lambda() { return {StepKind::EmpiricalLambda, 0.0}; }
  static StepPolicy fw_exact() { return {StepKind::FwExactLinesearch, 0.0}; }
  static StepPolicy fw_surrogate() { return {StepKind::FwQuadraticSurrogate, 0.0}; }

  bool is_linesearch() const {
    return kind == StepKind::FwExactLinesearch || kind == StepKind::FwQuadraticSurrogate;
  }

  /// Fixed step size implied by the policy.
  double resolve(const ObjectiveMetadata& meta) const {
    switch (kind) {
      case StepKind::Fixed:
        if (!(value > 0.0)) throw InputError("StepPolicy: fixed step must be > 0");
        return value;
      case StepKind::InverseBeta:
        return 1.0 / meta.beta;
      case StepKind::TheoremGoi:
        return 1.0 / (5.0 * std::max(meta.beta, meta.g_bound));
      case StepKind::EmpiricalLambda:
        if (!meta.covariance_top || !(*meta.covariance_top > 0.0)) {
          throw InputError("StepPolicy: empirical-lambda needs a sample-based objective");
        }
        return 1.0 / *meta.covariance_top;
      case StepKind::FwExactLinesearch:
      case StepKind::FwQuadraticSurrogate:
        break;
    }
    throw InputError("StepPolicy: line-search policies have no fixed step");
  }
};

inline const char* to_string(StepKind k) {
  switch (k) {
    case StepKind::Fixed: return "fixed";
    case StepKind::InverseBeta: return "inverse-beta";
    case StepKind::TheoremGoi: return "theorem-goi";
    case StepKind::EmpiricalLambda: return "empirical-lambda";
    case StepKind::FwExactLinesearch: return "fw-exact-linesearch";
    case StepKind::FwQuadraticSurrogate: return "fw-quadratic-surrogate";
  }
  return "unknown";
}

inline StepKind parse_step_kind(const std::string& s) {
  for (StepKind k : {StepKind::Fixed, StepKind::InverseBeta, StepKind::TheoremGoi,
                     StepKind::EmpiricalLambda, StepKind::FwExactLinesearch,
                     StepKind::FwQuadraticSurrogate}) {
    if (s == to_string(k)) return k;
  }
  throw InputError("unknown step policy '" + s + "'");
}

enum class Termination { GapTolerance, MaxIterations, StalledStationary, DegenerateFrame };

inline const char* to_string(Termination t) {
  switch (t) {
    case Termination::GapTolerance: return "gap-tol";
    case Termination::MaxIterations: return "max-iters";
    case Termination::StalledStationary: return "stalled-stationary";
    case Termination::DegenerateFrame: return "degenerate-frame";
  }
  return "unknown";
}

struct StopCriteria {
  double gap_tol = 1e-10;
  int max_iters = 10000;
  // Iterate change ||X_{t+1} - X_t||_F <= stall_tol (1 + ||X_t||_F) with the gap
  // still above gap_tol ends the run as stalled-stationary.
  double stall_tol = 1e-14;
};

/// Rank budget r' for convex PGD, k <= r' <= n - 1.
struct RankBudget {
  int r_prime = 0;
};

/// One trace row; row t describes iterate t and the step that produced it.
struct IterationRecord {
  int iter = 0;
  double objective = 0.0;
  double gap = 0.0;                  // duality gap <X - V, grad f(X)>
  int rank_flag = -1;                // 1 / 0, or -1 when not evaluated
  double dist_ref = std::numeric_limits<double>::quiet_NaN();
  double step = 0.0;                 // step size that produced this iterate
  std::int64_t fact_time_ns = 0;     // QR / eigendecomposition time only
  double excess = std::numeric_limits<double>::quiet_NaN();  // f - f_ref
  int realized_rank = -1;            // convex PGD: rank of the Fantope projection
  int budget_ok = -1;                // convex PGD with budget: rank <= r' test
  double vertex_dist_ref = std::numeric_limits<double>::quiet_NaN();  // FW: ||V_t - X_ref||_F
};

struct SolveTrace {
  std::vector<IterationRecord> records;
  Termination reason = Termination::MaxIterations;

  int iterations() const { return static_cast<int>(records.size()) - 1; }
  const IterationRecord& last() const { return records.back(); }
};

template <class Point>
struct SolveResult {
  Point solution;
  SolveTrace trace;
};

/// A run that could not continue; carries the trace up to the failure.
class SolveError : public Error {
 public:
  SolveError(const std::string& what, SolveTrace trace)
      : Error(what), trace_(std::move(trace)) {}
  const SolveTrace& trace() const { return trace_; }

 private:
  SolveTrace trace_;
};

struct SolveOptions {
  StopCriteria stop;
  std::optional<SymMatrix> reference;        // X_ref for dist_ref
  std::optional<double> reference_value;     // f_ref for excess
  std::optional<ObjectiveMetadata> metadata; // overrides objective.analytic_metadata()
  bool check_rank = false;                   // GOI: evaluate the rank-k projection test on W_{t+1}
  std::function<void(int, const SymMatrix&)> on_iterate;
};

/// <X - V, G> with V the LMO vertex: <X, G> minus the sum of the k smallest
/// eigenvalues of G. Never negative for X in F_{n,k} (up to round-off).
inline double gap_from_gradient(const SymMatrix& x, const SymMatrix& g, int k) {
  const Vector ev = sym_eigenvalues(g);
  return inner(x, g) - ev.tail(k).sum();
}

inline double duality_gap(const SymMatrix& x, const Objective& f, int k) {
  return gap_from_gradient(x, f.evaluate(x).gradient, k);
}

/// Golden-section minimization of a unimodal function on [lo, hi]; the
/// endpoints are compared against the interior estimate.
inline double golden_section_minimize(const std::function<double(double)>& fn, double lo,
                                      double hi, double tol = 1e-10) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  const double f_lo = fn(lo);
  const double f_hi = fn(hi);
  double a = lo;
  double b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = fn(c);
  double fd = fn(d);
  while (b - a > tol) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = fn(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = fn(d);
    }
  }
  double best = 0.5 * (a + b);
  double f_best = fn(best);
  if (f_lo <= f_best) {
    best = lo;
    f_best = f_lo;
  }
  if (f_hi <= f_best) best = hi;
  return best;
}

namespace detail {

using Clock = std::chrono::steady_clock;

inline std::int64_t elapsed_ns(Clock::time_point start) {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - start).count();
}

inline void require_solver_input(const Objective& f, Index n, int k, const char* what) {
  if (f.dim() != n) throw InputError(std::string(what) + ": objective/init dimension mismatch");
  require_k(n, k, what);
}

// Fills the fields common to every solver.
inline IterationRecord base_record(int iter, const SymMatrix& x, double value, double gap,
                                   const SolveOptions& opts) {
  IterationRecord rec;
  rec.iter = iter;
  rec.objective = value;
  rec.gap = gap;
  if (opts.reference) rec.dist_ref = distance(x, *opts.reference);
  if (opts.reference_value) rec.excess = value - *opts.reference_value;
  return rec;
}

inline bool stalled(const SymMatrix& prev, const SymMatrix& next, const StopCriteria& stop) {
  return distance(prev, next) <= stop.stall_tol * (1.0 + prev.norm());
}

inline double fixed_step(const Objective& f, const StepPolicy& policy, const SolveOptions& opts) {
  if (policy.is_linesearch()) throw InputError("line-search policies apply to Frank-Wolfe only");
  const ObjectiveMetadata meta = opts.metadata ? *opts.metadata : f.analytic_metadata();
  return policy.resolve(meta);
}

}  // namespace detail

/// Gradient Orthogonal Iteration:
///   Z_{t+1} = Q_t - eta grad f(Q_t Q_t^T) Q_t,  (Q_{t+1}, R) = QR(Z_{t+1}).
/// Every iterate Y_t = Q_t Q_t^T lies in P_{n,k}.
inline SolveResult<ProjectionMatrix> solve_goi(const Objective& f, int k, const OrthoFrame& init,
                                               const StepPolicy& policy,
                                               const SolveOptions& opts = {}) {
  const Index n = init.rows();
  detail::require_solver_input(f, n, k, "solve_goi");
  if (init.cols() != k) throw InputError("solve_goi: init frame must have k columns");
  const double eta = detail::fixed_step(f, policy, opts);

  OrthoFrame q = init;
  SymMatrix y = q.projector();
  Evaluation ev = f.evaluate(y);
  SolveTrace trace;
  trace.records.push_back(
      detail::base_record(0, y, ev.value, gap_from_gradient(y, ev.gradient, k), opts));
  if (opts.on_iterate) opts.on_iterate(0, y);

  for (int t = 1;; ++t) {
    if (trace.last().gap <= opts.stop.gap_tol) {
      trace.reason = Termination::GapTolerance;
      break;
    }
    if (t > opts.stop.max_iters) {
      trace.reason = Termination::MaxIterations;
      break;
    }

    int rank_flag = -1;
    if (opts.check_rank && k < n) {
      const SymMatrix w = y - eta * ev.gradient;
      rank_flag = projection_rank_at_most(sym_eig(w), k, k) ? 1 : 0;
    }

    const Matrix z = q.basis() - eta * (ev.gradient.matrix() * q.basis());
    const auto start = detail::Clock::now();
    QrResult qr;
    try {
      qr = qr_orthonormalize(z);
    } catch (const DegenerateFrameError& e) {
      trace.reason = Termination::DegenerateFrame;
      throw SolveError(std::string("solve_goi: ") + e.what(), std::move(trace));
    }
    const std::int64_t fact_ns = detail::elapsed_ns(start);

    SymMatrix y_next = qr.q.projector();
    const bool no_progress = detail::stalled(y, y_next, opts.stop);
    q = std::move(qr.q);
    y = std::move(y_next);
    ev = f.evaluate(y);

    IterationRecord rec =
        detail::base_record(t, y, ev.value, gap_from_gradient(y, ev.gradient, k), opts);
    rec.rank_flag = rank_flag;
    rec.step = eta;
    rec.fact_time_ns = fact_ns;
    trace.records.push_back(rec);
    if (opts.on_iterate) opts.on_iterate(t, y);

    if (no_progress && rec.gap > opts.stop.gap_tol) {
      trace.reason = Termination::StalledStationary;
      break;
    }
  }
  return {ProjectionMatrix{std::move(q), true}, std::move(trace)};
}

/// Nonconvex projected gradient: X_{t+1} = top-k eigenprojection of
/// X_t - eta grad f(X_t). rank_flag records whether the Fantope projection of
/// the same matrix is rank k (so both projections coincide).
inline SolveResult<ProjectionMatrix> solve_pgd_nonconvex(const Objective& f, int k,
                                                         const ProjectionMatrix& init,
                                                         const StepPolicy& policy,
                                                         const SolveOptions& opts = {}) {
  const Index n = init.dim();
  detail::require_solver_input(f, n, k, "solve_pgd_nonconvex");
  if (init.rank() != k) throw InputError("solve_pgd_nonconvex: init must have rank k");
  const double eta = detail::fixed_step(f, policy, opts);

  ProjectionMatrix p = init;
  SymMatrix x = p.matrix();
  Evaluation ev = f.evaluate(x);
  SolveTrace trace;
  trace.records.push_back(
      detail::base_record(0, x, ev.value, gap_from_gradient(x, ev.gradient, k), opts));
  if (opts.on_iterate) opts.on_iterate(0, x);

  for (int t = 1;; ++t) {
    if (trace.last().gap <= opts.stop.gap_tol) {
      trace.reason = Termination::GapTolerance;
      break;
    }
    if (t > opts.stop.max_iters) {
      trace.reason = Termination::MaxIterations;
      break;
    }

    const SymMatrix w = x - eta * ev.gradient;
    const auto start = detail::Clock::now();
    const SpectralDecomp decomp = sym_eig(w);
    const std::int64_t fact_ns = detail::elapsed_ns(start);

    const int rank_flag = k < n ? (projection_rank_at_most(decomp, k, k) ? 1 : 0) : 1;
    p = pnk_project(decomp, k);
    SymMatrix x_next = p.matrix();
    const bool no_progress = detail::stalled(x, x_next, opts.stop);
    x = std::move(x_next);
    ev = f.evaluate(x);

    IterationRecord rec =
        detail::base_record(t, x, ev.value, gap_from_gradient(x, ev.gradient, k), opts);
    rec.rank_flag = rank_flag;
    rec.step = eta;
    rec.fact_time_ns = fact_ns;
    trace.records.push_back(rec);
    if (opts.on_iterate) opts.on_iterate(t, x);

    if (no_progress && rec.gap > opts.stop.gap_tol) {
      trace.reason = Termination::StalledStationary;
      break;
    }
  }
  return {std::move(p), std::move(trace)};
}

/// Convex projected gradient over the Fantope with a full projection each
/// step. With a rank budget r', each step first tests whether the projection
/// has rank <= r' and records the outcome; the full projection is used either way.
inline SolveResult<FantopePoint> solve_pgd_convex(const Objective& f, int k,
                                                  const FantopePoint& init,
                                                  const StepPolicy& policy,
                                                  std::optional<RankBudget> budget = std::nullopt,
                                                  const SolveOptions& opts = {}) {
  const Index n = init.matrix.dim();
  detail::require_solver_input(f, n, k, "solve_pgd_convex");
  if (budget && (budget->r_prime < k || budget->r_prime > n - 1)) {
    throw InputError("solve_pgd_convex: rank budget must satisfy k <= r' <= n-1");
  }
  const double eta = detail::fixed_step(f, policy, opts);

  SymMatrix x = init.matrix;
  Evaluation ev = f.evaluate(x);
  SolveTrace trace;
  trace.records.push_back(
      detail::base_record(0, x, ev.value, gap_from_gradient(x, ev.gradient, k), opts));
  if (opts.on_iterate) opts.on_iterate(0, x);

  for (int t = 1;; ++t) {
    if (trace.last().gap <= opts.stop.gap_tol) {
      trace.reason = Termination::GapTolerance;
      break;
    }
    if (t > opts.stop.max_iters) {
      trace.reason = Termination::MaxIterations;
      break;
    }

    const SymMatrix w = x - eta * ev.gradient;
    const auto start = detail::Clock::now();
    const SpectralDecomp decomp = sym_eig(w);
    const std::int64_t fact_ns = detail::elapsed_ns(start);

    int budget_ok = -1;
    if (budget) budget_ok = projection_rank_at_most(decomp, k, budget->r_prime) ? 1 : 0;
    FantopeProjection proj = fantope_project(decomp, k);
    const bool no_progress = detail::stalled(x, proj.point.matrix, opts.stop);
    x = std::move(proj.point.matrix);
    ev = f.evaluate(x);

    IterationRecord rec =
        detail::base_record(t, x, ev.value, gap_from_gradient(x, ev.gradient, k), opts);
    rec.realized_rank = proj.waterfill.rank;
    rec.rank_flag = proj.waterfill.rank == k ? 1 : 0;
    rec.budget_ok = budget_ok;
    rec.step = eta;
    rec.fact_time_ns = fact_ns;
    trace.records.push_back(rec);
    if (opts.on_iterate) opts.on_iterate(t, x);

    if (no_progress && rec.gap > opts.stop.gap_tol) {
      trace.reason = Termination::StalledStationary;
      break;
    }
  }
  return {FantopePoint{std::move(x), k}, std::move(trace)};
}

/// Frank-Wolfe over the Fantope with V_t = fantope_lmo(grad f(X_t)) and a
/// line-search step: exact (golden-section on the segment) or the minimizer
/// of the beta-smooth quadratic upper model, clamped to [0, 1].
inline SolveResult<FantopePoint> solve_frank_wolfe(const Objective& f, int k,
                                                   const FantopePoint& init,
                                                   const StepPolicy& linesearch,
                                                   const SolveOptions& opts = {}) {
  const Index n = init.matrix.dim();
  detail::require_solver_input(f, n, k, "solve_frank_wolfe");
  if (!linesearch.is_linesearch()) {
    throw InputError("solve_frank_wolfe: step policy must be a line-search kind");
  }
  const ObjectiveMetadata meta = opts.metadata ? *opts.metadata : f.analytic_metadata();

  SymMatrix x = init.matrix;
  Evaluation ev = f.evaluate(x);

  auto vertex = [&](std::int64_t& fact_ns) {
    const auto start = detail::Clock::now();
    ProjectionMatrix v = fantope_lmo(ev.gradient, k);
    fact_ns = detail::elapsed_ns(start);
    return v;
  };

  std::int64_t fact_ns = 0;
  ProjectionMatrix v = vertex(fact_ns);
  SymMatrix vm = v.matrix();

  SolveTrace trace;
  auto push = [&](int t, double step, std::int64_t ns) {
    IterationRecord rec = detail::base_record(t, x, ev.value, inner(x - vm, ev.gradient), opts);
    rec.rank_flag = v.unique ? 1 : 0;
    rec.step = step;
    rec.fact_time_ns = ns;
    if (opts.reference) rec.vertex_dist_ref = distance(vm, *opts.reference);
    trace.records.push_back(rec);
    if (opts.on_iterate) opts.on_iterate(t, x);
  };
  push(0, 0.0, fact_ns);

  for (int t = 1;; ++t) {
    const SymMatrix dir = vm - x;
    const double dir_sq = dir.matrix().squaredNorm();
    if (trace.last().gap <= opts.stop.gap_tol || dir_sq == 0.0) {
      trace.reason = Termination::GapTolerance;
      break;
    }
    if (t > opts.stop.max_iters) {
      trace.reason = Termination::MaxIterations;
      break;
    }

    double eta = 0.0;
    if (linesearch.kind == StepKind::FwExactLinesearch) {
      eta = golden_section_minimize(f.segment(x, dir), 0.0, 1.0, 1e-10);
    } else {
      eta = std::clamp(trace.last().gap / (meta.beta * dir_sq), 0.0, 1.0);
    }

    SymMatrix x_next = x + eta * dir;
    const bool no_progress = detail::stalled(x, x_next, opts.stop);
    x = std::move(x_next);
    ev = f.evaluate(x);
    v = vertex(fact_ns);
    vm = v.matrix();
    push(t, eta, fact_ns);

    if (no_progress && trace.last().gap > opts.stop.gap_tol) {
      trace.reason = Termination::StalledStationary;
      break;
    }
  }
  return {FantopePoint{std::move(x), k}, std::move(trace)};
}

}  // namespace fantope
