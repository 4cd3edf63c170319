#pragma once

// Experiment driver behind the command-line tool: run configuration, problem
// setup, initialization, solver dispatch, diagnostics, timing and sweeps.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <future>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "fantope/certificates.hpp"
#include "fantope/datagen.hpp"
#include "fantope/io.hpp"
#include "fantope/solvers.hpp"

namespace fantope::harness {

enum class SolverKind { Goi, Pgd, PgdConvex, FrankWolfe };

inline const char* to_string(SolverKind s) {
  switch (s) {
    case SolverKind::Goi: return "goi";
    case SolverKind::Pgd: return "pgd";
    case SolverKind::PgdConvex: return "pgd-convex";
    case SolverKind::FrankWolfe: return "fw";
  }
  return "unknown";
}

inline SolverKind parse_solver(const std::string& s) {
  for (SolverKind k :
       {SolverKind::Goi, SolverKind::Pgd, SolverKind::PgdConvex, SolverKind::FrankWolfe}) {
    if (s == to_string(k)) return k;
  }
  throw ConfigError("unknown solver '" + s + "' (expected goi, pgd, pgd-convex or fw)");
}

enum class InitKind { Pca, RandomProjection, RandomFantope, File };

struct InitSpec {
  InitKind kind = InitKind::Pca;
  fs::path path;  // InitKind::File
};

inline InitSpec parse_init(const std::string& s) {
  if (s == "pca") return {InitKind::Pca, {}};
  if (s == "random-projection") return {InitKind::RandomProjection, {}};
  if (s == "random-fantope") return {InitKind::RandomFantope, {}};
  if (s.rfind("file:", 0) == 0 && s.size() > 5) return {InitKind::File, s.substr(5)};
  throw ConfigError("unknown init '" + s +
                    "' (expected pca, random-projection, random-fantope or file:PATH)");
}

inline std::string to_string(const InitSpec& i) {
  switch (i.kind) {
    case InitKind::Pca: return "pca";
    case InitKind::RandomProjection: return "random-projection";
    case InitKind::RandomFantope: return "random-fantope";
    case InitKind::File: return "file:" + i.path.string();
  }
  return "unknown";
}

/// "3", "1,2,5" or "0-19" (inclusive range); pieces may be mixed.
inline std::vector<std::uint64_t> parse_seeds(const std::string& s) {
  std::set<std::uint64_t> seeds;
  for (const std::string& piece : split(s, ',')) {
    if (piece.empty()) continue;
    try {
      const auto dash = piece.find('-');
      if (dash == std::string::npos) {
        seeds.insert(std::stoull(piece));
      } else {
        const std::uint64_t lo = std::stoull(piece.substr(0, dash));
        const std::uint64_t hi = std::stoull(piece.substr(dash + 1));
        if (hi < lo) throw ConfigError("seed range '" + piece + "' is empty");
        for (std::uint64_t v = lo; v <= hi; ++v) seeds.insert(v);
      }
    } catch (const std::logic_error&) {
      throw ConfigError("seeds: cannot parse '" + piece + "'");
    }
  }
  if (seeds.empty()) throw ConfigError("seeds must be a nonempty list");
  return {seeds.begin(), seeds.end()};
}

inline std::vector<double> parse_values(const std::string& s, const std::string& key) {
  std::vector<double> out;
  for (const std::string& piece : split(s, ',')) {
    if (piece.empty()) continue;
    try {
      out.push_back(parse_double(piece, key));
    } catch (const IoError& e) {
      throw ConfigError(e.what());
    }
  }
  return out;
}

struct RunConfig {
  ModelConfig model;
  std::optional<double> gamma;
  std::optional<double> shrink;  // default 0.9 (spiked) / 0.8 (corrupted)
  SolverKind solver = SolverKind::PgdConvex;
  std::optional<StepPolicy> step;  // default per solver and objective
  std::optional<int> rank_budget;
  StopCriteria stop;
  InitSpec init;
  std::vector<std::uint64_t> seeds{0};
  fs::path out = "runs";
  std::string sweep_param = "none";  // none, p or n
  std::vector<double> sweep_values;
  int bench_repetitions = 5;
  int bench_iterations = 10;
  int growth_samples = 200;
  int threads = 1;

  HuberParams huber() const {
    HuberParams h;
    h.gamma = gamma.value_or(0.1);
    h.shrink = shrink.value_or(model.model == ModelKind::Spiked ? 0.9 : 0.8);
    return h;
  }

  StepPolicy step_policy(bool sample_objective) const {
    if (step) return *step;
    if (solver == SolverKind::FrankWolfe) return StepPolicy::fw_exact();
    return sample_objective ? StepPolicy::empirical_lambda() : StepPolicy::inverse_beta();
  }

  void validate() const {
    model.validate();
    try {
      huber().validate();
    } catch (const InputError& e) {
      throw ConfigError(e.what());
    }
    if (stop.max_iters < 0) throw ConfigError("max_iters must be >= 0");
    if (seeds.empty()) throw ConfigError("seeds must be a nonempty list");
    if (step && step->is_linesearch() != (solver == SolverKind::FrankWolfe)) {
      throw ConfigError(std::string("step policy '") + fantope::to_string(step->kind) +
                        "' does not apply to solver '" + to_string(solver) + "'");
    }
    if (step && step->kind == StepKind::Fixed && !(step->value > 0.0)) {
      throw ConfigError("step_value must be > 0 for a fixed step");
    }
    if (rank_budget && (*rank_budget < model.k || *rank_budget > model.n - 1)) {
      throw ConfigError("rank_budget must satisfy k <= r' <= n-1");
    }
    if (sweep_param != "none" && sweep_param != "p" && sweep_param != "n") {
      throw ConfigError("sweep param must be none, p or n");
    }
    if (sweep_param != "none" && sweep_values.empty()) {
      throw ConfigError("sweep values must be nonempty");
    }
    if (bench_repetitions < 1 || bench_iterations < 1) {
      throw ConfigError("bench repetitions and iterations must be >= 1");
    }
    if (growth_samples < 0) throw ConfigError("growth_samples must be >= 0");
    if (threads < 1) throw ConfigError("threads must be >= 1");
  }
};

namespace detail {

template <class T>
T parse_key(const std::string& section, const std::string& key, const std::string& value) {
  const std::string where = "[" + section + "] " + key;
  try {
    if constexpr (std::is_same_v<T, double>) {
      return parse_double(value, where);
    } else {
      std::size_t used = 0;
      const long long v = std::stoll(value, &used);
      if (trim(value.substr(used)).size()) throw std::invalid_argument(value);
      return static_cast<T>(v);
    }
  } catch (const std::exception&) {
    throw ConfigError(where + ": invalid value '" + value + "'");
  }
}

}  // namespace detail

/// Reads an INI file with sections [model], [objective], [solver], [stop],
/// [run], [sweep], [bench] and [diagnose]. Unknown sections or keys are errors.
inline RunConfig parse_run_config(std::istream& in, const std::string& name = "config") {
  namespace pt = boost::property_tree;
  // Trailing comments after whitespace are dropped before parsing.
  std::stringstream clean;
  for (std::string line; std::getline(in, line);) {
    for (std::size_t i = 1; i < line.size(); ++i) {
      if ((line[i] == ';' || line[i] == '#') && std::isspace(static_cast<unsigned char>(line[i - 1]))) {
        line.erase(i);
        break;
      }
    }
    clean << line << '\n';
  }
  pt::ptree tree;
  try {
    pt::read_ini(clean, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(name + ": " + e.what());
  }
  RunConfig c;
  static const std::set<std::string> sections{"model", "objective", "solver", "stop",
                                              "run",   "sweep",     "bench",  "diagnose"};
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw ConfigError(name + ": key '" + section + "' outside a section");
    }
    if (!sections.count(section)) throw ConfigError(name + ": unknown section [" + section + "]");
    for (const auto& [key, node] : body) {
      const std::string v = trim(node.data());
      auto unknown = [&] { throw ConfigError(name + ": unknown key [" + section + "] " + key); };
      if (section == "model") {
        if (key == "model") c.model.model = parse_model_kind(v);
        else if (key == "n") c.model.n = detail::parse_key<int>(section, key, v);
        else if (key == "k") c.model.k = detail::parse_key<int>(section, key, v);
        else if (key == "m") c.model.m = detail::parse_key<int>(section, key, v);
        else if (key == "p") c.model.p = detail::parse_key<double>(section, key, v);
        else if (key == "seed") c.seeds = parse_seeds(v);
        else unknown();
      } else if (section == "objective") {
        if (key == "gamma") c.gamma = detail::parse_key<double>(section, key, v);
        else if (key == "a") c.shrink = detail::parse_key<double>(section, key, v);
        else unknown();
      } else if (section == "solver") {
        if (key == "name") {
          c.solver = parse_solver(v);
        } else if (key == "step") {
          try {
            const double value = c.step ? c.step->value : 0.0;
            c.step = StepPolicy{parse_step_kind(v), value};
          } catch (const InputError& e) {
            throw ConfigError(e.what());
          }
        } else if (key == "step_value") {
          StepPolicy s = c.step.value_or(StepPolicy::fixed(0.0));
          s.value = detail::parse_key<double>(section, key, v);
          c.step = s;
        } else if (key == "init") {
          c.init = parse_init(v);
        } else if (key == "rank_budget") {
          c.rank_budget = detail::parse_key<int>(section, key, v);
        } else {
          unknown();
        }
      } else if (section == "stop") {
        if (key == "tol") c.stop.gap_tol = detail::parse_key<double>(section, key, v);
        else if (key == "max_iters") c.stop.max_iters = detail::parse_key<int>(section, key, v);
        else if (key == "stall_tol") c.stop.stall_tol = detail::parse_key<double>(section, key, v);
        else unknown();
      } else if (section == "run") {
        if (key == "seeds") c.seeds = parse_seeds(v);
        else if (key == "out") c.out = v;
        else if (key == "threads") c.threads = detail::parse_key<int>(section, key, v);
        else unknown();
      } else if (section == "sweep") {
        if (key == "param") c.sweep_param = v;
        else if (key == "values") c.sweep_values = parse_values(v, "[sweep] values");
        else unknown();
      } else if (section == "bench") {
        if (key == "repetitions") c.bench_repetitions = detail::parse_key<int>(section, key, v);
        else if (key == "iterations") c.bench_iterations = detail::parse_key<int>(section, key, v);
        else unknown();
      } else if (key == "growth_samples") {
        c.growth_samples = detail::parse_key<int>(section, key, v);
      } else {
        unknown();
      }
    }
  }
  return c;
}

inline RunConfig load_run_config(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw ConfigError("config file not found: " + p.string());
  return parse_run_config(in, p.string());
}

/// An objective with its rank, optional ground truth and optional samples.
struct Problem {
  std::shared_ptr<const Objective> objective;
  int k = 1;
  std::optional<ProjectionMatrix> truth;
  std::shared_ptr<const SampleSet> data;
  // Closed-form minimizer when known (quadratic objective).
  std::optional<SymMatrix> exact_solution;

  Index n() const { return objective->dim(); }
};

inline Problem problem_from_instance(const Instance& inst, const HuberParams& params) {
  Problem p;
  p.objective = make_objective(inst, params);
  p.k = inst.config.k;
  p.truth = inst.truth;
  p.data = inst.data;
  return p;
}

inline Problem quadratic_problem(const SymMatrix& target, int k) {
  fantope::detail::require_k(target.dim(), k, "quadratic problem");
  Problem p;
  p.objective = std::make_shared<QuadraticLoss>(target);
  p.k = k;
  p.exact_solution = fantope_project(target, k).point.matrix;
  return p;
}

/// PCA of the samples, or the top-k eigenspace of the target for the
/// quadratic objective.
inline ProjectionMatrix pca_start(const Problem& p) {
  if (p.data) return pca_projection(*p.data, p.k);
  if (const auto* q = dynamic_cast<const QuadraticLoss*>(p.objective.get())) {
    return pnk_project(q->target(), p.k);
  }
  throw InputError("pca init needs samples or a quadratic target");
}

/// A starting point in both forms the solvers consume.
struct StartPoint {
  OrthoFrame frame;        // range of the rank-k projection nearest the start
  SymMatrix matrix;        // the start as a Fantope point
};

inline StartPoint make_start(const Problem& p, const InitSpec& init, std::uint64_t seed) {
  const Index n = p.n();
  Rng rng = stream_rng(seed, 0x1417);
  switch (init.kind) {
    case InitKind::Pca: {
      ProjectionMatrix pr = pca_start(p);
      return {pr.frame, pr.matrix()};
    }
    case InitKind::RandomProjection: {
      ProjectionMatrix pr = random_projection(n, p.k, rng);
      return {pr.frame, pr.matrix()};
    }
    case InitKind::RandomFantope: {
      FantopePoint x = random_fantope_point(n, p.k, rng);
      return {pnk_project(x.matrix, p.k).frame, x.matrix};
    }
    case InitKind::File: {
      const CsvTable t = read_csv(init.path);
      if (t.rows.rows() != n) throw InputError(init.path.string() + ": expected " +
                                               std::to_string(n) + " rows");
      if (t.rows.cols() == p.k && t.rows.cols() != n) {
        OrthoFrame f(t.rows);
        return {f, f.projector()};
      }
      if (t.rows.cols() != n) throw InputError(init.path.string() + ": expected an n x k frame or n x n matrix");
      SymMatrix x(t.rows);
      if (!FantopePoint{x, p.k}.feasible(1e-8)) {
        throw InputError(init.path.string() + ": initial matrix is not in the Fantope");
      }
      return {pnk_project(x, p.k).frame, x};
    }
  }
  throw InputError("unknown init");
}

struct RunResult {
  SymMatrix solution;
  SolveTrace trace;
  double step = 0.0;  // resolved fixed step; 0 for Frank-Wolfe
  std::string error;  // set when the solver aborted

  // Aborted runs only; stalls and iteration limits are outcomes, reported
  // through the termination reason.
  bool failed() const { return !error.empty() || trace.reason == Termination::DegenerateFrame; }
};

struct SolveSettings {
  SolverKind solver = SolverKind::PgdConvex;
  StepPolicy step = StepPolicy::empirical_lambda();
  StopCriteria stop;
  std::optional<int> rank_budget;
  bool check_rank = false;
  std::optional<ObjectiveMetadata> metadata;
};

inline SolveSettings settings_from(const RunConfig& c, const Problem& p) {
  SolveSettings s;
  s.solver = c.solver;
  s.step = c.step_policy(p.data != nullptr);
  s.stop = c.stop;
  s.rank_budget = c.rank_budget;
  return s;
}

/// Runs one solver from `start`. dist_ref is measured against the ground
/// truth, else the closed-form solution, when available.
inline RunResult run_solver(const Problem& p, const StartPoint& start, const SolveSettings& s,
                            std::function<void(int, const SymMatrix&)> on_iterate = {}) {
  SolveOptions opts;
  opts.stop = s.stop;
  opts.metadata = s.metadata;
  opts.check_rank = s.check_rank;
  opts.on_iterate = std::move(on_iterate);
  if (p.truth) opts.reference = p.truth->matrix();
  else if (p.exact_solution) opts.reference = p.exact_solution;

  RunResult r;
  const ObjectiveMetadata meta = s.metadata ? *s.metadata : p.objective->analytic_metadata();
  if (!s.step.is_linesearch()) r.step = s.step.resolve(meta);
  const Objective& f = *p.objective;
  try {
    switch (s.solver) {
      case SolverKind::Goi: {
        auto res = solve_goi(f, p.k, start.frame, s.step, opts);
        r.solution = res.solution.matrix();
        r.trace = std::move(res.trace);
        break;
      }
      case SolverKind::Pgd: {
        auto res = solve_pgd_nonconvex(f, p.k, ProjectionMatrix{start.frame, true}, s.step, opts);
        r.solution = res.solution.matrix();
        r.trace = std::move(res.trace);
        break;
      }
      case SolverKind::PgdConvex: {
        std::optional<RankBudget> budget;
        if (s.rank_budget) budget = RankBudget{*s.rank_budget};
        auto res = solve_pgd_convex(f, p.k, FantopePoint{start.matrix, p.k}, s.step, budget, opts);
        r.solution = std::move(res.solution.matrix);
        r.trace = std::move(res.trace);
        break;
      }
      case SolverKind::FrankWolfe: {
        auto res = solve_frank_wolfe(f, p.k, FantopePoint{start.matrix, p.k}, s.step, opts);
        r.solution = std::move(res.solution.matrix);
        r.trace = std::move(res.trace);
        break;
      }
    }
  } catch (const SolveError& e) {
    r.error = e.what();
    r.trace = e.trace();
    r.solution = start.matrix;
  }
  return r;
}

inline KeyValues result_block(const RunResult& r, SolverKind solver, const InitSpec& init,
                              const StepPolicy& step) {
  KeyValues kv;
  kv.set("solver", to_string(solver));
  kv.set("init", to_string(init));
  kv.set("step_policy", fantope::to_string(step.kind));
  kv.set("step", r.step);
  kv.set("reason", fantope::to_string(r.trace.reason));
  kv.set("iterations", r.trace.iterations());
  if (!r.trace.records.empty()) {
    kv.set("objective", r.trace.last().objective);
    kv.set("gap", r.trace.last().gap);
    kv.set("dist_ref", r.trace.last().dist_ref);
  }
  if (!r.error.empty()) kv.set("error", r.error);
  return kv;
}

struct Diagnostics {
  double objective = 0.0;
  double duality_gap = 0.0;
  GapReport gap;
  std::optional<double> recovery_error;
  std::optional<double> pca_recovery_error;
  std::optional<DualCertificate> certificate;
  std::string certificate_error;
  std::optional<KktReport> kkt;
  int z1_rank = -1;
  int z2_rank = -1;
  std::optional<GrowthReport> growth;

  KeyValues block() const {
    KeyValues kv;
    kv.set("objective", objective);
    kv.set("duality_gap", duality_gap);
    kv.set("eigen_gap", gap.gap);
    kv.set("lambda_nk", gap.lambda_nk);
    kv.set("lambda_nk1", gap.lambda_nk1);
    kv.set("r_star", gap.r_star);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    kv.set("recovery_error", recovery_error.value_or(nan));
    kv.set("pca_recovery_error", pca_recovery_error.value_or(nan));
    kv.set("certificate", certificate ? "ok" : certificate_error);
    kv.set("kkt_residual", kkt ? kkt->worst() : nan);
    kv.set("kkt_stationarity", kkt ? kkt->stationarity : nan);
    kv.set("kkt_complementarity", kkt ? kkt->complementarity_z1 + kkt->complementarity_z2 : nan);
    kv.set("z1_rank", z1_rank);
    kv.set("z2_rank", z2_rank);
    kv.set("growth_samples", growth ? growth->samples : 0);
    kv.set("growth_violations", growth ? growth->violations : 0);
    kv.set("growth_worst_slack", growth ? growth->worst_slack : nan);
    return kv;
  }
};

/// Eigen-gap, recovery errors, dual certificate with KKT residual, and the
/// quadratic-growth probe at `x`.
inline Diagnostics diagnose(const Problem& p, const SymMatrix& x, int growth_samples = 200,
                            std::uint64_t seed = 0) {
  if (x.dim() != p.n()) throw InputError("diagnose: solution dimension does not match problem");
  const Objective& f = *p.objective;
  Diagnostics d;
  const Evaluation ev = f.evaluate(x);
  d.objective = ev.value;
  d.duality_gap = gap_from_gradient(x, ev.gradient, p.k);
  d.gap = eigen_gap_of_gradient(ev.gradient, p.k);
  if (p.truth) d.recovery_error = recovery_error(x, *p.truth);
  if (p.truth && p.data) d.pca_recovery_error = recovery_error(pca_projection(*p.data, p.k).matrix(), *p.truth);
  try {
    d.certificate = build_dual_certificate(x, f, p.k);
    d.kkt = kkt_report(x, *d.certificate, f, p.k);
    d.z1_rank = numerical_rank(d.certificate->z1);
    d.z2_rank = numerical_rank(d.certificate->z2);
    if (growth_samples > 0) {
      d.growth = quadratic_growth_probe(x, f, p.k, d.gap.gap, growth_samples, seed);
    }
  } catch (const CertificateError& e) {
    d.certificate_error = e.what();
  }
  return d;
}

struct BenchRow {
  int repetition = 0;
  double qr_mean_ns = 0.0;   // GOI: mean QR time per iteration
  double eig_mean_ns = 0.0;  // nonconvex PGD: mean eigendecomposition time per iteration
  double ratio() const { return eig_mean_ns / qr_mean_ns; }
};

struct BenchReport {
  std::vector<BenchRow> rows;

  double mean_ratio() const {
    double s = 0.0;
    for (const BenchRow& r : rows) s += r.ratio();
    return s / static_cast<double>(rows.size());
  }
  double std_ratio() const {
    if (rows.size() < 2) return 0.0;
    const double m = mean_ratio();
    double s = 0.0;
    for (const BenchRow& r : rows) s += (r.ratio() - m) * (r.ratio() - m);
    return std::sqrt(s / static_cast<double>(rows.size() - 1));
  }
  double mean_qr_ns() const {
    double s = 0.0;
    for (const BenchRow& r : rows) s += r.qr_mean_ns;
    return s / static_cast<double>(rows.size());
  }
  double mean_eig_ns() const {
    double s = 0.0;
    for (const BenchRow& r : rows) s += r.eig_mean_ns;
    return s / static_cast<double>(rows.size());
  }
};

namespace detail {

inline double mean_fact_time(const SolveTrace& t) {
  double s = 0.0;
  int count = 0;
  for (const IterationRecord& r : t.records) {
    if (r.iter == 0) continue;
    s += static_cast<double>(r.fact_time_ns);
    ++count;
  }
  return count ? s / count : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace detail

/// Runs GOI and nonconvex PGD from the PCA start for a fixed number of
/// iterations per repetition and records factorization times only.
inline BenchReport bench(const Problem& p, int repetitions, int iterations,
                         const StepPolicy& step) {
  const StartPoint start = make_start(p, InitSpec{}, 0);
  SolveSettings s;
  s.step = step;
  s.stop.gap_tol = -std::numeric_limits<double>::infinity();
  s.stop.stall_tol = -1.0;
  s.stop.max_iters = iterations;
  BenchReport rep;
  for (int r = 0; r < repetitions; ++r) {
    s.solver = SolverKind::Goi;
    const RunResult goi = run_solver(p, start, s);
    s.solver = SolverKind::Pgd;
    const RunResult pgd = run_solver(p, start, s);
    if (!goi.error.empty()) throw Error("bench: " + goi.error);
    rep.rows.push_back({r, detail::mean_fact_time(goi.trace), detail::mean_fact_time(pgd.trace)});
  }
  return rep;
}

/// One (grid value, seed) cell of a sweep.
struct SweepRun {
  double value = 0.0;
  std::uint64_t seed = 0;
  Instance instance;
  RunResult result;
  Diagnostics diagnostics;
};

inline ModelConfig grid_model(const RunConfig& c, double value) {
  ModelConfig m = c.model;
  if (c.sweep_param == "p") m.p = value;
  if (c.sweep_param == "n") m.n = static_cast<int>(value);
  return m;
}

/// Generate, solve and diagnose one instance.
inline SweepRun run_cell(const RunConfig& c, double value, std::uint64_t seed) {
  SweepRun run;
  run.value = value;
  run.seed = seed;
  ModelConfig m = grid_model(c, value);
  m.seed = seed;
  m.validate();
  run.instance = generate(m);
  RunConfig cell = c;
  cell.model = m;
  const Problem p = problem_from_instance(run.instance, cell.huber());
  const StartPoint start = make_start(p, c.init, seed);
  run.result = run_solver(p, start, settings_from(cell, p));
  run.diagnostics = diagnose(p, run.result.solution, c.growth_samples, seed);
  return run;
}

/// Every grid value times every seed, ordered by (value, seed) regardless of
/// how many threads ran the cells.
inline std::vector<SweepRun> sweep(const RunConfig& c) {
  c.validate();
  std::vector<double> values = c.sweep_param == "none" ? std::vector<double>{0.0} : c.sweep_values;
  for (double v : values) grid_model(c, v).validate();
  std::vector<std::pair<double, std::uint64_t>> cells;
  for (double v : values) {
    for (std::uint64_t s : c.seeds) cells.emplace_back(v, s);
  }
  std::vector<SweepRun> runs(cells.size());
  const std::size_t width = static_cast<std::size_t>(c.threads);
  for (std::size_t begin = 0; begin < cells.size(); begin += width) {
    const std::size_t end = std::min(cells.size(), begin + width);
    std::vector<std::future<SweepRun>> jobs;
    for (std::size_t i = begin; i < end; ++i) {
      jobs.push_back(std::async(width > 1 ? std::launch::async : std::launch::deferred, run_cell,
                                std::cref(c), cells[i].first, cells[i].second));
    }
    for (std::size_t i = begin; i < end; ++i) runs[i] = jobs[i - begin].get();
  }
  std::stable_sort(runs.begin(), runs.end(), [](const SweepRun& a, const SweepRun& b) {
    return a.value != b.value ? a.value < b.value : a.seed < b.seed;
  });
  return runs;
}

struct SweepRow {
  double value = 0.0;
  int runs = 0;
  int converged = 0;
  double eigen_gap_mean = 0.0;
  double eigen_gap_min = 0.0;
  double recovery_mean = 0.0;
  double pca_recovery_mean = 0.0;
  double kkt_max = 0.0;
  int growth_violations = 0;
};

inline constexpr const char* kSweepHeader =
    "value,runs,converged,eigen_gap_mean,eigen_gap_min,recovery_error_mean,"
    "pca_recovery_error_mean,kkt_residual_max,growth_violations";

inline constexpr const char* kRunsHeader =
    "value,seed,converged,iterations,duality_gap,eigen_gap,recovery_error,pca_recovery_error,"
    "kkt_residual,growth_violations";

/// Averages over seeds per grid value; `runs` must be sorted by (value, seed).
inline std::vector<SweepRow> aggregate(const std::vector<SweepRun>& runs) {
  std::map<double, std::vector<const SweepRun*>> groups;
  for (const SweepRun& r : runs) groups[r.value].push_back(&r);
  std::vector<SweepRow> rows;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& [value, group] : groups) {
    SweepRow row;
    row.value = value;
    row.runs = static_cast<int>(group.size());
    row.eigen_gap_min = std::numeric_limits<double>::infinity();
    for (const SweepRun* r : group) {
      const Diagnostics& d = r->diagnostics;
      if (r->result.trace.reason == Termination::GapTolerance) ++row.converged;
      row.eigen_gap_mean += d.gap.gap;
      row.eigen_gap_min = std::min(row.eigen_gap_min, d.gap.gap);
      row.recovery_mean += d.recovery_error.value_or(nan);
      row.pca_recovery_mean += d.pca_recovery_error.value_or(nan);
      row.kkt_max = std::max(row.kkt_max, d.kkt ? d.kkt->worst() : nan);
      if (d.growth) row.growth_violations += d.growth->violations;
    }
    row.eigen_gap_mean /= row.runs;
    row.recovery_mean /= row.runs;
    row.pca_recovery_mean /= row.runs;
    rows.push_back(row);
  }
  return rows;
}

inline void write_sweep_table(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << kSweepHeader << '\n';
  for (const SweepRow& r : rows) {
    out << format_double(r.value) << ',' << r.runs << ',' << r.converged << ','
        << format_double(r.eigen_gap_mean) << ',' << format_double(r.eigen_gap_min) << ','
        << format_double(r.recovery_mean) << ',' << format_double(r.pca_recovery_mean) << ','
        << format_double(r.kkt_max) << ',' << r.growth_violations << '\n';
  }
}

inline void write_sweep_runs(std::ostream& out, const std::vector<SweepRun>& runs) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  out << kRunsHeader << '\n';
  for (const SweepRun& r : runs) {
    const Diagnostics& d = r.diagnostics;
    out << format_double(r.value) << ',' << r.seed << ','
        << (r.result.trace.reason == Termination::GapTolerance ? 1 : 0) << ','
        << r.result.trace.iterations() << ','
        << format_double(d.duality_gap) << ',' << format_double(d.gap.gap) << ','
        << format_double(d.recovery_error.value_or(nan)) << ','
        << format_double(d.pca_recovery_error.value_or(nan)) << ','
        << format_double(d.kkt ? d.kkt->worst() : nan) << ','
        << (d.growth ? d.growth->violations : 0) << '\n';
  }
}

}  // namespace fantope::harness
