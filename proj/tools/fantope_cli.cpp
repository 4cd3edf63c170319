#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "fantope/harness.hpp"

using namespace fantope;
using namespace fantope::harness;

namespace {

constexpr int kOk = 0;
constexpr int kNumerical = 1;
constexpr int kUsage = 2;

struct Common {
  std::string config;
  std::string seed;
  std::string out;
};

struct ProblemArgs {
  std::string instance;
  std::string quadratic;
  int k = 0;
};

RunConfig base_config(const Common& c) {
  RunConfig rc = c.config.empty() ? RunConfig{} : load_run_config(c.config);
  if (!c.seed.empty()) rc.seeds = parse_seeds(c.seed);
  if (!c.out.empty()) rc.out = c.out;
  return rc;
}

// The instance's own model settings replace the config's [model] block.
Problem load_problem(const ProblemArgs& a, RunConfig& rc) {
  if (a.instance.empty() == a.quadratic.empty()) {
    throw ConfigError("give exactly one of --instance DIR or --quadratic M.csv");
  }
  if (!a.instance.empty()) {
    const Instance inst = load_instance(a.instance);
    rc.model = inst.config;
    return problem_from_instance(inst, rc.huber());
  }
  const SymMatrix m = read_matrix(a.quadratic);
  const int k = a.k > 0 ? a.k : rc.model.k;
  rc.model.n = static_cast<int>(m.dim());
  rc.model.k = k;
  return quadratic_problem(m, k);
}

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "INI run configuration");
  cmd->add_option("--seed", c.seed, "seed or seed list, e.g. 3 or 0-19 or 1,4,7");
  cmd->add_option("--out", c.out, "output directory");
}

void add_problem(CLI::App* cmd, ProblemArgs& a) {
  cmd->add_option("--instance", a.instance, "instance directory written by generate");
  cmd->add_option("--quadratic", a.quadratic, "target M (CSV, header x_1..x_n) for 1/2||X-M||^2");
  cmd->add_option("--k", a.k, "rank k for --quadratic");
}

int cmd_generate(const Common& common) {
  RunConfig rc = base_config(common);
  rc.model.validate();
  for (std::uint64_t seed : rc.seeds) {
    ModelConfig m = rc.model;
    m.seed = seed;
    const fs::path dir = rc.out / ("seed_" + std::to_string(seed));
    save_instance(dir, generate(m));
    std::cout << dir.string() << '\n';
  }
  return kOk;
}

struct SolveArgs {
  Common common;
  ProblemArgs problem;
  std::string solver;
  std::string init;
  std::string step;
  std::optional<double> step_value;
  std::optional<double> tol;
  std::optional<int> max_iters;
  std::optional<int> rank_budget;
};

int cmd_solve(const SolveArgs& a) {
  RunConfig rc = base_config(a.common);
  const Problem p = load_problem(a.problem, rc);
  if (!a.solver.empty()) rc.solver = parse_solver(a.solver);
  if (!a.init.empty()) rc.init = parse_init(a.init);
  if (!a.step.empty()) {
    try {
      rc.step = StepPolicy{parse_step_kind(a.step), rc.step ? rc.step->value : 0.0};
    } catch (const InputError& e) {
      throw ConfigError(e.what());
    }
  }
  if (a.step_value) {
    StepPolicy s = rc.step.value_or(StepPolicy::fixed(0.0));
    s.value = *a.step_value;
    rc.step = s;
  }
  if (a.tol) rc.stop.gap_tol = *a.tol;
  if (a.max_iters) rc.stop.max_iters = *a.max_iters;
  if (a.rank_budget) rc.rank_budget = *a.rank_budget;
  rc.validate();

  const StartPoint start = make_start(p, rc.init, rc.seeds.front());
  const SolveSettings settings = settings_from(rc, p);
  const RunResult r = run_solver(p, start, settings);

  write_matrix(rc.out / "solution.csv", r.solution);
  write_trace(rc.out / "trace.csv", r.trace);
  const KeyValues kv = result_block(r, rc.solver, rc.init, settings.step);
  kv.write(rc.out / "result.txt");
  std::cout << kv.str();
  if (r.failed()) {
    std::cerr << "solve: run ended with " << fantope::to_string(r.trace.reason)
              << (r.error.empty() ? "" : ": " + r.error) << '\n';
    return kNumerical;
  }
  return kOk;
}

struct DiagnoseArgs {
  Common common;
  ProblemArgs problem;
  std::string solution;
  std::optional<int> growth_samples;
};

int cmd_diagnose(const DiagnoseArgs& a) {
  RunConfig rc = base_config(a.common);
  const Problem p = load_problem(a.problem, rc);
  if (a.growth_samples) rc.growth_samples = *a.growth_samples;
  const SymMatrix x = a.solution == "pca" ? pca_start(p).matrix() : read_matrix(a.solution);
  const Diagnostics d = diagnose(p, x, rc.growth_samples, rc.seeds.front());
  const KeyValues kv = d.block();
  if (!a.common.out.empty()) kv.write(rc.out / "report.txt");
  std::cout << kv.str();
  return kOk;
}

struct BenchArgs {
  Common common;
  ProblemArgs problem;
  std::optional<int> repetitions;
  std::optional<int> iterations;
};

int cmd_bench(const BenchArgs& a) {
  RunConfig rc = base_config(a.common);
  if (a.repetitions) rc.bench_repetitions = *a.repetitions;
  if (a.iterations) rc.bench_iterations = *a.iterations;
  Problem p;
  if (a.problem.instance.empty() && a.problem.quadratic.empty()) {
    rc.validate();
    ModelConfig m = rc.model;
    m.seed = rc.seeds.front();
    p = problem_from_instance(generate(m), rc.huber());
  } else {
    p = load_problem(a.problem, rc);
  }
  if (rc.bench_repetitions < 1 || rc.bench_iterations < 1) {
    throw ConfigError("bench repetitions and iterations must be >= 1");
  }
  const StepPolicy step = rc.step && !rc.step->is_linesearch() ? *rc.step
                          : p.data ? StepPolicy::empirical_lambda()
                                   : StepPolicy::inverse_beta();
  const BenchReport rep = bench(p, rc.bench_repetitions, rc.bench_iterations, step);

  std::ofstream csv = open_output(rc.out / "bench.csv");
  csv << "repetition,qr_mean_ns,eig_mean_ns,ratio\n";
  for (const BenchRow& r : rep.rows) {
    csv << r.repetition << ',' << format_double(r.qr_mean_ns) << ','
        << format_double(r.eig_mean_ns) << ',' << format_double(r.ratio()) << '\n';
  }
  KeyValues kv;
  kv.set("n", static_cast<int>(p.n()));
  kv.set("k", p.k);
  kv.set("repetitions", rc.bench_repetitions);
  kv.set("iterations", rc.bench_iterations);
  kv.set("qr_mean_ns", rep.mean_qr_ns());
  kv.set("eig_mean_ns", rep.mean_eig_ns());
  kv.set("ratio_mean", rep.mean_ratio());
  kv.set("ratio_std", rep.std_ratio());
  kv.write(rc.out / "summary.txt");
  std::cout << kv.str();
  return kOk;
}

int cmd_sweep(const Common& common) {
  if (common.config.empty()) throw ConfigError("sweep needs --config");
  const RunConfig rc = base_config(common);
  const std::vector<SweepRun> runs = sweep(rc);
  const std::vector<SweepRow> rows = aggregate(runs);
  {
    std::ofstream out = open_output(rc.out / "table.csv");
    write_sweep_table(out, rows);
  }
  {
    std::ofstream out = open_output(rc.out / "runs.csv");
    write_sweep_runs(out, runs);
  }
  write_sweep_table(std::cout, rows);
  for (const SweepRun& r : runs) {
    if (r.result.failed()) return kNumerical;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Subspace optimization over the Fantope: instance generation, solvers, "
               "diagnostics, timing and sweeps"};
  app.require_subcommand(1);

  Common gen_common;
  auto* gen = app.add_subcommand("generate", "write one instance directory per seed");
  add_common(gen, gen_common);

  SolveArgs solve;
  auto* sol = app.add_subcommand("solve", "run a solver and write solution, trace and result");
  add_common(sol, solve.common);
  add_problem(sol, solve.problem);
  sol->add_option("--solver", solve.solver, "goi, pgd, pgd-convex or fw");
  sol->add_option("--init", solve.init, "pca, random-projection, random-fantope or file:PATH");
  sol->add_option("--step", solve.step, "step policy");
  sol->add_option("--step-value", solve.step_value, "step size for the fixed policy");
  sol->add_option("--tol", solve.tol, "duality-gap tolerance");
  sol->add_option("--max-iters", solve.max_iters, "iteration limit");
  sol->add_option("--rank-budget", solve.rank_budget, "rank budget r' for pgd-convex");

  DiagnoseArgs diag;
  auto* dia = app.add_subcommand("diagnose", "eigen-gap, recovery, certificate and growth report");
  add_common(dia, diag.common);
  add_problem(dia, diag.problem);
  dia->add_option("--solution", diag.solution, "solution CSV, or 'pca'")->required();
  dia->add_option("--growth-samples", diag.growth_samples, "quadratic-growth probe samples");

  BenchArgs bargs;
  auto* ben = app.add_subcommand("bench", "per-iteration QR vs eigendecomposition time");
  add_common(ben, bargs.common);
  add_problem(ben, bargs.problem);
  ben->add_option("--repetitions", bargs.repetitions, "repetitions (default 5)");
  ben->add_option("--iterations", bargs.iterations, "iterations per repetition (default 10)");

  Common sweep_common;
  auto* swp = app.add_subcommand("sweep", "solve and diagnose a grid of configurations");
  add_common(swp, sweep_common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (gen->parsed()) return cmd_generate(gen_common);
    if (sol->parsed()) return cmd_solve(solve);
    if (dia->parsed()) return cmd_diagnose(diag);
    if (ben->parsed()) return cmd_bench(bargs);
    if (swp->parsed()) return cmd_sweep(sweep_common);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumerical;
  }
  return kUsage;
}
