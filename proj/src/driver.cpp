#include "parorb/driver.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "parorb/errors.hpp"
#include "parorb/oracle.hpp"

namespace parorb {

namespace {

using nlohmann::json;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json config_echo(const RunConfig& cfg) {
  json problem;
  problem["dimension"] = cfg.problem.dimension;
  problem["extents"] = cfg.problem.extents;
  problem["points_per_axis"] = cfg.problem.points_per_axis;
  json atoms = json::array();
  for (const Atom& a : cfg.problem.atoms) {
    json atom;
    atom["position"] = std::vector<double>(a.position.begin(),
                                           a.position.begin() + cfg.problem.dimension);
    atom["charge"] = a.charge;
    atom["softening"] = a.softening;
    atoms.push_back(atom);
  }
  problem["atoms"] = atoms;
  problem["n_orbitals"] = cfg.problem.n_orbitals;
  problem["hartree_enabled"] = cfg.problem.hartree_enabled;
  problem["xc_enabled"] = cfg.problem.xc_enabled;
  problem["hartree_mode"] =
      cfg.problem.hartree_mode == HartreeMode::kKernel ? "kernel" : "poisson";

  const OptimizerParams& p = cfg.optimizer;
  json optimizer;
  optimizer["algorithm"] = algorithm_name(p.algorithm);
  optimizer["bb_variant"] = p.bb_variant == BbVariant::kBb1   ? "bb1"
                            : p.bb_variant == BbVariant::kBb2 ? "bb2"
                                                              : "alternate";
  optimizer["bb_trace_abs"] = p.bb_trace_abs == BbTraceAbs::kDiagAbs ? "diag" : "trace";
  optimizer["rho1"] = p.rho1;
  optimizer["delta"] = p.delta;
  optimizer["eta"] = p.eta;
  optimizer["n_diag"] = p.n_diag;
  optimizer["n_org"] = p.n_org;
  optimizer["max_inner"] = p.max_inner;
  optimizer["max_backtracks"] = p.max_backtracks;
  optimizer["tau_min"] = p.tau_min;
  optimizer["tau_max"] = p.tau_max;
  optimizer["grad_tol"] = p.grad_tol;
  optimizer["mean_abs_tol"] = p.mean_abs_tol;
  optimizer["energy_tol"] = p.energy_tol;
  optimizer["convergence_mode"] = convergence_mode_name(p.convergence_mode);
  optimizer["outer_levels"] = p.outer_levels;
  optimizer["verify_orthonormality"] = p.verify_orthonormality;

  json root;
  root["problem"] = problem;
  root["optimizer"] = optimizer;
  root["threads"] = cfg.threads;
  root["seed"] = p.seed;
  return root;
}

std::string outcome_name(SolveOutcome o) {
  switch (o) {
    case SolveOutcome::kConverged:
      return "converged";
    case SolveOutcome::kMaxIterations:
      return "max_iterations";
    case SolveOutcome::kStagnation:
      return "stagnation";
    case SolveOutcome::kNumericalFailure:
      return "numerical_failure";
  }
  return "unknown";
}

}  // namespace

RunSummary make_summary(const SolveResult& result, const Problem& final_problem,
                        const RunConfig& cfg) {
  RunSummary s;
  s.energy = result.energy;
  s.outcome = outcome_name(result.outcome);
  s.iterations_total = result.iterations_total;
  s.final_grad_norm = result.final_grad_norm;
  s.final_ks_residual = oracle::ks_residual(result.orbitals, final_problem);
  s.wall_seconds = result.wall_seconds;
  s.parallel_seconds = result.par_seconds;
  s.sync_seconds = result.sync_seconds;
  s.parallel_fraction =
      result.wall_seconds > 0.0 ? result.par_seconds / result.wall_seconds : 0.0;
  s.convergence_mode = convergence_mode_name(cfg.optimizer.convergence_mode);
  switch (cfg.optimizer.convergence_mode) {
    case ConvergenceMode::kGradNorm:
      s.convergence_threshold = cfg.optimizer.grad_tol;
      break;
    case ConvergenceMode::kMeanAbs:
      s.convergence_threshold = cfg.optimizer.mean_abs_tol;
      break;
    case ConvergenceMode::kEnergyChange:
      s.convergence_threshold = cfg.optimizer.energy_tol;
      break;
  }

  const bool linear = !final_problem.hartree_enabled && !final_problem.xc_enabled;
  if (cfg.io.oracle_check && linear &&
      final_problem.grid->num_points() <= oracle::kDenseGuard) {
    HamiltonianState state = build_hamiltonian(result.orbitals, final_problem);
    oracle::DenseOperator op = oracle::materialize(state);
    oracle::EigenPairs pairs = oracle::dense_eigensolve(op, final_problem.n_orbitals);
    OracleComparison cmp;
    for (double ev : pairs.eigenvalues) cmp.dense_energy += ev;
    cmp.abs_error = std::abs(cmp.dense_energy - result.energy.total);
    s.oracle = cmp;
  }
  return s;
}

std::string log_header() {
  return "level,iter,energy,grad_norm,tau,backtracks,did_orth,did_diag,"
         "offdiag_max,wall_ms";
}

std::string format_log_row(const IterationRecord& r) {
  char buf[320];
  std::snprintf(buf, sizeof buf, "%d,%d,%.17g,%.17g,%.17g,%d,%d,%d,%.17g,%.3f",
                r.level, r.iter, r.energy, r.grad_norm, r.tau, r.backtracks,
                r.did_orth ? 1 : 0, r.did_diag ? 1 : 0, r.offdiag_max, r.wall_ms);
  return buf;
}

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  return out;
}

}  // namespace

void write_log(const std::string& path, const std::vector<IterationRecord>& records,
               int log_every) {
  std::ofstream out = open_out(path);
  out << log_header() << '\n';
  for (std::size_t i = 0; i < records.size(); ++i) {
    const bool last_of_level = i + 1 == records.size() ||
                               records[i + 1].level != records[i].level;
    if (records[i].iter % log_every == 0 || last_of_level) {
      out << format_log_row(records[i]) << '\n';
    }
  }
  if (!out) throw IoError("write failed for " + path);
}

void write_summary(const std::string& path, const RunSummary& s, const RunConfig& cfg) {
  json root;
  root["artifact_version"] = kArtifactVersion;
  root["outcome"] = s.outcome;
  json energy;
  energy["kinetic"] = s.energy.kinetic;
  energy["external"] = s.energy.external;
  energy["hartree"] = s.energy.hartree;
  energy["xc"] = s.energy.xc;
  energy["total"] = s.energy.total;
  root["energy"] = energy;
  root["iterations_total"] = s.iterations_total;
  root["final_grad_norm"] = s.final_grad_norm;
  root["final_ks_residual"] = s.final_ks_residual;
  root["wall_seconds"] = s.wall_seconds;
  root["parallel_seconds"] = s.parallel_seconds;
  root["sync_seconds"] = s.sync_seconds;
  root["parallel_fraction"] = s.parallel_fraction;
  json convergence;
  convergence["mode"] = s.convergence_mode;
  convergence["threshold"] = s.convergence_threshold;
  root["convergence"] = convergence;
  if (s.oracle) {
    json oracle;
    oracle["dense_energy"] = s.oracle->dense_energy;
    oracle["abs_error"] = s.oracle->abs_error;
    root["oracle"] = oracle;
  }
  root["config"] = config_echo(cfg);

  std::ofstream out = open_out(path);
  out << root.dump(2) << '\n';
  if (!out) throw IoError("write failed for " + path);
}

void write_reduction(const std::string& path,
                     const std::vector<IterationRecord>& records, double e_min) {
  std::ofstream out = open_out(path);
  out << "iter,energy_minus_emin\n";
  int final_level = 0;
  for (const IterationRecord& r : records) final_level = std::max(final_level, r.level);
  for (const IterationRecord& r : records) {
    if (r.level == final_level && r.did_orth) {
      out << r.iter << ',' << fmt(r.energy - e_min) << '\n';
    }
  }
  if (!out) throw IoError("write failed for " + path);
}

int run(const RunConfig& cfg) {
  SolveResult result;
  Problem problem;
  try {
    problem = build_problem(cfg.problem);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << '\n';
    return kExitConfigError;
  }

  Executor ex(cfg.threads);
  try {
    result = solve(problem, cfg.optimizer, ex);
  } catch (const std::exception& e) {
    std::cerr << "solver error: " << e.what() << '\n';
    return kExitStagnation;
  }

  // The final iterate lives on the last refinement level's grid.
  Problem final_problem =
      result.orbitals.grid_ptr() && !(*result.orbitals.grid_ptr() == *problem.grid)
          ? on_grid(problem, result.orbitals.grid_ptr())
          : problem;

  try {
    write_log(cfg.io.log_path, result.records, cfg.io.log_every);
    RunSummary summary = make_summary(result, final_problem, cfg);
    write_summary(cfg.io.summary_path, summary, cfg);
    if (cfg.io.emit_reduction) {
      write_reduction(cfg.io.reduction_path, result.records, result.energy.total);
    }
  } catch (const IoError& e) {
    std::cerr << e.what() << '\n';
    return kExitIoError;
  }

  if (!result.drift_iterations.empty()) {
    std::cerr << "note: <W~^T W~> off-diagonal exceeded 0.5 on "
              << result.drift_iterations.size() << " iterations\n";
  }
  if (!result.message.empty()) std::cerr << result.message << '\n';

  switch (result.outcome) {
    case SolveOutcome::kConverged:
      return kExitConverged;
    case SolveOutcome::kMaxIterations:
      return kExitNotConverged;
    case SolveOutcome::kStagnation:
    case SolveOutcome::kNumericalFailure:
      return kExitStagnation;
  }
  return kExitNotConverged;
}

}  // namespace parorb
