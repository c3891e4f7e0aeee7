// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Oracle references are computed here, independently of the
// solver path under test.

#include <Eigen/QR>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "parorb/config.hpp"
#include "parorb/driver.hpp"
#include "parorb/optimizer.hpp"
#include "parorb/oracle.hpp"
#include "problems.hpp"

using namespace parorb;

namespace {

struct Checker {
  bool ok = true;
  std::ostringstream detail;

  void require(bool condition, const std::string& what) {
    if (!condition) {
      ok = false;
      if (detail.tellp() > 0) detail << "; ";
      detail << what;
    }
  }
};

struct Criterion {
  int id;
  std::string name;
  std::function<void(Checker&)> body;
};

double sum_lowest_eigenvalues(const Problem& p, int n) {
  OrbitalSet probe = initialize_orbitals(p.grid, p.atoms, 1, 1);
  oracle::DenseOperator op = oracle::materialize(build_hamiltonian(probe, p));
  oracle::EigenPairs pairs = oracle::dense_eigensolve(op, n);
  double sum = 0.0;
  for (double ev : pairs.eigenvalues) sum += ev;
  return sum;
}

Eigen::MatrixXd random_orthogonal(int n, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) a(i, j) = rng.normal();
  }
  return Eigen::HouseholderQR<Eigen::MatrixXd>(a).householderQ();
}

std::string strip_timing(const std::vector<IterationRecord>& records) {
  std::string out;
  for (IterationRecord r : records) {
    r.wall_ms = 0.0;
    out += format_log_row(r);
    out += '\n';
  }
  return out;
}

// Shared state: the criterion-2 runs are reused by criteria 3, 4, 6 and 7.
struct NonlinearRuns {
  Problem problem;
  SolveResult optm_qr;
  SolveResult opt_par;
  SolveResult opt_par_mod;
};

NonlinearRuns& nonlinear_runs() {
  static NonlinearRuns runs = [] {
    NonlinearRuns r{testing::two_well_1d(400, 4), {}, {}, {}};
    OrbitalSet u0 = initialize_orbitals(r.problem.grid, r.problem.atoms, 4, 42);
    OptimizerParams params;
    params.max_inner = 8000;
    params.convergence_mode = ConvergenceMode::kGradNorm;
    params.grad_tol = 1e-6;
    r.optm_qr = optm_qr_solve(u0, r.problem, params);
    r.opt_par = opt_par_inner(u0, r.problem, params);
    OptimizerParams mod = params;
    mod.n_org = 2;
    mod.n_diag = 50;
    r.opt_par_mod = opt_par_mod_inner(u0, r.problem, mod);
    return r;
  }();
  return runs;
}

void criterion_linear_optimality(Checker& c) {
  Problem p = testing::linear_well_1d(400, 4);
  const double reference = sum_lowest_eigenvalues(p, 4);
  OrbitalSet u0 = initialize_orbitals(p.grid, p.atoms, 4, 42);
  OptimizerParams params;
  params.max_inner = 8000;

  struct Run {
    const char* name;
    SolveResult result;
  };
  OptimizerParams mod = params;
  mod.n_org = 2;
  mod.n_diag = 50;
  std::vector<Run> runs;
  runs.push_back({"optm_qr", optm_qr_solve(u0, p, params)});
  runs.push_back({"opt_par", opt_par_inner(u0, p, params)});
  runs.push_back({"opt_par_mod", opt_par_mod_inner(u0, p, mod)});
  for (const Run& r : runs) {
    c.require(r.result.outcome == SolveOutcome::kConverged,
              std::string(r.name) + " did not converge");
    const double err = std::abs(r.result.energy.total - reference);
    std::ostringstream msg;
    msg << r.name << " |E - oracle| = " << err;
    c.require(err < 1e-8, msg.str() + " >= 1e-8");
    c.require(r.result.wall_seconds < 60.0,
              std::string(r.name) + " exceeded 60 s single-threaded");
  }
  c.detail << "oracle " << reference;
}

void criterion_nonlinear_agreement(Checker& c) {
  NonlinearRuns& r = nonlinear_runs();
  c.require(r.optm_qr.outcome == SolveOutcome::kConverged, "optm_qr did not converge");
  c.require(r.opt_par.outcome == SolveOutcome::kConverged, "opt_par did not converge");
  c.require(r.opt_par_mod.outcome == SolveOutcome::kConverged,
            "opt_par_mod did not converge");
  const double d1 = std::abs(r.opt_par.energy.total - r.optm_qr.energy.total);
  const double d2 = std::abs(r.opt_par_mod.energy.total - r.optm_qr.energy.total);
  c.require(d1 < 1e-6, "opt_par disagrees with optm_qr");
  c.require(d2 < 1e-6, "opt_par_mod disagrees with optm_qr");
  c.detail << "|dE(opt_par)| = " << d1 << ", |dE(opt_par_mod)| = " << d2;
}

void criterion_fixed_point(Checker& c) {
  NonlinearRuns& r = nonlinear_runs();
  const double k1 = oracle::ks_residual(r.optm_qr.orbitals, r.problem);
  const double k2 = oracle::ks_residual(r.opt_par.orbitals, r.problem);
  const double k3 = oracle::ks_residual(r.opt_par_mod.orbitals, r.problem);
  c.require(k1 <= 1e-5, "optm_qr ks_residual > 1e-5");
  c.require(k2 <= 1e-5, "opt_par ks_residual > 1e-5");
  c.require(k3 <= 1e-5, "opt_par_mod ks_residual > 1e-5");
  c.detail << "ks residuals " << k1 << ", " << k2 << ", " << k3;
}

void criterion_invariants(Checker& c) {
  NonlinearRuns& r = nonlinear_runs();

  // orthonormality at every orthogonalization step
  double worst_orth = 0.0;
  for (const SolveResult* sr : {&r.optm_qr, &r.opt_par, &r.opt_par_mod}) {
    for (const OrthCheckpoint& cp : sr->checkpoints) {
      worst_orth = std::max(worst_orth, cp.orth_deviation);
    }
  }
  c.require(worst_orth <= 1e-10, "orthonormality deviation above 1e-10");

  // gradient tangency at the converged iterates and at a random point
  for (const SolveResult* sr : {&r.optm_qr, &r.opt_par}) {
    HamiltonianState st = build_hamiltonian(sr->orbitals, r.problem);
    FieldSet hu = apply_hamiltonian(st, sr->orbitals, Executor::serial());
    StiefelGradient g = stiefel_gradient(sr->orbitals, hu);
    c.require(gram(g.directions, sr->orbitals.orbitals).cwiseAbs().maxCoeff() <= 1e-10,
              "gradient not tangent");
  }
  OrbitalSet u = testing::random_orthonormal(r.problem.grid, 4, 5);
  {
    HamiltonianState st = build_hamiltonian(u, r.problem);
    FieldSet hu = apply_hamiltonian(st, u, Executor::serial());
    StiefelGradient g = stiefel_gradient(u, hu);
    c.require(gram(g.directions, u.orbitals).cwiseAbs().maxCoeff() <= 1e-10,
              "gradient not tangent at random point");

    // rotation invariance of E and rho
    const double e0 = total_energy(u, r.problem).total;
    Field rho0 = density(u);
    for (std::uint64_t seed = 60; seed < 63; ++seed) {
      OrbitalSet up = mix(u, random_orthogonal(4, seed));
      c.require(std::abs(total_energy(up, r.problem).total - e0) <=
                    1e-12 * std::abs(e0),
                "energy not rotation invariant");
      Field rho1 = density(up);
      double dev = 0.0;
      for (std::size_t q = 0; q < rho0.values.size(); ++q) {
        dev = std::max(dev, std::abs(rho1.values[q] - rho0.values[q]));
      }
      c.require(dev <= 1e-13, "density not rotation invariant");
    }

    // subspace rotation diagonalizes Sigma and preserves the density
    SubspaceRotation rot = subspace_rotate(u, g.sigma);
    FieldSet hu_rot = apply_hamiltonian(st, rot.w, Executor::serial());
    GramMatrix sigma_new = gram(hu_rot, rot.w.orbitals);
    double offdiag = 0.0;
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) {
        if (i != j) offdiag = std::max(offdiag, std::abs(sigma_new(i, j)));
      }
    }
    c.require(offdiag <= 1e-8, "subspace rotation left Sigma non-diagonal");
    Field rho_rot = density(rot.w);
    double rho_dev = 0.0;
    for (std::size_t q = 0; q < rho0.values.size(); ++q) {
      rho_dev = std::max(rho_dev, std::abs(rho_rot.values[q] - rho0.values[q]));
    }
    c.require(rho_dev <= 1e-12, "subspace rotation changed the density");
  }

  // Zhang-Hager ledger and the accepted-step inequality, as recorded
  int steps = 0;
  for (const SolveResult* sr : {&r.optm_qr, &r.opt_par, &r.opt_par_mod}) {
    for (const AcceptedStep& s : sr->accepted_steps) {
      ++steps;
      c.require(s.c_after >= s.energy, "C < E after an accepted step");
      c.require(s.energy <= s.c_before - 1e-4 * s.tau * s.znorm2,
                "accepted step violates the descent inequality");
    }
  }
  c.detail << "max orth deviation " << worst_orth << " over " << steps
           << " accepted steps";
}

void criterion_fd_gradient(Checker& c) {
  Problem lin = testing::linear_well_1d(400, 4);
  Problem full = nonlinear_runs().problem;
  OrbitalSet u_lin = initialize_orbitals(lin.grid, lin.atoms, 4, 9);
  OrbitalSet u_full = initialize_orbitals(full.grid, full.atoms, 4, 9);

  Rng rng(123);
  double worst_lin = 0.0, worst_full = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    FieldSet dir;
    for (int i = 0; i < 4; ++i) {
      Field f = make_field(lin.grid);
      for (double& v : f.values) v = rng.normal();
      dir.push_back(std::move(f));
    }
    worst_lin = std::max(worst_lin, oracle::fd_gradient_check(u_lin, dir, 1e-5, lin));
    worst_full = std::max(worst_full, oracle::fd_gradient_check(u_full, dir, 1e-5, full));
  }
  c.require(worst_lin <= 1e-7, "linear fd error above 1e-7");
  c.require(worst_full <= 1e-5, "nonlinear fd error above 1e-5");
  c.detail << "worst fd error: linear " << worst_lin << ", nonlinear " << worst_full;
}

void criterion_near_identity(Checker& c) {
  const SolveResult& r = nonlinear_runs().opt_par_mod;
  const std::size_t m = r.checkpoints.size();
  c.require(m >= 10, "fewer than 10 checkpoints");
  double worst_off = 0.0, worst_diag = 0.0;
  for (std::size_t i = m >= 10 ? m - 10 : 0; i < m; ++i) {
    worst_off = std::max(worst_off, r.checkpoints[i].offdiag_max);
    worst_diag = std::max(worst_diag, r.checkpoints[i].diag_deviation_max);
  }
  c.require(worst_off < 0.1, "off-diagonal max >= 0.1");
  c.require(worst_diag < 0.1, "diagonal deviation >= 0.1");
  c.detail << "final-10 checkpoints: offdiag " << worst_off << ", |diag-1| "
           << worst_diag;
}

void criterion_energy_reduction(Checker& c) {
  NonlinearRuns& runs = nonlinear_runs();
  const std::vector<std::pair<const char*, const SolveResult*>> cases{
      {"optm_qr", &runs.optm_qr},
      {"opt_par", &runs.opt_par},
      {"opt_par_mod", &runs.opt_par_mod}};
  for (const auto& [name, sr] : cases) {
    const double e_min = sr->energy.total;
    double final_gap = -1.0;
    bool nonneg = true;
    for (const IterationRecord& rec : sr->records) {
      if (!rec.did_orth) continue;
      const double gap = rec.energy - e_min;
      if (gap < 0.0) nonneg = false;
      final_gap = gap;
    }
    c.require(nonneg, std::string(name) + ": negative E - E_min at an orth step");
    c.require(final_gap >= 0.0 && final_gap < 1e-10,
              std::string(name) + ": final E - E_min not below 1e-10");
  }
  c.detail << "checked " << runs.optm_qr.records.size() << "+"
           << runs.opt_par.records.size() << "+" << runs.opt_par_mod.records.size()
           << " records";
}

void criterion_determinism_and_parallel(Checker& c) {
  Problem p3 = testing::box_3d_linear(24, 16);
  OptimizerParams params;
  params.algorithm = Algorithm::kOptParMod;
  params.n_org = 2;
  params.n_diag = 50;
  params.max_inner = 600;
  params.convergence_mode = ConvergenceMode::kEnergyChange;
  params.energy_tol = 1e-13;
  params.seed = 7;
  params.verify_orthonormality = false;

  RunConfig cfg;
  cfg.problem.dimension = 3;
  cfg.problem.extents = {12.0, 12.0, 12.0};
  cfg.problem.points_per_axis = {24, 24, 24};
  cfg.problem.atoms = p3.atoms;
  cfg.problem.n_orbitals = 16;
  cfg.optimizer = params;

  std::string reference;
  double fraction = 0.0;
  double coverage = 0.0;
  for (int threads : {1, 2, 8}) {
    Executor ex(threads);
    SolveResult r = solve(p3, params, ex);
    const std::string text = strip_timing(r.records);
    if (threads == 1) {
      reference = text;
      RunSummary summary = make_summary(r, p3, cfg);
      fraction = summary.parallel_fraction;
      coverage = (r.par_seconds + r.sync_seconds) / r.wall_seconds;
      c.require(r.outcome == SolveOutcome::kConverged ||
                    r.outcome == SolveOutcome::kMaxIterations,
                "3D run failed");
    } else {
      std::ostringstream msg;
      msg << "threads=" << threads << " log differs from threads=1";
      c.require(text == reference, msg.str());
    }
  }
  c.require(fraction > 0.5, "parallel fraction <= 0.5");
  c.require(std::abs(coverage - 1.0) <= 0.01,
            "par+sync does not account for total wall time within 1%");
  c.detail << "parallel fraction " << fraction << ", phase coverage " << coverage;
}

void criterion_outer_loop(Checker& c) {
  Problem coarse = testing::linear_well_1d(400, 4);
  OptimizerParams params;
  params.algorithm = Algorithm::kOptPar;
  params.outer_levels = 2;
  params.max_inner = 8000;
  params.seed = 42;

  SolveResult warm = solve(coarse, params);
  c.require(warm.outcome == SolveOutcome::kConverged, "two-level solve did not converge");

  Problem fine = testing::linear_well_1d(801, 4);
  const double reference = sum_lowest_eigenvalues(fine, 4);
  const double err = std::abs(warm.energy.total - reference);
  c.require(err < 1e-8, "fine-level energy misses the fine-grid oracle");

  OptimizerParams cold_params = params;
  cold_params.outer_levels = 1;
  SolveResult cold = solve(fine, cold_params);
  c.require(cold.outcome == SolveOutcome::kConverged, "cold fine solve did not converge");

  int warm_fine_iters = 0;
  for (const IterationRecord& rec : warm.records) {
    if (rec.level == 1) ++warm_fine_iters;
  }
  c.require(warm_fine_iters < cold.iterations_total,
            "warm start not strictly faster than cold start");
  c.detail << "|E - oracle| = " << err << "; fine iterations warm " << warm_fine_iters
           << " vs cold " << cold.iterations_total;
}

}  // namespace

int main() {
  std::vector<Criterion> criteria{
      {1, "linear-case optimality vs dense eigensolver", criterion_linear_optimality},
      {2, "nonlinear cross-algorithm agreement", criterion_nonlinear_agreement},
      {3, "fixed-point quality (KS residual)", criterion_fixed_point},
      {4, "invariant suite", criterion_invariants},
      {5, "gradient vs finite differences", criterion_fd_gradient},
      {6, "near-identity diagnostic at late checkpoints", criterion_near_identity},
      {7, "energy-reduction curve", criterion_energy_reduction},
      {8, "determinism and parallel contract", criterion_determinism_and_parallel},
      {9, "two-level outer loop", criterion_outer_loop},
  };

  int failures = 0;
  for (Criterion& cr : criteria) {
    Checker c;
    try {
      cr.body(c);
    } catch (const std::exception& e) {
      c.ok = false;
      c.detail << "exception: " << e.what();
    }
    std::printf("[%s] criterion %d: %s%s%s\n", c.ok ? "PASS" : "FAIL", cr.id,
                cr.name.c_str(), c.detail.tellp() > 0 ? " -- " : "",
                c.detail.str().c_str());
    std::fflush(stdout);
    if (!c.ok) ++failures;
  }
  return failures;
}
