#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "parorb/energy.hpp"
#include "parorb/manifold.hpp"
#include "parorb/parallel.hpp"

namespace parorb {

enum class Algorithm { kOptmQr, kOptPar, kOptParMod };
enum class BbVariant { kBb1, kBb2, kAlternate };
// Reading of tr|<S^T Y>|: sum of |diagonal entries| (the per-orbital
// curvature products), or |trace| of the matrix.
enum class BbTraceAbs { kDiagAbs, kAbsTrace };
enum class ConvergenceMode { kGradNorm, kMeanAbs, kEnergyChange };

struct OptimizerParams {
  Algorithm algorithm = Algorithm::kOptParMod;
  BbVariant bb_variant = BbVariant::kBb1;
  BbTraceAbs bb_trace_abs = BbTraceAbs::kDiagAbs;
  double rho1 = 1e-4;
  double delta = 0.1;
  double eta = 0.85;
  int n_diag = 100;  // subspace diagonalization period; 0 disables
  int n_org = 1;     // orthogonalization period (opt_par_mod only)
  int max_inner = 10000;
  int max_backtracks = 20;
  double tau_min = 1e-10;
  double tau_max = 1e3;
  double grad_tol = 1e-6;
  double mean_abs_tol = 5e-9;
  double energy_tol = 1e-13;
  ConvergenceMode convergence_mode = ConvergenceMode::kGradNorm;
  int outer_levels = 1;
  std::uint64_t seed = 1;
  // Measure max |<W^T W> - I| after every orthogonalization. Off, the
  // measurement is skipped when the Cholesky pivots already certify it.
  bool verify_orthonormality = true;

  void validate() const;  // throws InvalidArgument
};

// Zhang-Hager nonmonotone reference value C and weight accumulator Q.
struct NonmonotoneState {
  double c = 0.0;
  double q = 1.0;
};

// Previous displacement / direction-difference pair for the BB step.
struct BbHistory {
  FieldSet s;  // W^(l) - W^(l-1)
  FieldSet y;  // Z^(l) - Z^(l-1)
  bool valid = false;
};

struct IterationRecord {
  int level = 0;
  int iter = 0;
  double energy = 0.0;     // last evaluated total energy
  double grad_norm = 0.0;  // residual norm used this iteration (see README)
  double tau = 0.0;
  int backtracks = 0;
  bool did_orth = false;
  bool did_diag = false;
  double offdiag_max = 0.0;  // of <W~^T W~> before Orth; 0 on raw steps
  double wall_ms = 0.0;
};

// Per accepted line-search step, for the descent-ledger checks.
struct AcceptedStep {
  int level = 0;
  int iter = 0;
  double energy = 0.0;  // E(W^(l+1))
  double c_before = 0.0;
  double c_after = 0.0;
  double q_before = 0.0;
  double q_after = 0.0;
  double tau = 0.0;
  double znorm2 = 0.0;  // tr<Z^T Z> of the step direction
};

// Per orthogonalization step, measured on the accepted trial.
struct OrthCheckpoint {
  int level = 0;
  int iter = 0;
  double offdiag_max = 0.0;
  double diag_deviation_max = 0.0;
  double orth_deviation = 0.0;  // max |<W^T W> - I| after Orth
};

enum class SolveOutcome { kConverged, kMaxIterations, kStagnation, kNumericalFailure };

struct SolveResult {
  OrbitalSet orbitals;
  EnergyBreakdown energy;  // breakdown at the last accepted step
  SolveOutcome outcome = SolveOutcome::kMaxIterations;
  std::string message;
  std::vector<IterationRecord> records;
  int iterations_total = 0;
  double final_grad_norm = 0.0;  // full Stiefel gradient at the final iterate
  double wall_seconds = 0.0;
  double par_seconds = 0.0;
  double sync_seconds = 0.0;
  std::vector<AcceptedStep> accepted_steps;
  std::vector<OrthCheckpoint> checkpoints;
  std::vector<int> drift_iterations;  // offdiag_max > 0.5 flags (not errors)
};

// tau^{l,1} = tr<S^T S> / tr|<S^T Y>|, tau^{l,2} = tr|<S^T Y>| / tr<Y^T Y>,
// clamped to [tau_min, tau_max]. `iter` resolves the alternate variant.
double bb_step(const BbHistory& history, const OptimizerParams& p, int iter = 0);

// First-iteration rule: clamp(1 / ||Z||_F); returns 0 for a zero direction,
// which signals convergence rather than an error.
double initial_step(const FieldSet& z, const OptimizerParams& p);

// Smallest s with E(Orth(W - tau_raw delta^s Z)) <= C - rho1 tau ||Z||_F^2;
// updates the C/Q recurrences on acceptance. Throws StagnationError when
// max_backtracks is exhausted.
struct LineSearchResult {
  double tau = 0.0;
  OrbitalSet w;
  double energy = 0.0;
  int backtracks = 0;
};
LineSearchResult nonmonotone_search(
    const OrbitalSet& w, const FieldSet& z, double tau_raw, NonmonotoneState& nm,
    const OptimizerParams& p,
    const std::function<double(const OrbitalSet&)>& energy_fn);

bool nonmonotone_accepts(double trial_energy, double c, double rho1, double tau,
                         double znorm2);

struct ConvergenceData {
  double grad_norm = -1.0;      // < 0 when not computed
  double mean_abs_grad = -1.0;  // < 0 when not computed
  std::span<const double> energies;  // at orthogonalization points, oldest first
  int n_org = 1;
};
bool check_convergence(const OptimizerParams& p, const ConvergenceData& d);

// N Gaussian bumps centered on the atoms (cycling), widths drawn from
// [0.5, 2.0] bohr, 1e-2 random perturbation, then orthonormalized.
OrbitalSet initialize_orbitals(const GridPtr& grid, const AtomList& atoms, int n,
                               std::uint64_t seed);

// Single-level solvers. u0 must be orthonormal.
SolveResult optm_qr_solve(const OrbitalSet& u0, const Problem& p,
                          const OptimizerParams& params,
                          Executor& ex = Executor::serial());
SolveResult opt_par_inner(const OrbitalSet& u0, const Problem& p,
                          const OptimizerParams& params,
                          Executor& ex = Executor::serial());
SolveResult opt_par_mod_inner(const OrbitalSet& u0, const Problem& p,
                              const OptimizerParams& params,
                              Executor& ex = Executor::serial());

// Outer loop: initialize orbitals, run the configured inner solver per
// refinement level, prolongate between levels. BB history and nonmonotone
// state restart on each level.
SolveResult solve(const Problem& level0, const OptimizerParams& params,
                  Executor& ex = Executor::serial());

}  // namespace parorb
