#include "parorb/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <optional>

#include "parorb/errors.hpp"
#include "parorb/numeric.hpp"
#include "parorb/rng.hpp"

namespace parorb {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double clamp_tau(double raw, const OptimizerParams& p) {
  if (!std::isfinite(raw)) return p.tau_max;  // 0/0 or x/0 degeneracies
  return std::clamp(raw, p.tau_min, p.tau_max);
}

bool use_bb1(BbVariant v, int iter) {
  if (v == BbVariant::kBb1) return true;
  if (v == BbVariant::kBb2) return false;
  return iter % 2 == 0;
}

double bb_tau_from_products(double tr_ss, double tr_abs_sy, double tr_yy,
                            const OptimizerParams& p, int iter) {
  const double raw =
      use_bb1(p.bb_variant, iter) ? tr_ss / tr_abs_sy : tr_abs_sy / tr_yy;
  return clamp_tau(raw, p);
}

}  // namespace

void OptimizerParams::validate() const {
  if (!(rho1 > 0.0)) throw InvalidArgument("optimizer: rho1 must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidArgument("optimizer: delta must lie in (0, 1)");
  if (!(eta >= 0.0 && eta < 1.0)) throw InvalidArgument("optimizer: eta must lie in [0, 1)");
  if (n_diag < 0) throw InvalidArgument("optimizer: n_diag must be >= 0 (0 disables)");
  if (n_org < 1) throw InvalidArgument("optimizer: n_org must be >= 1");
  if (max_inner < 1) throw InvalidArgument("optimizer: max_inner must be >= 1");
  if (max_backtracks < 0) throw InvalidArgument("optimizer: max_backtracks must be >= 0");
  if (!(tau_min > 0.0) || !(tau_max >= tau_min)) {
    throw InvalidArgument("optimizer: require 0 < tau_min <= tau_max");
  }
  if (!(grad_tol > 0.0)) throw InvalidArgument("optimizer: grad_tol must be positive");
  if (!(mean_abs_tol > 0.0)) throw InvalidArgument("optimizer: mean_abs_tol must be positive");
  if (!(energy_tol > 0.0)) throw InvalidArgument("optimizer: energy_tol must be positive");
  if (outer_levels < 1) throw InvalidArgument("optimizer: outer_levels must be >= 1");
}

double bb_step(const BbHistory& history, const OptimizerParams& p, int iter) {
  if (!history.valid || history.s.empty() || history.s.size() != history.y.size()) {
    throw InvalidArgument("bb_step: invalid history; use initial_step instead");
  }
  double tr_ss = 0.0, tr_yy = 0.0, sy_diag_abs = 0.0, sy_trace = 0.0;
  for (std::size_t i = 0; i < history.s.size(); ++i) {
    tr_ss += inner_product(history.s[i], history.s[i]);
    tr_yy += inner_product(history.y[i], history.y[i]);
    const double sy = inner_product(history.s[i], history.y[i]);
    sy_diag_abs += std::abs(sy);
    sy_trace += sy;
  }
  const double tr_abs_sy =
      p.bb_trace_abs == BbTraceAbs::kDiagAbs ? sy_diag_abs : std::abs(sy_trace);
  return bb_tau_from_products(tr_ss, tr_abs_sy, tr_yy, p, iter);
}

double initial_step(const FieldSet& z, const OptimizerParams& p) {
  double norm2 = 0.0;
  for (const Field& f : z) norm2 += inner_product(f, f);
  const double norm = std::sqrt(norm2);
  if (norm == 0.0) return 0.0;  // converged signal
  return clamp_tau(std::min(p.tau_max, 1.0 / norm), p);
}

bool nonmonotone_accepts(double trial_energy, double c, double rho1, double tau,
                         double znorm2) {
  return std::isfinite(trial_energy) && trial_energy <= c - rho1 * tau * znorm2;
}

LineSearchResult nonmonotone_search(
    const OrbitalSet& w, const FieldSet& z, double tau_raw, NonmonotoneState& nm,
    const OptimizerParams& p,
    const std::function<double(const OrbitalSet&)>& energy_fn) {
  if (z.size() != w.orbitals.size()) {
    throw InvalidArgument("nonmonotone_search: direction count mismatch");
  }
  if (!(tau_raw > 0.0)) throw InvalidArgument("nonmonotone_search: tau_raw must be positive");

  double znorm2 = 0.0;
  for (const Field& f : z) znorm2 += inner_product(f, f);

  std::vector<double> trial_energies;
  for (int s = 0; s <= p.max_backtracks; ++s) {
    const double tau = tau_raw * std::pow(p.delta, s);
    std::vector<Field> trial_fields;
    trial_fields.reserve(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
      trial_fields.push_back(linear_combination(w.orbitals[i], -tau, z[i]));
    }
    OrbitalSet trial;
    try {
      trial = orthonormalize(make_orbital_set(std::move(trial_fields)));
    } catch (const DegenerateSetError&) {
      trial_energies.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    const double e = energy_fn(trial);
    trial_energies.push_back(e);
    if (nonmonotone_accepts(e, nm.c, p.rho1, tau, znorm2)) {
      const double q_before = nm.q;
      nm.q = p.eta * q_before + 1.0;
      nm.c = (p.eta * q_before * nm.c + e) / nm.q;
      return LineSearchResult{tau, std::move(trial), e, s};
    }
  }
  throw StagnationError("nonmonotone_search: no admissible step within max_backtracks",
                        std::move(trial_energies));
}

bool check_convergence(const OptimizerParams& p, const ConvergenceData& d) {
  switch (p.convergence_mode) {
    case ConvergenceMode::kGradNorm:
      return d.grad_norm >= 0.0 && d.grad_norm < p.grad_tol;
    case ConvergenceMode::kMeanAbs:
      return d.mean_abs_grad >= 0.0 && d.mean_abs_grad < p.mean_abs_tol;
    case ConvergenceMode::kEnergyChange: {
      // df^(l) = |E^(l-1) - E^(l)| / (|E^(l-1)| + 1), per-step average when
      // energies are n_org iterations apart; mean of the last three below tol.
      const std::size_t m = d.energies.size();
      if (m < 4) return false;
      double acc = 0.0;
      for (std::size_t k = 0; k < 3; ++k) {
        const double e_new = d.energies[m - 1 - k];
        const double e_old = d.energies[m - 2 - k];
        acc += std::abs(e_old - e_new) / (std::abs(e_old) + 1.0) /
               static_cast<double>(std::max(1, d.n_org));
      }
      return acc / 3.0 < p.energy_tol;
    }
  }
  return false;
}

OrbitalSet initialize_orbitals(const GridPtr& grid, const AtomList& atoms, int n,
                               std::uint64_t seed) {
  if (n < 1) throw InvalidArgument("initialize_orbitals: n must be >= 1");
  if (n > grid->num_points()) {
    throw InvalidArgument("initialize_orbitals: more orbitals than grid points");
  }
  const Grid& g = *grid;
  const int d = g.dimension();
  for (int attempt = 0; attempt < 5; ++attempt) {
    Rng rng(seed + static_cast<std::uint64_t>(attempt));
    std::vector<Field> fields;
    fields.reserve(n);
    for (int i = 0; i < n; ++i) {
      std::array<double, 3> center{};
      if (atoms.empty()) {
        for (int a = 0; a < d; ++a) center[a] = 0.5 * g.extent(a);
      } else {
        center = atoms[static_cast<std::size_t>(i) % atoms.size()].position;
      }
      const double width = rng.uniform(0.5, 2.0);
      Field f = make_field(grid);
      double xyz[3];
      for (std::int64_t p = 0; p < g.num_points(); ++p) {
        grid_coordinates(g, p, xyz);
        double r2 = 0.0;
        for (int a = 0; a < d; ++a) {
          const double dx = xyz[a] - center[a];
          r2 += dx * dx;
        }
        f.values[static_cast<std::size_t>(p)] = std::exp(-r2 / (2.0 * width * width));
      }
      for (double& v : f.values) v += 1e-2 * rng.uniform(-1.0, 1.0);
      fields.push_back(std::move(f));
    }
    try {
      return orthonormalize(make_orbital_set(std::move(fields)));
    } catch (const DegenerateSetError&) {
      // retry with the next derived seed
    }
  }
  throw DegenerateSetError("initialize_orbitals: no full-rank start in 5 attempts");
}

namespace {

// Shared inner loop. optm_qr uses full-Sigma gradient directions and
// orthogonalizes every step; opt_par uses per-orbital diagonal residuals and
// also orthogonalizes every step; opt_par_mod takes raw BB steps between
// orthogonalization iterations (every n_org-th).
class InnerLoop {
 public:
  InnerLoop(const Problem& prob, const OptimizerParams& p, Executor& ex,
            PhaseTimer& timer, int level, SolveResult& out)
      : prob_(prob),
        p_(p),
        ex_(ex),
        timer_(timer),
        level_(level),
        out_(out),
        nonlinear_(prob.hartree_enabled || prob.xc_enabled),
        n_org_(p.algorithm == Algorithm::kOptParMod ? p.n_org : 1),
        full_gradient_directions_(p.algorithm == Algorithm::kOptmQr) {}

  SolveOutcome run(OrbitalSet& w);

 private:
  using StatePtr = std::shared_ptr<const HamiltonianState>;

  StatePtr make_state(const OrbitalSet& u) {
    if (!nonlinear_ && fixed_state_) return fixed_state_;
    auto st = std::make_shared<const HamiltonianState>(build_hamiltonian(u, prob_));
    if (!nonlinear_) fixed_state_ = st;
    return st;
  }

  struct Directions {
    FieldSet z;
    double znorm2 = 0.0;
    double grad_norm = -1.0;  // full Stiefel gradient norm, when assembled
    double mean_abs = -1.0;
  };

  Directions compute_directions(const OrbitalSet& w, const FieldSet& hw,
                                bool need_full_gradient_data);
  double set_norm2(const FieldSet& z);

  const Problem& prob_;
  const OptimizerParams& p_;
  Executor& ex_;
  PhaseTimer& timer_;
  const int level_;
  SolveResult& out_;
  const bool nonlinear_;
  const int n_org_;
  const bool full_gradient_directions_;
  StatePtr fixed_state_;
};

double InnerLoop::set_norm2(const FieldSet& z) {
  const int n = static_cast<int>(z.size());
  std::vector<double> norms(n);
  timer_.par([&] {
    ex_.for_each(n, [&](std::int64_t i) { norms[i] = inner_product(z[i], z[i]); });
  });
  double acc = 0.0;
  for (double v : norms) acc += v;
  return acc;
}

InnerLoop::Directions InnerLoop::compute_directions(const OrbitalSet& w,
                                                    const FieldSet& hw,
                                                    bool need_full_gradient_data) {
  Directions d;
  const int n = w.n();
  const std::int64_t ng = w.grid().num_points();

  if (full_gradient_directions_) {
    StiefelGradient g = timer_.sync([&] { return stiefel_gradient(w, hw, ex_); });
    d.z = std::move(g.directions);
    d.znorm2 = set_norm2(d.z);
    d.grad_norm = std::sqrt(std::max(0.0, d.znorm2));
    if (p_.convergence_mode == ConvergenceMode::kMeanAbs && need_full_gradient_data) {
      std::vector<double> abs_sums(n);
      timer_.par([&] {
        ex_.for_each(n, [&](std::int64_t i) {
          abs_sums[i] = pairwise_sum(ng, 0, [&](std::int64_t q) {
            return std::abs(d.z[i].values[static_cast<std::size_t>(q)]);
          });
        });
      });
      double acc = 0.0;
      for (double v : abs_sums) acc += v;
      d.mean_abs = acc / (static_cast<double>(n) * static_cast<double>(ng));
    }
    return d;
  }

  DiagonalResiduals res;
  timer_.par([&] { res = diagonal_residuals(w, hw, ex_); });
  d.z = std::move(res.directions);
  d.znorm2 = set_norm2(d.z);

  if (need_full_gradient_data) {
    // The convergence criterion is on the full gradient H W - W Sigma even
    // when the search direction only uses the diagonal of Sigma.
    timer_.sync([&] {
      StiefelGradient g = stiefel_gradient(w, hw, ex_);
      double acc = 0.0;
      double abs_acc = 0.0;
      for (int i = 0; i < n; ++i) {
        acc += inner_product(g.directions[i], g.directions[i]);
        if (p_.convergence_mode == ConvergenceMode::kMeanAbs) {
          abs_acc += pairwise_sum(ng, 0, [&](std::int64_t q) {
            return std::abs(g.directions[i].values[static_cast<std::size_t>(q)]);
          });
        }
      }
      d.grad_norm = std::sqrt(std::max(0.0, acc));
      if (p_.convergence_mode == ConvergenceMode::kMeanAbs) {
        d.mean_abs = abs_acc / (static_cast<double>(n) * static_cast<double>(ng));
      }
    });
  }
  return d;
}

SolveOutcome InnerLoop::run(OrbitalSet& w) {
  const int n = w.n();
  const std::int64_t ng = w.grid().num_points();
  const double wq = w.grid().quadrature_weight();

  StatePtr state = timer_.sync([&] { return make_state(w); });
  FieldSet hw = timer_.par([&] { return apply_hamiltonian(*state, w, ex_); });
  const EnergyBreakdown initial_energy = total_energy(w, *state, ex_, &timer_);
  if (!std::isfinite(initial_energy.total)) {
    out_.message = "non-finite total energy at the level start";
    return SolveOutcome::kNumericalFailure;
  }
  out_.energy = initial_energy;

  NonmonotoneState nm{initial_energy.total, 1.0};
  std::vector<double> orth_energies{initial_energy.total};

  OrbitalSet prev_w;
  FieldSet prev_z;
  bool history_valid = false;
  int last_rotation_iter = 0;
  int steps_until_orth = 0;  // 0: orthogonalization step next
  bool converged = false;

  // Snapshot of the last orthonormalized accepted iterate; a failed line
  // search restarts from here instead of aborting the run.
  OrbitalSet recovery_w = w;
  StatePtr recovery_state = state;
  int failed_searches = 0;
  constexpr int kMaxConsecutiveFailures = 8;
  constexpr double kRawGrowthCap = 5.0;  // raw tau <= cap * last accepted tau
  double last_accepted_tau = 0.0;

  const bool grad_style_mode = p_.convergence_mode == ConvergenceMode::kGradNorm ||
                               p_.convergence_mode == ConvergenceMode::kMeanAbs;

  for (int l = 0; l < p_.max_inner && !converged; ++l) {
    const auto iter_t0 = Clock::now();
    const bool orth_iter = steps_until_orth == 0;

    Directions dir = compute_directions(w, hw, orth_iter && grad_style_mode);

    if (orth_iter && grad_style_mode) {
      if (check_convergence(p_, ConvergenceData{dir.grad_norm, dir.mean_abs, {}, n_org_})) {
        converged = true;
        break;
      }
    }
    if (dir.znorm2 == 0.0) {
      converged = true;  // exact stationary set
      break;
    }

    // BB step from the previous (iterate, direction) pair.
    double tau_raw;
    if (history_valid) {
      std::vector<double> ss(n), sy(n), yy(n);
      timer_.par([&] {
        ex_.for_each(n, [&](std::int64_t i) {
          const double* wv = w.orbitals[i].values.data();
          const double* wp = prev_w.orbitals[i].values.data();
          const double* zv = dir.z[i].values.data();
          const double* zp = prev_z[i].values.data();
          ss[i] = wq * pairwise_sum(ng, 0, [&](std::int64_t q) {
            const double s = wv[q] - wp[q];
            return s * s;
          });
          sy[i] = wq * pairwise_sum(ng, 0, [&](std::int64_t q) {
            return (wv[q] - wp[q]) * (zv[q] - zp[q]);
          });
          yy[i] = wq * pairwise_sum(ng, 0, [&](std::int64_t q) {
            const double y = zv[q] - zp[q];
            return y * y;
          });
        });
      });
      double tr_ss = 0.0, tr_yy = 0.0, sy_diag_abs = 0.0, sy_trace = 0.0;
      for (int i = 0; i < n; ++i) {
        tr_ss += ss[i];
        tr_yy += yy[i];
        sy_diag_abs += std::abs(sy[i]);
        sy_trace += sy[i];
      }
      const double tr_abs_sy = p_.bb_trace_abs == BbTraceAbs::kDiagAbs
                                   ? sy_diag_abs
                                   : std::abs(sy_trace);
      tau_raw = bb_tau_from_products(tr_ss, tr_abs_sy, tr_yy, p_, l);
    } else {
      tau_raw = clamp_tau(std::min(p_.tau_max, 1.0 / std::sqrt(dir.znorm2)), p_);
    }

    IterationRecord rec;
    rec.level = level_;
    rec.iter = l;
    rec.grad_norm = dir.grad_norm >= 0.0 ? dir.grad_norm
                                         : std::sqrt(std::max(0.0, dir.znorm2));

    if (!orth_iter) {
      // Raw per-orbital BB step: no orthogonalization, no energy, no
      // backtracking. Without the descent test an occasional outlier BB
      // value can launch the iterate, so bound the growth against the last
      // accepted step.
      double tau = tau_raw;
      if (last_accepted_tau > 0.0) {
        tau = std::min(tau, kRawGrowthCap * last_accepted_tau);
      }
      FieldSet w_next(n);
      timer_.par([&] {
        ex_.for_each(n, [&](std::int64_t i) {
          w_next[i] = linear_combination(w.orbitals[i], -tau, dir.z[i]);
        });
      });
      timer_.sync([&] {
        prev_w = std::move(w);
        prev_z = std::move(dir.z);
        w = OrbitalSet{std::move(w_next)};
      });
      history_valid = true;
      state = timer_.sync([&] { return make_state(w); });
      hw = timer_.par([&] { return apply_hamiltonian(*state, w, ex_); });
      --steps_until_orth;
      rec.tau = tau;
      rec.energy = orth_energies.back();
    } else {
      // Backtracked step with orthogonalization.
      bool accepted = false;
      int s = 0;
      double tau = 0.0;
      std::optional<OrthResult> orth;
      StatePtr trial_state;
      EnergyBreakdown trial_energy;
      std::vector<double> trial_energies;

      for (s = 0; s <= p_.max_backtracks; ++s) {
        tau = tau_raw * std::pow(p_.delta, s);
        if (s > 0 && tau < p_.tau_min) break;  // below the step floor
        FieldSet trial_fields(n);
        timer_.par([&] {
          ex_.for_each(n, [&](std::int64_t i) {
            trial_fields[i] = linear_combination(w.orbitals[i], -tau, dir.z[i]);
          });
        });
        bool degenerate = false;
        timer_.sync([&] {
          try {
            orth = orthonormalize_with_gram(OrbitalSet{std::move(trial_fields)},
                                           p_.verify_orthonormality);
          } catch (const DegenerateSetError&) {
            degenerate = true;
          }
        });
        if (degenerate) {
          trial_energies.push_back(std::numeric_limits<double>::quiet_NaN());
          continue;
        }
        trial_state = timer_.sync([&] { return make_state(orth->w); });
        trial_energy = total_energy(orth->w, *trial_state, ex_, &timer_);
        trial_energies.push_back(trial_energy.total);
        if (nonmonotone_accepts(trial_energy.total, nm.c, p_.rho1, tau, dir.znorm2)) {
          accepted = true;
          break;
        }
      }
      if (!accepted) {
        // Raw steps may have walked above the reference value C, making the
        // descent test unsatisfiable from here. Restart from the last
        // orthonormalized accepted iterate with fresh step data.
        if (++failed_searches > kMaxConsecutiveFailures) {
          char buf[160];
          std::snprintf(buf, sizeof buf,
                        "line search stagnated at level %d iteration %d "
                        "(%zu trials, C = %.17g)",
                        level_, l, trial_energies.size(), nm.c);
          out_.message = buf;
          return SolveOutcome::kStagnation;
        }
        timer_.sync([&] {
          w = recovery_w;
          state = recovery_state;
        });
        hw = timer_.par([&] { return apply_hamiltonian(*state, w, ex_); });
        history_valid = false;
        prev_w.orbitals.clear();
        prev_z.clear();
        steps_until_orth = 0;
        continue;
      }
      failed_searches = 0;

      const double c_before = nm.c;
      const double q_before = nm.q;
      nm.q = p_.eta * q_before + 1.0;
      nm.c = (p_.eta * q_before * c_before + trial_energy.total) / nm.q;
      out_.accepted_steps.push_back(AcceptedStep{level_, l, trial_energy.total,
                                                 c_before, nm.c, q_before, nm.q,
                                                 tau, dir.znorm2});
      if (trial_energy.total > nm.c + 1e-9 * (1.0 + std::abs(trial_energy.total))) {
        out_.message = "nonmonotone ledger violated (C < E after update)";
        return SolveOutcome::kNumericalFailure;
      }

      timer_.sync([&] {
        prev_w = std::move(w);
        prev_z = std::move(dir.z);
        w = std::move(orth->w);
        state = trial_state;
      });
      history_valid = true;
      last_accepted_tau = tau;
      hw = timer_.par([&] { return apply_hamiltonian(*state, w, ex_); });
      out_.energy = trial_energy;
      orth_energies.push_back(trial_energy.total);

      const NearIdentityDiagnostic ni = near_identity_from_gram(orth->pre_gram);
      out_.checkpoints.push_back(OrthCheckpoint{level_, l, ni.offdiag_max,
                                                ni.diag_deviation_max,
                                                orth->post_deviation});
      if (ni.offdiag_max > 0.5) out_.drift_iterations.push_back(l);

      rec.did_orth = true;
      rec.tau = tau;
      rec.backtracks = s;
      rec.offdiag_max = ni.offdiag_max;
      rec.energy = trial_energy.total;
      steps_until_orth = n_org_ - 1;

      // Subspace diagonalization: rotate at the first orthogonalization
      // step once at least n_diag iterations have elapsed since the last.
      if (p_.n_diag > 0 && (l + 1 - last_rotation_iter) >= p_.n_diag &&
          !full_gradient_directions_) {
        GramMatrix sigma = timer_.sync([&] { return gram(hw, w.orbitals); });
        SubspaceRotation rot = timer_.sync([&] { return subspace_rotate(w, sigma); });
        w = std::move(rot.w);
        hw = timer_.sync([&] { return mix(hw, rot.p); });
        last_rotation_iter = l + 1;
        rec.did_diag = true;
        history_valid = false;  // the per-orbital pairing changed basis
        prev_w.orbitals.clear();
        prev_z.clear();
      }

      timer_.sync([&] {
        recovery_w = w;
        recovery_state = state;
      });

      if (p_.convergence_mode == ConvergenceMode::kEnergyChange &&
          check_convergence(p_, ConvergenceData{-1.0, -1.0, orth_energies, n_org_})) {
        converged = true;
      }
    }

    rec.wall_ms = 1e3 * seconds_since(iter_t0);
    out_.records.push_back(rec);
  }

  return converged ? SolveOutcome::kConverged : SolveOutcome::kMaxIterations;
}

void finalize(SolveResult& out, OrbitalSet w, const Problem& prob,
              SolveOutcome outcome, PhaseTimer& timer, Clock::time_point t0) {
  timer.sync([&] {
    HamiltonianState state = build_hamiltonian(w, prob);
    FieldSet hw = apply_hamiltonian(state, w, Executor::serial());
    StiefelGradient g = stiefel_gradient(w, hw);
    double acc = 0.0;
    for (const Field& f : g.directions) acc += inner_product(f, f);
    out.final_grad_norm = std::sqrt(std::max(0.0, acc));
  });
  out.orbitals = std::move(w);
  out.outcome = outcome;
  out.iterations_total = static_cast<int>(out.records.size());
  out.par_seconds = timer.par_seconds();
  out.sync_seconds = timer.sync_seconds();
  out.wall_seconds = seconds_since(t0);
}

SolveResult run_single_level(const OrbitalSet& u0, const Problem& prob,
                             const OptimizerParams& params, Executor& ex) {
  params.validate();
  if (max_orthonormality_deviation(u0) > 1e-8) {
    throw InvalidArgument("solver: initial orbital set is not orthonormal");
  }
  const auto t0 = Clock::now();
  PhaseTimer timer;
  SolveResult out;
  OrbitalSet w = u0;
  InnerLoop loop(prob, params, ex, timer, 0, out);
  const SolveOutcome outcome = loop.run(w);
  finalize(out, std::move(w), prob, outcome, timer, t0);
  return out;
}

}  // namespace

SolveResult optm_qr_solve(const OrbitalSet& u0, const Problem& p,
                          const OptimizerParams& params, Executor& ex) {
  OptimizerParams q = params;
  q.algorithm = Algorithm::kOptmQr;
  return run_single_level(u0, p, q, ex);
}

SolveResult opt_par_inner(const OrbitalSet& u0, const Problem& p,
                          const OptimizerParams& params, Executor& ex) {
  OptimizerParams q = params;
  q.algorithm = Algorithm::kOptPar;
  return run_single_level(u0, p, q, ex);
}

SolveResult opt_par_mod_inner(const OrbitalSet& u0, const Problem& p,
                              const OptimizerParams& params, Executor& ex) {
  OptimizerParams q = params;
  q.algorithm = Algorithm::kOptParMod;
  return run_single_level(u0, p, q, ex);
}

SolveResult solve(const Problem& level0, const OptimizerParams& params, Executor& ex) {
  params.validate();
  const auto t0 = Clock::now();
  PhaseTimer timer;
  SolveResult out;
  Problem prob = level0;
  OrbitalSet w = timer.sync([&] {
    return initialize_orbitals(prob.grid, prob.atoms, prob.n_orbitals, params.seed);
  });

  SolveOutcome outcome = SolveOutcome::kMaxIterations;
  for (int level = 0; level < params.outer_levels; ++level) {
    if (level > 0) {
      timer.sync([&] {
        GridPtr fine = refine_uniform(*prob.grid);
        std::vector<Field> prolonged;
        prolonged.reserve(w.orbitals.size());
        for (const Field& f : w.orbitals) prolonged.push_back(prolongate(f, fine));
        w = orthonormalize(make_orbital_set(std::move(prolonged)));
        prob = on_grid(prob, fine);
      });
    }
    InnerLoop loop(prob, params, ex, timer, level, out);
    outcome = loop.run(w);
    if (outcome == SolveOutcome::kStagnation ||
        outcome == SolveOutcome::kNumericalFailure) {
      break;
    }
  }
  finalize(out, std::move(w), prob, outcome, timer, t0);
  return out;
}

}  // namespace parorb
