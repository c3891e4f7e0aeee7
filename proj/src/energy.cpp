#include "parorb/energy.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "parorb/errors.hpp"
#include "parorb/numeric.hpp"

namespace parorb {

namespace {

constexpr double kPoissonRelTol = 1e-10;
constexpr int kPoissonMaxIters = 20000;
constexpr int kPoissonMaxRestarts = 3;

const double kDiracCx = 0.75 * std::cbrt(3.0 / std::numbers::pi);

void check_atoms_inside(const AtomList& atoms, const Grid& g, const char* op) {
  for (const Atom& atom : atoms) {
    if (!(atom.charge > 0.0)) throw InvalidArgument(std::string(op) + ": atom charge must be positive");
    if (!(atom.softening > 0.0)) throw InvalidArgument(std::string(op) + ": atom softening must be positive");
    for (int a = 0; a < g.dimension(); ++a) {
      if (!(atom.position[a] >= 0.0) || !(atom.position[a] <= g.extent(a))) {
        throw InvalidArgument(std::string(op) + ": atom position outside the grid box");
      }
    }
  }
}

}  // namespace

Problem make_problem(GridPtr grid, AtomList atoms, int n_orbitals,
                     bool hartree_enabled, bool xc_enabled, HartreeMode hartree_mode) {
  if (!grid) throw InvalidArgument("make_problem: null grid");
  if (n_orbitals < 1) throw InvalidArgument("make_problem: n_orbitals must be >= 1");
  if (n_orbitals > grid->num_points()) {
    throw InvalidArgument("make_problem: more orbitals than grid points");
  }
  if (hartree_enabled) {
    const int d = grid->dimension();
    if (hartree_mode == HartreeMode::kKernel && d == 3) {
      throw InvalidArgument("make_problem: kernel Hartree mode supports 1D/2D only");
    }
    if (hartree_mode == HartreeMode::kPoisson && d != 3) {
      throw InvalidArgument("make_problem: poisson Hartree mode requires 3D");
    }
  }
  check_atoms_inside(atoms, *grid, "make_problem");
  Problem p;
  p.v_ext = external_potential(atoms, grid);
  p.grid = std::move(grid);
  p.atoms = std::move(atoms);
  p.n_orbitals = n_orbitals;
  p.hartree_enabled = hartree_enabled;
  p.xc_enabled = xc_enabled;
  p.hartree_mode = hartree_mode;
  return p;
}

Problem on_grid(const Problem& p, GridPtr grid) {
  return make_problem(std::move(grid), p.atoms, p.n_orbitals, p.hartree_enabled,
                      p.xc_enabled, p.hartree_mode);
}

Field density(const OrbitalSet& u) {
  Field rho = make_field(u.grid_ptr());
  for (const Field& orb : u.orbitals) {
    if (!same_grid(orb, rho)) throw InvalidArgument("density: mixed grids");
    const double* src = orb.values.data();
    double* dst = rho.values.data();
    for (std::size_t p = 0; p < rho.values.size(); ++p) dst[p] += src[p] * src[p];
  }
  return rho;
}

Field external_potential(const AtomList& atoms, const GridPtr& grid) {
  check_atoms_inside(atoms, *grid, "external_potential");
  Field v = make_field(grid);
  if (atoms.empty()) return v;
  const Grid& g = *grid;
  const int d = g.dimension();
  double xyz[3];
  for (std::int64_t p = 0; p < g.num_points(); ++p) {
    grid_coordinates(g, p, xyz);
    double acc = 0.0;
    for (const Atom& atom : atoms) {
      double r2 = atom.softening * atom.softening;
      for (int a = 0; a < d; ++a) {
        const double dx = xyz[a] - atom.position[a];
        r2 += dx * dx;
      }
      acc -= atom.charge / std::sqrt(r2);
    }
    v.values[static_cast<std::size_t>(p)] = acc;
  }
  return v;
}

namespace {

// -lap v = b with zero-Dirichlet boundary, by plain CG. The true residual is
// re-checked on exit; a few restarts absorb drift of the recursive residual.
Field poisson_solve(const Field& b) {
  const GridPtr& grid = b.grid;
  Field x = make_field(grid);
  const double b_norm = std::sqrt(stable_dot(b.values, b.values));
  if (b_norm == 0.0) return x;

  auto apply_a = [&](const Field& f) {
    Field lap = apply_laplacian(f);
    for (double& v : lap.values) v = -v;
    return lap;
  };

  Field r = b;
  for (int restart = 0; restart <= kPoissonMaxRestarts; ++restart) {
    Field p = r;
    double rr = stable_dot(r.values, r.values);
    for (int it = 0; it < kPoissonMaxIters; ++it) {
      if (std::sqrt(rr) <= kPoissonRelTol * b_norm) break;
      Field ap = apply_a(p);
      const double pap = stable_dot(p.values, ap.values);
      if (!(pap > 0.0)) throw SolverError("poisson: CG broke down (operator not SPD?)");
      const double alpha = rr / pap;
      axpy(alpha, p, x);
      axpy(-alpha, ap, r);
      const double rr_new = stable_dot(r.values, r.values);
      const double beta = rr_new / rr;
      rr = rr_new;
      for (std::size_t i = 0; i < p.values.size(); ++i) {
        p.values[i] = r.values[i] + beta * p.values[i];
      }
    }
    // True residual check.
    Field ax = apply_a(x);
    r = b;
    axpy(-1.0, ax, r);
    if (std::sqrt(stable_dot(r.values, r.values)) <= kPoissonRelTol * b_norm) return x;
  }
  throw SolverError("poisson: CG did not reach the requested residual");
}

// Softened-interaction table indexed by per-axis offset magnitudes.
Field kernel_hartree(const Field& rho) {
  const Grid& g = *rho.grid;
  const double w = g.quadrature_weight();
  Field v = make_field(rho.grid);
  if (g.dimension() == 1) {
    const std::int64_t n = g.points(0);
    const double h = g.spacing(0);
    std::vector<double> kernel(static_cast<std::size_t>(n));
    for (std::int64_t k = 0; k < n; ++k) {
      const double r = static_cast<double>(k) * h;
      kernel[static_cast<std::size_t>(k)] = 1.0 / std::sqrt(r * r + 1.0);
    }
    for (std::int64_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (std::int64_t j = 0; j < n; ++j) {
        acc += rho.values[static_cast<std::size_t>(j)] *
               kernel[static_cast<std::size_t>(std::llabs(i - j))];
      }
      v.values[static_cast<std::size_t>(i)] = w * acc;
    }
    return v;
  }
  // d == 2
  const std::int64_t n0 = g.points(0), n1 = g.points(1);
  const double h0 = g.spacing(0), h1 = g.spacing(1);
  std::vector<double> kernel(static_cast<std::size_t>(n0 * n1));
  for (std::int64_t a = 0; a < n0; ++a) {
    for (std::int64_t b = 0; b < n1; ++b) {
      const double dx = static_cast<double>(a) * h0;
      const double dy = static_cast<double>(b) * h1;
      kernel[static_cast<std::size_t>(a * n1 + b)] = 1.0 / std::sqrt(dx * dx + dy * dy + 1.0);
    }
  }
  for (std::int64_t i0 = 0; i0 < n0; ++i0) {
    for (std::int64_t i1 = 0; i1 < n1; ++i1) {
      double acc = 0.0;
      for (std::int64_t j0 = 0; j0 < n0; ++j0) {
        const double* krow = kernel.data() + std::llabs(i0 - j0) * n1;
        const double* rrow = rho.values.data() + j0 * n1;
        for (std::int64_t j1 = 0; j1 < n1; ++j1) {
          acc += rrow[j1] * krow[std::llabs(i1 - j1)];
        }
      }
      v.values[static_cast<std::size_t>(i0 * n1 + i1)] = w * acc;
    }
  }
  return v;
}

}  // namespace

Field hartree_potential(const Field& rho, HartreeMode mode) {
  for (double r : rho.values) {
    if (r < 0.0) throw InvalidArgument("hartree_potential: negative density");
  }
  const int d = rho.grid->dimension();
  if (mode == HartreeMode::kKernel) {
    if (d == 3) throw InvalidArgument("hartree_potential: kernel mode supports 1D/2D only");
    return kernel_hartree(rho);
  }
  if (d != 3) throw InvalidArgument("hartree_potential: poisson mode requires 3D");
  Field b = rho;
  for (double& v : b.values) v *= 4.0 * std::numbers::pi;
  return poisson_solve(b);
}

Field xc_energy_density(const Field& rho) {
  Field eps = make_field(rho.grid);
  for (std::size_t i = 0; i < rho.values.size(); ++i) {
    const double r = rho.values[i];
    if (r < 0.0) throw InvalidArgument("xc_energy_density: negative density");
    eps.values[i] = -kDiracCx * std::cbrt(r);
  }
  return eps;
}

Field xc_potential(const Field& rho) {
  Field v = xc_energy_density(rho);
  for (double& x : v.values) x *= 4.0 / 3.0;
  return v;
}

HamiltonianState build_hamiltonian(const OrbitalSet& u, const Problem& p) {
  if (!(*u.grid_ptr() == *p.grid)) {
    throw InvalidArgument("build_hamiltonian: orbitals not on the problem grid");
  }
  HamiltonianState s;
  s.grid = p.grid;
  s.density = density(u);
  s.v_ext = p.v_ext;
  s.hartree_enabled = p.hartree_enabled;
  s.xc_enabled = p.xc_enabled;
  s.v_hartree = p.hartree_enabled ? hartree_potential(s.density, p.hartree_mode)
                                  : make_field(p.grid);
  s.v_xc = p.xc_enabled ? xc_potential(s.density) : make_field(p.grid);
  s.v_local = s.v_ext;
  for (std::size_t i = 0; i < s.v_local.values.size(); ++i) {
    s.v_local.values[i] += s.v_hartree.values[i] + s.v_xc.values[i];
  }
  return s;
}

Field apply_hamiltonian(const HamiltonianState& s, const Field& u) {
  if (!same_grid(u, s.v_local)) throw InvalidArgument("apply_hamiltonian: grid mismatch");
  Field hu = apply_laplacian(u);
  const double* v = s.v_local.values.data();
  const double* uu = u.values.data();
  for (std::size_t i = 0; i < hu.values.size(); ++i) {
    hu.values[i] = -0.5 * hu.values[i] + v[i] * uu[i];
  }
  return hu;
}

FieldSet apply_hamiltonian(const HamiltonianState& s, const OrbitalSet& u, Executor& ex) {
  FieldSet hu(u.orbitals.size());
  ex.for_each(u.n(), [&](std::int64_t i) {
    hu[i] = apply_hamiltonian(s, u.orbitals[i]);
  });
  return hu;
}

double kinetic_term(const Field& u) {
  Field lap = apply_laplacian(u);
  return -0.5 * inner_product(lap, u);
}

double potential_term(const Field& v, const Field& u) {
  if (!same_grid(v, u)) throw InvalidArgument("potential_term: grid mismatch");
  const double* vv = v.values.data();
  const double* uu = u.values.data();
  const double s = pairwise_sum(
      static_cast<std::int64_t>(u.values.size()), 0,
      [&](std::int64_t i) { return vv[i] * uu[i] * uu[i]; });
  return u.grid->quadrature_weight() * s;
}

EnergyBreakdown total_energy(const OrbitalSet& u, const HamiltonianState& s,
                             Executor& ex, PhaseTimer* timer) {
  const int n = u.n();
  std::vector<double> kin(n), ext(n);
  auto per_orbital = [&] {
    ex.for_each(n, [&](std::int64_t i) {
      kin[i] = kinetic_term(u.orbitals[i]);
      ext[i] = potential_term(s.v_ext, u.orbitals[i]);
    });
  };
  if (timer) {
    timer->par(per_orbital);
  } else {
    per_orbital();
  }

  // The density-coupled terms read the state's cached fields, so the state
  // must have been built from these orbitals.
  auto combine = [&] {
    EnergyBreakdown e;
    for (int i = 0; i < n; ++i) e.kinetic += kin[i];
    for (int i = 0; i < n; ++i) e.external += ext[i];
    if (s.hartree_enabled) {
      e.hartree = 0.5 * inner_product(s.v_hartree, s.density);
    }
    if (s.xc_enabled) {
      e.xc = inner_product(xc_energy_density(s.density), s.density);
    }
    e.total = e.kinetic + e.external + e.hartree + e.xc;
    return e;
  };
  return timer ? timer->sync(combine) : combine();
}

EnergyBreakdown total_energy(const OrbitalSet& u, const Problem& p, Executor& ex) {
  HamiltonianState s = build_hamiltonian(u, p);
  return total_energy(u, s, ex);
}

}  // namespace parorb
