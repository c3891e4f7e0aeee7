#pragma once

#include <array>
#include <memory>
#include <vector>

#include "parorb/grid.hpp"
#include "parorb/manifold.hpp"
#include "parorb/parallel.hpp"

namespace parorb {

struct Atom {
  std::array<double, 3> position{};  // bohr, entries [0, dimension)
  double charge = 1.0;               // Z > 0
  double softening = 1.0;            // a > 0, bohr
};
using AtomList = std::vector<Atom>;

enum class HartreeMode { kKernel, kPoisson };

// A model instance bound to one grid. The external potential is
// grid-dependent, so it is built once here and cached.
struct Problem {
  GridPtr grid;
  AtomList atoms;
  int n_orbitals = 1;
  bool hartree_enabled = false;
  bool xc_enabled = false;
  HartreeMode hartree_mode = HartreeMode::kKernel;
  Field v_ext;
};

Problem make_problem(GridPtr grid, AtomList atoms, int n_orbitals,
                     bool hartree_enabled, bool xc_enabled,
                     HartreeMode hartree_mode = HartreeMode::kKernel);
Problem on_grid(const Problem& p, GridPtr grid);

// Cached fields defining the operator H(rho) = -1/2 lap + V_ext + v_H + v_xc.
// Disabled terms are zero fields.
struct HamiltonianState {
  GridPtr grid;
  Field density;
  Field v_ext;
  Field v_hartree;
  Field v_xc;
  Field v_local;  // v_ext + v_hartree + v_xc
  bool hartree_enabled = false;
  bool xc_enabled = false;
};

struct EnergyBreakdown {
  double kinetic = 0.0;
  double external = 0.0;
  double hartree = 0.0;
  double xc = 0.0;
  double total = 0.0;
};

// rho(r) = sum_i |u_i(r)|^2
Field density(const OrbitalSet& u);

// Softened Coulomb: V_ext(r) = -sum_I Z_I / sqrt(|r - R_I|^2 + a_I^2).
Field external_potential(const AtomList& atoms, const GridPtr& grid);

// mode kernel (d = 1, 2): direct quadrature with K = 1/sqrt(|r-r'|^2 + 1);
// mode poisson (d = 3): CG solve of -lap v = 4 pi rho to relative residual 1e-10.
Field hartree_potential(const Field& rho, HartreeMode mode);

// Dirac exchange: eps_x = -C_x rho^{1/3}, v_x = (4/3) eps_x,
// C_x = (3/4)(3/pi)^{1/3}.
Field xc_energy_density(const Field& rho);
Field xc_potential(const Field& rho);

HamiltonianState build_hamiltonian(const OrbitalSet& u, const Problem& p);

Field apply_hamiltonian(const HamiltonianState& s, const Field& u);
FieldSet apply_hamiltonian(const HamiltonianState& s, const OrbitalSet& u,
                           Executor& ex);

// Per-orbital energy pieces.
double kinetic_term(const Field& u);                    // -1/2 <lap u, u>
double potential_term(const Field& v, const Field& u);  // <v u, u>

// E = sum_i [-1/2 <lap u_i, u_i> + <V_ext u_i, u_i>] + 1/2 <v_H, rho>
//     + <eps_xc(rho), rho>. The per-orbital terms may run in parallel; the
// cross-orbital pieces are combined in fixed order. A PhaseTimer, when given,
// charges the per-orbital loop to the parallel bucket.
EnergyBreakdown total_energy(const OrbitalSet& u, const HamiltonianState& s,
                             Executor& ex = Executor::serial(),
                             PhaseTimer* timer = nullptr);
EnergyBreakdown total_energy(const OrbitalSet& u, const Problem& p,
                             Executor& ex = Executor::serial());

}  // namespace parorb
