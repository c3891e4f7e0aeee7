#pragma once

// Desk-scale model problems shared by the optimizer tests and the
// acceptance suite.

#include "parorb/energy.hpp"
#include "parorb/grid.hpp"
#include "parorb/manifold.hpp"
#include "parorb/rng.hpp"

namespace parorb::testing {

inline GridPtr line_grid(double length, std::int64_t n) {
  const double ext[] = {length};
  const std::int64_t pts[] = {n};
  return build_grid(1, ext, pts);
}

// Single soft-Coulomb well, linear model (Hartree and exchange off).
inline Problem linear_well_1d(std::int64_t points = 400, int n_orbitals = 4) {
  GridPtr g = line_grid(20.0, points);
  Atom a;
  a.position = {10.0, 0.0, 0.0};
  a.charge = 4.0;
  a.softening = 1.0;
  return make_problem(g, {a}, n_orbitals, false, false);
}

// Two soft-Coulomb wells with kernel-mode Hartree and Dirac exchange.
inline Problem two_well_1d(std::int64_t points = 400, int n_orbitals = 4) {
  GridPtr g = line_grid(20.0, points);
  Atom a1, a2;
  a1.position = {8.0, 0.0, 0.0};
  a2.position = {12.0, 0.0, 0.0};
  a1.charge = a2.charge = 2.0;
  a1.softening = a2.softening = 1.0;
  return make_problem(g, {a1, a2}, n_orbitals, true, true, HartreeMode::kKernel);
}

// Four asymmetric soft wells in a 3D box, linear model. The asymmetry keeps
// the low spectrum non-degenerate, which the diagonal-residual directions
// need to behave.
inline Problem box_3d_linear(std::int64_t points_per_axis = 24, int n_orbitals = 16) {
  const double ext[] = {12.0, 12.0, 12.0};
  const std::int64_t pts[] = {points_per_axis, points_per_axis, points_per_axis};
  GridPtr g = build_grid(3, ext, pts);
  AtomList atoms(4);
  atoms[0].position = {4.6, 5.2, 6.4};
  atoms[1].position = {7.3, 6.8, 5.1};
  atoms[2].position = {5.9, 7.6, 7.2};
  atoms[3].position = {6.6, 4.4, 5.8};
  for (Atom& a : atoms) {
    a.charge = 4.0;
    a.softening = 1.0;
  }
  return make_problem(g, atoms, n_orbitals, false, false);
}

inline OrbitalSet random_orthonormal(const GridPtr& g, int n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Field> fields;
  for (int i = 0; i < n; ++i) {
    Field f = make_field(g);
    for (double& v : f.values) v = rng.normal();
    fields.push_back(std::move(f));
  }
  return orthonormalize(make_orbital_set(std::move(fields)));
}

}  // namespace parorb::testing
