#include "parorb/oracle.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "parorb/errors.hpp"

namespace parorb::oracle {

DenseOperator materialize(const HamiltonianState& state) {
  const std::int64_t ng = state.grid->num_points();
  if (ng > kDenseGuard) {
    throw InvalidArgument("materialize: grid too large for the dense oracle");
  }
  const int n = static_cast<int>(ng);
  Eigen::MatrixXd m(n, n);
  Field unit = make_field(state.grid);
  for (int j = 0; j < n; ++j) {
    unit.values[j] = 1.0;
    Field col = apply_hamiltonian(state, unit);
    for (int i = 0; i < n; ++i) m(i, j) = col.values[i];
    unit.values[j] = 0.0;
  }
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12) {
    throw SolverError("materialize: operator matrix failed the symmetry check");
  }
  return DenseOperator{state.grid, std::move(m)};
}

EigenPairs dense_eigensolve(const DenseOperator& op, int k) {
  const int n = static_cast<int>(op.matrix.rows());
  if (k < 1 || k > n) throw InvalidArgument("dense_eigensolve: bad eigenpair count");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(op.matrix);
  if (es.info() != Eigen::Success) {
    throw SolverError("dense_eigensolve: eigendecomposition did not converge");
  }
  EigenPairs out;
  out.eigenvalues.resize(k);
  out.eigenvectors.reserve(k);
  const double scale = 1.0 / std::sqrt(op.grid->quadrature_weight());
  for (int j = 0; j < k; ++j) {
    out.eigenvalues[j] = es.eigenvalues()(j);
    Field v = make_field(op.grid);
    for (int i = 0; i < n; ++i) v.values[i] = es.eigenvectors()(i, j) * scale;
    out.eigenvectors.push_back(std::move(v));
  }
  return out;
}

double ks_residual(const OrbitalSet& u, const Problem& p) {
  HamiltonianState state = build_hamiltonian(u, p);
  FieldSet hu = apply_hamiltonian(state, u, Executor::serial());
  GramMatrix sigma = gram(hu, u.orbitals);
  SubspaceRotation rot = subspace_rotate(u, sigma);
  // rho, hence H, is invariant under the rotation.
  FieldSet hu_rot = mix(hu, rot.p);
  double acc = 0.0;
  for (int i = 0; i < u.n(); ++i) {
    const double lambda = inner_product(hu_rot[i], rot.w.orbitals[i]);
    Field r = linear_combination(hu_rot[i], -lambda, rot.w.orbitals[i]);
    acc += inner_product(r, r);
  }
  return std::sqrt(acc);
}

double fd_gradient_check(const OrbitalSet& u, const FieldSet& direction,
                         double t, const Problem& p) {
  if (direction.size() != u.orbitals.size()) {
    throw InvalidArgument("fd_gradient_check: direction count mismatch");
  }
  if (!(t >= 1e-7 && t <= 1e-3)) {
    throw InvalidArgument("fd_gradient_check: t must lie in [1e-7, 1e-3]");
  }

  auto displaced = [&](double step) {
    std::vector<Field> fields;
    fields.reserve(u.orbitals.size());
    for (std::size_t i = 0; i < u.orbitals.size(); ++i) {
      fields.push_back(linear_combination(u.orbitals[i], step, direction[i]));
    }
    return make_orbital_set(std::move(fields));
  };
  const double e_plus = total_energy(displaced(t), p).total;
  const double e_minus = total_energy(displaced(-t), p).total;
  const double numeric = (e_plus - e_minus) / (2.0 * t);

  HamiltonianState state = build_hamiltonian(u, p);
  double analytic = 0.0;
  for (std::size_t i = 0; i < u.orbitals.size(); ++i) {
    Field hu = apply_hamiltonian(state, u.orbitals[i]);
    analytic += 2.0 * inner_product(hu, direction[i]);
  }
  return std::abs(numeric - analytic) / std::max(1.0, std::abs(analytic));
}

}  // namespace parorb::oracle
