#pragma once

#include <Eigen/Dense>
#include <vector>

#include "parorb/energy.hpp"
#include "parorb/grid.hpp"
#include "parorb/manifold.hpp"

// Independent brute-force references used by the test suites. Nothing here
// shares machinery with the iterative solvers.
namespace parorb::oracle {

inline constexpr std::int64_t kDenseGuard = 4096;

// H at fixed potentials materialized in the point basis.
struct DenseOperator {
  GridPtr grid;
  Eigen::MatrixXd matrix;
};

DenseOperator materialize(const HamiltonianState& state);

struct EigenPairs {
  std::vector<double> eigenvalues;  // ascending
  FieldSet eigenvectors;            // L2-normalized fields
};

EigenPairs dense_eigensolve(const DenseOperator& op, int k);

// || H(rho_U) U - U Lambda ||_F with Lambda the diagonal Rayleigh quotients
// after subspace rotation at the (rotation-invariant) density of U.
double ks_residual(const OrbitalSet& u, const Problem& p);

// Relative disagreement between the central-difference directional
// derivative of E at U along D and the analytic value 2 tr<(H(rho_U)U)^T D>.
double fd_gradient_check(const OrbitalSet& u, const FieldSet& direction,
                         double t, const Problem& p);

}  // namespace parorb::oracle
