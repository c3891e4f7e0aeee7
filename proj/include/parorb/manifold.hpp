#pragma once

#include <Eigen/Dense>
#include <vector>

#include "parorb/grid.hpp"
#include "parorb/parallel.hpp"

namespace parorb {

using FieldSet = std::vector<Field>;
using GramMatrix = Eigen::MatrixXd;

// The optimization variable: N discrete orbitals on one grid.
struct OrbitalSet {
  std::vector<Field> orbitals;

  int n() const { return static_cast<int>(orbitals.size()); }
  const Grid& grid() const { return *orbitals.front().grid; }
  const GridPtr& grid_ptr() const { return orbitals.front().grid; }
};

OrbitalSet make_orbital_set(std::vector<Field> fields);

// Inner product matrix: entry (i, j) = <psi_i, phi_j>.
GramMatrix gram(const FieldSet& psi, const FieldSet& phi);
GramMatrix gram(const OrbitalSet& a, const OrbitalSet& b);

// Column mixing: out_i = sum_k in_k * m(k, i).
FieldSet mix(const FieldSet& in, const Eigen::MatrixXd& m);
OrbitalSet mix(const OrbitalSet& in, const Eigen::MatrixXd& m);

// Cholesky-QR with a symmetric-eigendecomposition fallback. Rejects sets
// whose Gram matrix is numerically rank deficient. With measure_deviation
// off, the post-verification Gram is skipped whenever the Cholesky pivots
// certify a conditioning for which one pass provably stays within 1e-12;
// post_deviation is then reported as -1 (not measured).
struct OrthResult {
  OrbitalSet w;
  GramMatrix pre_gram;          // <W~^T W~> of the input, before orthonormalization
  double post_deviation = 0.0;  // max |<W^T W> - I| of the result, or -1
};
OrthResult orthonormalize_with_gram(const OrbitalSet& w, bool measure_deviation = true);
OrbitalSet orthonormalize(const OrbitalSet& w);
double max_orthonormality_deviation(const OrbitalSet& w);  // max |<W^T W> - I|

// Full-Sigma manifold gradient: directions_i = hu_i - sum_k u_k Sigma(k, i),
// Sigma = <(HU)^T U>. Requires orthonormal u for the tangency property.
struct StiefelGradient {
  FieldSet directions;
  GramMatrix sigma;
};
StiefelGradient stiefel_gradient(const OrbitalSet& u, const FieldSet& hu,
                                 Executor& ex = Executor::serial());

// Per-orbital residuals z_i = hu_i - sigma_ii u_i, sigma_ii = <hu_i, u_i>.
// Each column only reads its own pair, so columns compute independently.
struct DiagonalResiduals {
  FieldSet directions;
  std::vector<double> sigma_diag;
};
DiagonalResiduals diagonal_residuals(const OrbitalSet& u, const FieldSet& hu,
                                     Executor& ex = Executor::serial());

// Rotate W by the eigenvectors of Sigma: P^T Sigma P = diag(gamma), ascending,
// each eigenvector's first nonzero entry made positive for reproducibility.
struct SubspaceRotation {
  OrbitalSet w;
  Eigen::MatrixXd p;
  Eigen::VectorXd gamma;
};
SubspaceRotation subspace_rotate(const OrbitalSet& w, const GramMatrix& sigma);

// Deviation of <W~^T W~> from the identity, measured before orthogonalization.
struct NearIdentityDiagnostic {
  double offdiag_max = 0.0;
  double diag_deviation_max = 0.0;
};
NearIdentityDiagnostic near_identity_diagnostic(const OrbitalSet& w);
NearIdentityDiagnostic near_identity_from_gram(const GramMatrix& g);

}  // namespace parorb
