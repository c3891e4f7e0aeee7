#include "parorb/manifold.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>

#include "parorb/errors.hpp"

namespace parorb {

namespace {

constexpr double kRankTolerance = 1e-12;     // smallest/largest Gram eigenvalue
constexpr double kSigmaSymmetryTol = 1e-8;   // max |Sigma - Sigma^T| accepted

void check_set(const FieldSet& fields, const char* op) {
  if (fields.empty()) throw InvalidArgument(std::string(op) + ": empty orbital set");
  for (const Field& f : fields) {
    if (!same_grid(f, fields.front())) {
      throw InvalidArgument(std::string(op) + ": orbitals live on different grids");
    }
  }
}

void check_pair(const FieldSet& a, const FieldSet& b, const char* op) {
  check_set(a, op);
  check_set(b, op);
  if (a.size() != b.size() || !same_grid(a.front(), b.front())) {
    throw InvalidArgument(std::string(op) + ": orbital sets do not match");
  }
}

}  // namespace

OrbitalSet make_orbital_set(std::vector<Field> fields) {
  check_set(fields, "make_orbital_set");
  return OrbitalSet{std::move(fields)};
}

GramMatrix gram(const FieldSet& psi, const FieldSet& phi) {
  check_pair(psi, phi, "gram");
  const int n = static_cast<int>(psi.size());
  GramMatrix g(n, n);
  if (&psi == &phi) {
    // <f, g> = <g, f> holds bitwise, so fill the upper triangle only.
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) {
        g(i, j) = inner_product(psi[i], phi[j]);
        g(j, i) = g(i, j);
      }
    }
    return g;
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      g(i, j) = inner_product(psi[i], phi[j]);
    }
  }
  return g;
}

GramMatrix gram(const OrbitalSet& a, const OrbitalSet& b) {
  return gram(a.orbitals, b.orbitals);
}

FieldSet mix(const FieldSet& in, const Eigen::MatrixXd& m) {
  check_set(in, "mix");
  const int n = static_cast<int>(in.size());
  if (m.rows() != n || m.cols() != n) throw InvalidArgument("mix: matrix shape mismatch");
  FieldSet out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    Field f = make_field(in.front().grid);
    for (int k = 0; k < n; ++k) {
      const double c = m(k, i);
      if (c == 0.0) continue;
      const double* src = in[k].values.data();
      double* dst = f.values.data();
      for (std::size_t p = 0; p < f.values.size(); ++p) dst[p] += c * src[p];
    }
    out.push_back(std::move(f));
  }
  return out;
}

OrbitalSet mix(const OrbitalSet& in, const Eigen::MatrixXd& m) {
  return OrbitalSet{mix(in.orbitals, m)};
}

namespace {

// One Cholesky-QR pass: out = in * L^{-T} where G = L L^T. Fails when the
// factorization breaks down or its pivots signal severe ill-conditioning.
// On success, cond_estimate receives (pmax/pmin)^2, a cheap proxy for the
// condition number of G.
bool cholesky_pass(const OrbitalSet& in, const GramMatrix& g, OrbitalSet& out,
                   double* cond_estimate = nullptr) {
  Eigen::LLT<Eigen::MatrixXd> llt(g);
  if (llt.info() != Eigen::Success) return false;
  const int n = in.n();
  const Eigen::VectorXd pivots = llt.matrixLLT().diagonal();
  const double pmin = pivots.minCoeff();
  const double pmax = pivots.maxCoeff();
  if (!(pmin > 0.0) || !std::isfinite(pmax) || pmin * pmin < 1e-10 * pmax * pmax) {
    return false;
  }
  if (cond_estimate) *cond_estimate = (pmax / pmin) * (pmax / pmin);
  Eigen::MatrixXd l_inv_t = llt.matrixL()
                                .solve(Eigen::MatrixXd::Identity(n, n))
                                .transpose();
  out = mix(in, l_inv_t);
  return true;
}

// Symmetric-eigendecomposition orthonormalization with an explicit rank
// check: W <- W Q lam^{-1/2} Q^T.
OrbitalSet symmetric_fallback(const OrbitalSet& w_in, const GramMatrix& g0) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (g0 + g0.transpose()));
  if (es.info() != Eigen::Success) {
    throw DegenerateSetError("orthonormalize: Gram eigendecomposition failed");
  }
  const Eigen::VectorXd& lam = es.eigenvalues();
  const double lam_max = lam(lam.size() - 1);
  if (!(lam_max > 0.0) || !std::isfinite(lam_max) || lam(0) < kRankTolerance * lam_max) {
    throw DegenerateSetError("orthonormalize: orbital set is numerically rank deficient");
  }
  Eigen::VectorXd inv_sqrt = lam.cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd g_inv_sqrt =
      es.eigenvectors() * inv_sqrt.asDiagonal() * es.eigenvectors().transpose();
  return mix(w_in, g_inv_sqrt);
}

}  // namespace

OrthResult orthonormalize_with_gram(const OrbitalSet& w_in, bool measure_deviation) {
  check_set(w_in.orbitals, "orthonormalize");
  GramMatrix g0 = gram(w_in, w_in);
  OrbitalSet w;

  double cond = std::numeric_limits<double>::infinity();
  if (!cholesky_pass(w_in, g0, w, &cond)) {
    w = symmetric_fallback(w_in, g0);
    cond = std::numeric_limits<double>::infinity();
  }

  // For cond(G) <= 100 a single pass keeps max |<W^T W> - I| well below
  // 1e-12, so the verification Gram carries no information and may be
  // skipped when the caller does not want the measurement.
  if (!measure_deviation && cond <= 1e2) {
    return OrthResult{std::move(w), std::move(g0), -1.0};
  }

  // A second pass repairs any orthogonality loss from an ill-conditioned
  // first factorization (CholeskyQR2).
  const int n = w.n();
  GramMatrix g2 = gram(w.orbitals, w.orbitals);
  double dev = (g2 - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff();
  if (!(dev <= 1e-12)) {
    OrbitalSet repaired;
    if (!cholesky_pass(w, g2, repaired)) {
      throw DegenerateSetError("orthonormalize: orbital set is numerically rank deficient");
    }
    w = std::move(repaired);
    GramMatrix g3 = gram(w.orbitals, w.orbitals);
    dev = (g3 - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff();
  }
  return OrthResult{std::move(w), std::move(g0), dev};
}

OrbitalSet orthonormalize(const OrbitalSet& w) {
  return orthonormalize_with_gram(w).w;
}

double max_orthonormality_deviation(const OrbitalSet& w) {
  GramMatrix g = gram(w, w);
  const int n = w.n();
  return (g - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff();
}

StiefelGradient stiefel_gradient(const OrbitalSet& u, const FieldSet& hu, Executor& ex) {
  check_pair(u.orbitals, hu, "stiefel_gradient");
  GramMatrix sigma = gram(hu, u.orbitals);
  const double asym = (sigma - sigma.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10) {
    throw InvalidArgument(
        "stiefel_gradient: <(HU)^T U> is not symmetric; inconsistent H or U");
  }
  const int n = u.n();
  FieldSet dirs(n);
  ex.for_each(n, [&](std::int64_t i) {
    Field d = hu[i];
    for (int k = 0; k < n; ++k) {
      const double c = sigma(k, static_cast<int>(i));
      const double* src = u.orbitals[k].values.data();
      double* dst = d.values.data();
      for (std::size_t p = 0; p < d.values.size(); ++p) dst[p] -= c * src[p];
    }
    dirs[i] = std::move(d);
  });
  return StiefelGradient{std::move(dirs), std::move(sigma)};
}

DiagonalResiduals diagonal_residuals(const OrbitalSet& u, const FieldSet& hu, Executor& ex) {
  check_pair(u.orbitals, hu, "diagonal_residuals");
  const int n = u.n();
  DiagonalResiduals out;
  out.directions.resize(n);
  out.sigma_diag.resize(n);
  ex.for_each(n, [&](std::int64_t i) {
    const double s = inner_product(hu[i], u.orbitals[i]);
    out.sigma_diag[i] = s;
    out.directions[i] = linear_combination(hu[i], -s, u.orbitals[i]);
  });
  return out;
}

SubspaceRotation subspace_rotate(const OrbitalSet& w, const GramMatrix& sigma) {
  check_set(w.orbitals, "subspace_rotate");
  const int n = w.n();
  if (sigma.rows() != n || sigma.cols() != n) {
    throw InvalidArgument("subspace_rotate: Sigma shape mismatch");
  }
  const double asym = (sigma - sigma.transpose()).cwiseAbs().maxCoeff();
  if (asym > kSigmaSymmetryTol) {
    throw InvalidArgument("subspace_rotate: Sigma asymmetry exceeds tolerance");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (sigma + sigma.transpose()));
  if (es.info() != Eigen::Success) {
    throw InvalidArgument("subspace_rotate: eigendecomposition failed");
  }
  Eigen::MatrixXd p = es.eigenvectors();  // ascending eigenvalues
  for (int j = 0; j < n; ++j) {
    const double scale = p.col(j).cwiseAbs().maxCoeff();
    for (int i = 0; i < n; ++i) {
      if (std::abs(p(i, j)) > 1e-12 * scale) {
        if (p(i, j) < 0.0) p.col(j) = -p.col(j);
        break;
      }
    }
  }
  SubspaceRotation rot;
  rot.w = mix(w, p);
  rot.p = std::move(p);
  rot.gamma = es.eigenvalues();
  return rot;
}

NearIdentityDiagnostic near_identity_from_gram(const GramMatrix& g) {
  NearIdentityDiagnostic d;
  for (int i = 0; i < g.rows(); ++i) {
    for (int j = 0; j < g.cols(); ++j) {
      const double v = std::abs(i == j ? g(i, j) - 1.0 : g(i, j));
      double& slot = i == j ? d.diag_deviation_max : d.offdiag_max;
      if (v > slot) slot = v;
    }
  }
  return d;
}

NearIdentityDiagnostic near_identity_diagnostic(const OrbitalSet& w) {
  return near_identity_from_gram(gram(w, w));
}

}  // namespace parorb
