#include "nlqn/linalg.hpp"

#include <cmath>
#include <stdexcept>

namespace nlqn::linalg {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

MatrixXd symmetrized(const MatrixXd& m) { return 0.5 * (m + m.transpose()); }

SymEig sym_eig(const MatrixXd& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("sym_eig: matrix must be square");
  if (!m.allFinite()) throw std::invalid_argument("sym_eig: non-finite input");
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("sym_eig: eigensolver failed to converge");
  return {es.eigenvalues(), es.eigenvectors()};
}

bool is_positive_definite(const VectorXd& ascending_eigenvalues) {
  const Index n = ascending_eigenvalues.size();
  if (n == 0) throw std::invalid_argument("is_positive_definite: empty spectrum");
  const double top = std::abs(ascending_eigenvalues(n - 1));
  return ascending_eigenvalues(0) > 1e-10 * std::max(1.0, top);
}

namespace {

void validate_lyapunov_inputs(const MatrixXd& p, const MatrixXd& q) {
  if (p.rows() != p.cols()) throw std::invalid_argument("lyapunov_lsq_solve: p must be square");
  if (q.rows() != p.rows() || q.cols() != p.cols())
    throw std::invalid_argument("lyapunov_lsq_solve: q must match p in size");
  if (!p.allFinite() || !q.allFinite())
    throw std::invalid_argument("lyapunov_lsq_solve: non-finite input");
}

double lyapunov_residual(const MatrixXd& x, const MatrixXd& p, const MatrixXd& q) {
  return (x * p + p.transpose() * x - q).norm();
}

// Exact symmetry by construction: both triangles are assigned from one value.
MatrixXd exactly_symmetric(const MatrixXd& m) {
  MatrixXd out(m.rows(), m.cols());
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i <= j; ++i) {
      const double v = 0.5 * (m(i, j) + m(j, i));
      out(i, j) = v;
      out(j, i) = v;
    }
  return out;
}

}  // namespace

namespace detail {

// For symmetric p = U diag(d) U^T the map X -> Xp + pX acts diagonally on the
// congruence-transformed entries: (U^T X U)_{ij} is scaled by d_i + d_j. The
// minimal-norm least-squares solution divides by nonzero pair sums and zeroes
// the rest, all in O(n^3).
LyapunovSolution lyapunov_spectral(const MatrixXd& p, const MatrixXd& q) {
  validate_lyapunov_inputs(p, q);
  const MatrixXd qs = symmetrized(q);
  const SymEig eig = sym_eig(p);
  const VectorXd& d = eig.eigenvalues;
  const MatrixXd& u = eig.eigenvectors;
  const Index n = p.rows();

  const double dmax = std::max(std::abs(d(0)), std::abs(d(n - 1)));
  const double tol = 1e-12 * 2.0 * dmax;

  MatrixXd qt = u.transpose() * qs * u;
  MatrixXd xt(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i) {
      const double den = d(i) + d(j);
      xt(i, j) = std::abs(den) > tol ? qt(i, j) / den : 0.0;
    }

  MatrixXd x = exactly_symmetric(u * xt * u.transpose());
  return {x, lyapunov_residual(x, p, qs)};
}

// Vectorized normal-equations route: unknowns are the coordinates of X in an
// orthonormal basis of the symmetric subspace (so the Euclidean norm of the
// coordinate vector equals ||X||_F), solved by SVD pseudoinverse.
LyapunovSolution lyapunov_pseudoinverse(const MatrixXd& p, const MatrixXd& q) {
  validate_lyapunov_inputs(p, q);
  const MatrixXd qs = symmetrized(q);
  const Index n = p.rows();
  const Index unknowns = n * (n + 1) / 2;
  const double w = 1.0 / std::sqrt(2.0);

  MatrixXd m(n * n, unknowns);
  MatrixXd t(n, n);
  Index col = 0;
  for (Index i = 0; i < n; ++i)
    for (Index j = i; j < n; ++j, ++col) {
      t.setZero();
      if (i == j) {
        t.row(i) += p.row(i);
        t.col(i) += p.row(i).transpose();
      } else {
        t.row(i) += w * p.row(j);
        t.row(j) += w * p.row(i);
        t.col(i) += w * p.row(j).transpose();
        t.col(j) += w * p.row(i).transpose();
      }
      m.col(col) = Eigen::Map<const VectorXd>(t.data(), n * n);
    }

  const Eigen::Map<const VectorXd> rhs(qs.data(), n * n);
  Eigen::BDCSVD<MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(1e-12);
  const VectorXd c = svd.solve(rhs);

  MatrixXd x(n, n);
  col = 0;
  for (Index i = 0; i < n; ++i)
    for (Index j = i; j < n; ++j, ++col) {
      const double v = (i == j) ? c(col) : w * c(col);
      x(i, j) = v;
      x(j, i) = v;
    }
  return {x, lyapunov_residual(x, p, qs)};
}

}  // namespace detail

LyapunovSolution lyapunov_lsq_solve(const MatrixXd& p, const MatrixXd& q) {
  validate_lyapunov_inputs(p, q);
  const bool bitwise_symmetric = (p.array() == p.transpose().array()).all();
  return bitwise_symmetric ? detail::lyapunov_spectral(p, q)
                           : detail::lyapunov_pseudoinverse(p, q);
}

namespace {

VectorXd lexicographically_smaller(const VectorXd& a, const VectorXd& b) {
  for (Index i = 0; i < a.size(); ++i) {
    if (a(i) < b(i)) return a;
    if (b(i) < a(i)) return b;
  }
  return a;
}

}  // namespace

VectorXd trust_region_min(const MatrixXd& a_in, const VectorXd& b, double radius) {
  if (a_in.rows() != a_in.cols() || a_in.rows() != b.size())
    throw std::invalid_argument("trust_region_min: dimension mismatch");
  if (!(radius > 0.0)) throw std::invalid_argument("trust_region_min: radius must be positive");
  if (!a_in.allFinite() || !b.allFinite())
    throw std::invalid_argument("trust_region_min: non-finite input");

  const Index n = b.size();
  const MatrixXd a = symmetrized(a_in);
  const SymEig eig = sym_eig(a);
  const VectorXd& lam = eig.eigenvalues;
  const MatrixXd& basis = eig.eigenvectors;
  const VectorXd beta = basis.transpose() * b;

  const double lam_abs = std::max(std::abs(lam(0)), std::abs(lam(n - 1)));
  const double tol_eig = 1e-12 * std::max(1.0, lam_abs);
  const double tol_b = 1e-10 * std::max(1.0, b.norm());

  // Stationarity coefficients in the eigenbasis at multiplier lambda;
  // near-singular denominators are truncated (pseudoinverse behavior).
  const auto coeffs_at = [&](double lambda) {
    VectorXd c(n);
    for (Index i = 0; i < n; ++i) {
      const double den = 2.0 * (lam(i) + lambda);
      c(i) = std::abs(den) > 2.0 * tol_eig ? -beta(i) / den : 0.0;
    }
    return c;
  };

  if (lam(0) > tol_eig) {
    const VectorXd c = coeffs_at(0.0);
    if (c.norm() <= radius) return basis * c;  // interior, lambda = 0
  }

  const double lam_hat = std::max(0.0, -lam(0));

  double beta_null = 0.0;
  for (Index i = 0; i < n; ++i)
    if (std::abs(lam(i) + lam_hat) <= 2.0 * tol_eig) beta_null = std::hypot(beta_null, beta(i));

  const VectorXd c_hat = coeffs_at(lam_hat);
  const double norm_hat = c_hat.norm();

  if (beta_null <= tol_b && norm_hat <= radius * (1.0 + 1e-12)) {
    const VectorXd x = basis * c_hat;
    if (lam_hat <= tol_eig) return x;  // positive semidefinite, interior point
    // Hard case: complementary slackness forces the boundary; extend along a
    // bottom eigenvector and break the sign tie deterministically.
    const double tau = std::sqrt(std::max(0.0, radius * radius - norm_hat * norm_hat));
    const VectorXd u = basis.col(0);
    return lexicographically_smaller(x + tau * u, x - tau * u);
  }

  // Secular root: ||x(lambda)|| is strictly decreasing on (lam_hat, inf) and
  // crosses radius exactly once here.
  double lo = lam_hat;
  double width = std::max(1.0, lam_abs);
  double hi = lam_hat + width;
  for (int i = 0; i < 200 && coeffs_at(hi).norm() > radius; ++i) {
    width *= 2.0;
    hi = lam_hat + width;
  }
  for (int i = 0; i < 300; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (!(mid > lo && mid < hi)) break;
    (coeffs_at(mid).norm() > radius ? lo : hi) = mid;
  }
  VectorXd c = coeffs_at(hi);
  const double norm_c = c.norm();
  if (norm_c > radius) c *= radius / norm_c;
  return basis * c;
}

}  // namespace nlqn::linalg
