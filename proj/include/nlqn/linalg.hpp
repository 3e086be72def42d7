#pragma once

#include <Eigen/Dense>

namespace nlqn::linalg {

struct SymEig {
  Eigen::VectorXd eigenvalues;   // ascending
  Eigen::MatrixXd eigenvectors;  // orthonormal columns, matching order
};

// Symmetric eigendecomposition. Throws std::runtime_error if the solver does
// not converge.
SymEig sym_eig(const Eigen::MatrixXd& m);

// Definiteness test used throughout: smallest eigenvalue strictly above
// 1e-10 * max(1, |largest eigenvalue|).
bool is_positive_definite(const Eigen::VectorXd& ascending_eigenvalues);

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& m);

struct LyapunovSolution {
  Eigen::MatrixXd solution;  // exactly symmetric
  double residual = 0.0;     // ||X p + p^T X - q||_F
};

// Minimal-Frobenius-norm least-squares solution X = X^T of X p + p^T X = q,
// q symmetric. Rank-deficient p is fine: degenerate directions get zero
// coefficients and contribute to the reported residual instead of failing.
// A bitwise-symmetric p takes an O(n^3) spectral route; general p takes the
// vectorized pseudoinverse route. Both return the same minimizer.
LyapunovSolution lyapunov_lsq_solve(const Eigen::MatrixXd& p, const Eigen::MatrixXd& q);

namespace detail {
// The two routes behind lyapunov_lsq_solve, exposed so tests can check that
// they agree on symmetric inputs.
LyapunovSolution lyapunov_spectral(const Eigen::MatrixXd& p, const Eigen::MatrixXd& q);
LyapunovSolution lyapunov_pseudoinverse(const Eigen::MatrixXd& p, const Eigen::MatrixXd& q);
}  // namespace detail

// Minimizer of x^T a x + b^T x over the ball ||x|| <= radius, a symmetric and
// possibly indefinite. Satisfies the KKT system (2a + 2 lambda I) x = -b with
// lambda >= 0, complementary slackness, and a + lambda I positive
// semidefinite. The hard case adds a bottom-eigenvector component to reach
// the boundary; its sign ambiguity is broken toward the lexicographically
// smaller point. a = 0, b = 0 returns the origin.
Eigen::VectorXd trust_region_min(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                                 double radius);

}  // namespace nlqn::linalg
