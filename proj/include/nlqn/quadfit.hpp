#pragma once

#include <Eigen/Dense>
#include <functional>

#include "nlqn/counter.hpp"

namespace nlqn::quadfit {

using GradientMap = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

// Gradients of the objective at center + scale * offsets_j, one column per
// sample.
struct SampleBatch {
  Eigen::VectorXd center;
  double scale = 0.0;
  Eigen::MatrixXd offsets;    // n x k raw draws
  Eigen::MatrixXd gradients;  // n x k

  Eigen::Index dim() const { return offsets.rows(); }
  Eigen::Index samples() const { return offsets.cols(); }
};

// Evaluates the gradient map at every sample point, charging one unit each.
// A non-finite gradient gets its offset redrawn once through `redraw` (when
// provided); a second non-finite result throws std::runtime_error naming the
// point.
SampleBatch assemble(const GradientMap& grad, const Eigen::VectorXd& center, double scale,
                     const Eigen::MatrixXd& offsets, EvalCounter& counter,
                     const std::function<Eigen::VectorXd()>& redraw = {});

// q(x) = <x, (A + A^T) x> + b^T x with A stored exactly symmetric, so the
// model's gradient is 2(A + A^T)x + b and its Hessian is 2(A + A^T).
struct QuadraticModel {
  Eigen::MatrixXd quad_coeff;  // A
  Eigen::VectorXd linear;      // b
  double fit_residual = 0.0;   // Frobenius residual of the normal equations
  bool definite = false;       // A + A^T positive definite
  bool degenerate = false;     // centered samples had numerical rank zero

  Eigen::MatrixXd curvature() const { return 2.0 * quad_coeff; }  // A + A^T
  Eigen::MatrixXd hessian() const { return 4.0 * quad_coeff; }    // 2(A + A^T)
  double value(const Eigen::VectorXd& x) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const;
};

// Least-squares quadratic model of the sampled gradient field: with
// Z = 2 * scale * offsets and column means zbar/gbar, solves the symmetric
// system X P + P^T X = V + V^T for X = A + A^T where P = (Z - Zbar) Z^T and
// V = (G - Gbar) Z^T, then b = gbar - X zbar. Degenerate batches (all
// offsets equal) still return the minimal-norm fit, flagged.
QuadraticModel fit(const SampleBatch& batch);

struct SearchDirections {
  Eigen::VectorXd newton;      // solves 2(A + A^T) dx = -b, or the ball minimizer
  Eigen::VectorXd neg_linear;  // -b
  bool used_trust_region = false;
};

// Newton direction when the curvature is positive definite; otherwise the
// model minimizer over the ball of the given radius.
SearchDirections direction(const QuadraticModel& model, double trust_radius);

}  // namespace nlqn::quadfit
