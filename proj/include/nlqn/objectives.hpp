#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace nlqn::objectives {

struct KnownMinimum {
  double value = 0.0;
  std::optional<Eigen::VectorXd> location;
};

struct Objective {
  std::string name;
  Eigen::Index dim = 0;
  std::function<double(const Eigen::VectorXd&)> value;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
  std::optional<KnownMinimum> known_minimum;
};

// Plate-shaped multimodal benchmark; global minimum 0 at the all-ones point.
Objective levy(Eigen::Index n);

// Radially symmetric ripple 1 - cos(12 pi ||x||) + 0.6 ||x||; the gradient at
// the origin is defined as zero. Global minimum 0 at the origin.
Objective salomon(Eigen::Index n);

// Ill-conditioned quadratic (diagonal linearly spaced from 1 to 100) plus a
// cosine disturbance of amplitude 10 and frequency 20 pi per coordinate.
// with_offset adds the constant that makes the global minimum 0 at the
// origin; without it the minimum is -10 n.
Objective rcigar(Eigen::Index n, bool with_offset);

// Two-dimensional highly oscillatory benchmark with global minimum
// -3.306868647475 near (-0.0244, 0.2106); the stored location is polished to
// gradient norm 1e-12 at construction.
Objective siam();

// Quadratic plus a finite sum of cosine waves; the family the closed-form
// disturbance residual and its bound are stated over.
struct RastriginModel {
  Eigen::MatrixXd quad_half;    // symmetric; quadratic part is x^T quad_half x
  Eigen::VectorXd amplitudes;   // one per cosine term
  Eigen::MatrixXd frequencies;  // n x m, one column per term
  Eigen::VectorXd phases;       // one per term
  Eigen::MatrixXd kernel;       // sampling covariance, symmetric positive definite

  Eigen::Index dim() const { return frequencies.rows(); }
  Eigen::Index terms() const { return frequencies.cols(); }

  // min over term pairs of ||s_j - s_l|| and ||s_j + s_l|| in the kernel
  // metric; +inf when there is a single term.
  double separation() const;

  // Throws std::invalid_argument on shape mismatch, non-definite kernel, or
  // zero separation.
  void validate() const;
};

Objective rastrigin_model_objective(const RastriginModel& model);

struct GradientCheckReport {
  double max_rel_error = 0.0;
  Eigen::VectorXd worst_point;
  std::optional<Eigen::VectorXd> nonfinite_point;
  bool ok(double threshold = 1e-5) const {
    return !nonfinite_point.has_value() && max_rel_error <= threshold;
  }
};

// Central finite differences (step 1e-6 * max(1, ||x||)) against the analytic
// gradient at `trials` points drawn uniformly from [-box_halfwidth,
// box_halfwidth]^n. Error at a point is ||fd - grad|| / max(1, ||grad||).
GradientCheckReport check_gradient(const Objective& o, int trials, std::uint64_t seed,
                                   double box_halfwidth = 2.0);

// Registry lookup by name ("levy", "salomon", "rcigar", "rcigar-noff",
// "siam"). dim 0 means the function's default. Unknown names throw
// std::invalid_argument listing the registry.
Objective make_objective(const std::string& name, Eigen::Index dim);
std::vector<std::string> registry_names();

}  // namespace nlqn::objectives
