#include "nlqn/quadfit.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "nlqn/linalg.hpp"

namespace nlqn::quadfit {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

SampleBatch assemble(const GradientMap& grad, const VectorXd& center, double scale,
                     const MatrixXd& offsets, EvalCounter& counter,
                     const std::function<VectorXd()>& redraw) {
  if (!grad) throw std::invalid_argument("assemble: gradient map required");
  if (offsets.rows() != center.size())
    throw std::invalid_argument("assemble: offsets must have one row per coordinate");
  if (offsets.cols() < 1) throw std::invalid_argument("assemble: at least one sample required");
  if (!(scale > 0.0)) throw std::invalid_argument("assemble: scale must be positive");
  if (!center.allFinite() || !offsets.allFinite())
    throw std::invalid_argument("assemble: non-finite input");

  SampleBatch batch;
  batch.center = center;
  batch.scale = scale;
  batch.offsets = offsets;
  batch.gradients.resize(offsets.rows(), offsets.cols());

  for (Index j = 0; j < offsets.cols(); ++j) {
    VectorXd point = center + scale * batch.offsets.col(j);
    ++counter.gradient_evals;
    VectorXd g = grad(point);
    if (!g.allFinite() && redraw) {
      batch.offsets.col(j) = redraw();
      point = center + scale * batch.offsets.col(j);
      ++counter.gradient_evals;
      g = grad(point);
    }
    if (!g.allFinite()) {
      std::ostringstream msg;
      msg << "assemble: non-finite gradient at point (";
      for (Index i = 0; i < point.size(); ++i) msg << (i ? ", " : "") << point(i);
      msg << ")";
      throw std::runtime_error(msg.str());
    }
    batch.gradients.col(j) = g;
  }
  return batch;
}

double QuadraticModel::value(const VectorXd& x) const {
  return x.dot(curvature() * x) + linear.dot(x);
}

VectorXd QuadraticModel::gradient(const VectorXd& x) const {
  return 2.0 * (curvature() * x) + linear;
}

QuadraticModel fit(const SampleBatch& batch) {
  const Index n = batch.dim();
  const Index k = batch.samples();
  if (n < 1 || k < 1) throw std::invalid_argument("fit: empty batch");
  if (batch.gradients.rows() != n || batch.gradients.cols() != k)
    throw std::invalid_argument("fit: gradients must match offsets in shape");
  if (!(batch.scale > 0.0)) throw std::invalid_argument("fit: scale must be positive");

  const MatrixXd z = 2.0 * batch.scale * batch.offsets;
  const VectorXd zbar = z.rowwise().mean();
  const VectorXd gbar = batch.gradients.rowwise().mean();
  const MatrixXd zc = z.colwise() - zbar;
  const MatrixXd gc = batch.gradients.colwise() - gbar;

  // (Z - Zbar) Z^T equals the centered Gram matrix (Z - Zbar)(Z - Zbar)^T
  // because the centered columns sum to zero; the symmetric form keeps the
  // Lyapunov solve on its fast route.
  MatrixXd p = zc * zc.transpose();
  p = 0.5 * (p + p.transpose()).eval();
  const MatrixXd v = gc * zc.transpose();

  const auto sol = linalg::lyapunov_lsq_solve(p, v + v.transpose());

  QuadraticModel model;
  model.quad_coeff = 0.5 * sol.solution;  // A = (X + X^T)/4 with X symmetric
  model.linear = gbar - sol.solution * zbar;
  model.fit_residual = sol.residual;

  const auto eig = linalg::sym_eig(sol.solution);
  model.definite = linalg::is_positive_definite(eig.eigenvalues);
  model.degenerate = zc.norm() <= 1e-14 * std::max(1.0, z.norm());
  return model;
}

SearchDirections direction(const QuadraticModel& model, double trust_radius) {
  if (!(trust_radius > 0.0))
    throw std::invalid_argument("direction: trust radius must be positive");
  SearchDirections dirs;
  dirs.neg_linear = -model.linear;
  if (model.definite) {
    const Eigen::LLT<MatrixXd> llt(2.0 * model.curvature());
    if (llt.info() == Eigen::Success) {
      dirs.newton = llt.solve(-model.linear);
      if (dirs.newton.allFinite()) return dirs;
    }
  }
  // Indefinite or numerically singular curvature: minimize the model over a
  // ball instead.
  dirs.newton = linalg::trust_region_min(model.curvature(), model.linear, trust_radius);
  dirs.used_trust_region = true;
  return dirs;
}

}  // namespace nlqn::quadfit
