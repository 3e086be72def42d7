#include "nlqn/objectives.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "nlqn/linalg.hpp"
#include "nlqn/random.hpp"

namespace nlqn::objectives {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr double kPi = std::numbers::pi;

void require_dim(Index n, Index lo, const char* name) {
  if (n < lo) {
    std::ostringstream msg;
    msg << name << ": dimension must be at least " << lo;
    throw std::invalid_argument(msg.str());
  }
}

}  // namespace

Objective levy(Index n) {
  require_dim(n, 1, "levy");
  Objective o;
  o.name = "levy";
  o.dim = n;
  o.value = [n](const VectorXd& x) {
    const auto w = [&](Index i) { return 1.0 + (x(i) - 1.0) / 4.0; };
    double f = std::pow(std::sin(kPi * w(0)), 2);
    const double wn = w(n - 1);
    f += (wn - 1.0) * (wn - 1.0) * (1.0 + std::pow(std::sin(2.0 * kPi * wn), 2));
    for (Index i = 0; i + 1 < n; ++i) {
      const double wi = w(i);
      f += (wi - 1.0) * (wi - 1.0) * (1.0 + 10.0 * std::pow(std::sin(kPi * wi + 1.0), 2));
    }
    return f;
  };
  o.gradient = [n](const VectorXd& x) {
    const auto w = [&](Index i) { return 1.0 + (x(i) - 1.0) / 4.0; };
    VectorXd g = VectorXd::Zero(n);
    g(0) += (kPi / 4.0) * std::sin(2.0 * kPi * w(0));
    const double wn = w(n - 1);
    g(n - 1) += 0.5 * (wn - 1.0) * (1.0 + std::pow(std::sin(2.0 * kPi * wn), 2)) +
                (kPi / 2.0) * (wn - 1.0) * (wn - 1.0) * std::sin(4.0 * kPi * wn);
    for (Index i = 0; i + 1 < n; ++i) {
      const double wi = w(i);
      const double t = kPi * wi + 1.0;
      g(i) += 0.5 * (wi - 1.0) * (1.0 + 10.0 * std::pow(std::sin(t), 2)) +
              (5.0 * kPi / 2.0) * (wi - 1.0) * (wi - 1.0) * std::sin(2.0 * t);
    }
    return g;
  };
  o.known_minimum = KnownMinimum{0.0, VectorXd::Ones(n)};
  return o;
}

Objective salomon(Index n) {
  require_dim(n, 1, "salomon");
  Objective o;
  o.name = "salomon";
  o.dim = n;
  o.value = [](const VectorXd& x) {
    const double r = x.norm();
    return 1.0 - std::cos(12.0 * kPi * r) + 0.6 * r;
  };
  o.gradient = [n](const VectorXd& x) {
    const double r = x.norm();
    if (r == 0.0) return VectorXd::Zero(n).eval();
    const double slope = 12.0 * kPi * std::sin(12.0 * kPi * r) + 0.6;
    return VectorXd((slope / r) * x);
  };
  o.known_minimum = KnownMinimum{0.0, VectorXd::Zero(n)};
  return o;
}

Objective rcigar(Index n, bool with_offset) {
  require_dim(n, 2, "rcigar");
  const double amplitude = 10.0;
  const double freq = 20.0 * kPi;
  VectorXd diag(n);
  for (Index i = 0; i < n; ++i)
    diag(i) = 1.0 + 99.0 * static_cast<double>(i) / static_cast<double>(n - 1);
  const double offset = with_offset ? amplitude * static_cast<double>(n) : 0.0;

  Objective o;
  o.name = with_offset ? "rcigar" : "rcigar-noff";
  o.dim = n;
  o.value = [diag, offset, amplitude, freq](const VectorXd& x) {
    double f = offset;
    for (Index i = 0; i < x.size(); ++i)
      f += diag(i) * x(i) * x(i) - amplitude * std::cos(freq * x(i));
    return f;
  };
  o.gradient = [diag, amplitude, freq](const VectorXd& x) {
    VectorXd g(x.size());
    for (Index i = 0; i < x.size(); ++i)
      g(i) = 2.0 * diag(i) * x(i) + amplitude * freq * std::sin(freq * x(i));
    return g;
  };
  o.known_minimum =
      KnownMinimum{with_offset ? 0.0 : -amplitude * static_cast<double>(n), VectorXd::Zero(n)};
  return o;
}

namespace {

double siam_value(const VectorXd& p) {
  const double x = p(0), y = p(1);
  return std::exp(std::sin(50.0 * x)) + std::sin(60.0 * std::exp(y)) +
         std::sin(70.0 * std::sin(x)) + std::sin(std::sin(80.0 * y)) -
         std::sin(10.0 * (x + y)) + (x * x + y * y) / 4.0;
}

VectorXd siam_gradient(const VectorXd& p) {
  const double x = p(0), y = p(1);
  VectorXd g(2);
  g(0) = 50.0 * std::cos(50.0 * x) * std::exp(std::sin(50.0 * x)) +
         70.0 * std::cos(x) * std::cos(70.0 * std::sin(x)) -
         10.0 * std::cos(10.0 * (x + y)) + x / 2.0;
  const double ey = std::exp(y);
  g(1) = 60.0 * ey * std::cos(60.0 * ey) +
         80.0 * std::cos(80.0 * y) * std::cos(std::sin(80.0 * y)) -
         10.0 * std::cos(10.0 * (x + y)) + y / 2.0;
  return g;
}

// Newton polish of the printed minimizer estimate, with a finite-difference
// Jacobian of the analytic gradient. Keeps the best gradient norm seen.
VectorXd siam_polished_minimizer() {
  VectorXd x(2);
  x << -0.0244, 0.2106;
  VectorXd best = x;
  double best_norm = siam_gradient(x).norm();
  const double h = 1e-7;
  for (int iter = 0; iter < 60; ++iter) {
    const VectorXd g = siam_gradient(x);
    const double gn = g.norm();
    if (gn < best_norm) {
      best_norm = gn;
      best = x;
    }
    if (gn < 1e-13) break;
    MatrixXd jac(2, 2);
    for (Index i = 0; i < 2; ++i) {
      VectorXd hi = x, lo = x;
      hi(i) += h;
      lo(i) -= h;
      jac.col(i) = (siam_gradient(hi) - siam_gradient(lo)) / (2.0 * h);
    }
    const VectorXd step = jac.fullPivLu().solve(g);
    if (!step.allFinite()) break;
    x -= step;
  }
  return best;
}

}  // namespace

Objective siam() {
  Objective o;
  o.name = "siam";
  o.dim = 2;
  o.value = siam_value;
  o.gradient = siam_gradient;
  o.known_minimum = KnownMinimum{-3.306868647475, siam_polished_minimizer()};
  return o;
}

double RastriginModel::separation() const {
  const Index m = terms();
  if (m <= 1) return std::numeric_limits<double>::infinity();
  double best = std::numeric_limits<double>::infinity();
  const auto metric_norm = [&](const VectorXd& v) { return std::sqrt(v.dot(kernel * v)); };
  for (Index j = 0; j < m; ++j)
    for (Index l = j + 1; l < m; ++l) {
      best = std::min(best, metric_norm(frequencies.col(j) - frequencies.col(l)));
      best = std::min(best, metric_norm(frequencies.col(j) + frequencies.col(l)));
    }
  return best;
}

void RastriginModel::validate() const {
  const Index n = dim();
  const Index m = terms();
  if (n < 1) throw std::invalid_argument("RastriginModel: dimension must be positive");
  if (quad_half.rows() != n || quad_half.cols() != n)
    throw std::invalid_argument("RastriginModel: quad_half must be n x n");
  if (kernel.rows() != n || kernel.cols() != n)
    throw std::invalid_argument("RastriginModel: kernel must be n x n");
  if (amplitudes.size() != m || phases.size() != m)
    throw std::invalid_argument("RastriginModel: amplitudes/phases must have one entry per term");
  const auto near_symmetric = [](const MatrixXd& mat) {
    return (mat - mat.transpose()).norm() <= 1e-12 * std::max(1.0, mat.norm());
  };
  if (!near_symmetric(quad_half))
    throw std::invalid_argument("RastriginModel: quad_half must be symmetric");
  if (!near_symmetric(kernel)) throw std::invalid_argument("RastriginModel: kernel must be symmetric");
  if (!linalg::is_positive_definite(linalg::sym_eig(kernel).eigenvalues))
    throw std::invalid_argument("RastriginModel: kernel must be positive definite");
  if (!(separation() > 0.0))
    throw std::invalid_argument("RastriginModel: coincident frequency columns (zero separation)");
}

Objective rastrigin_model_objective(const RastriginModel& model) {
  model.validate();
  Objective o;
  o.name = "rastrigin-model";
  o.dim = model.dim();
  o.value = [model](const VectorXd& x) {
    double f = x.dot(model.quad_half * x);
    const VectorXd phase = model.frequencies.transpose() * x + model.phases;
    for (Index j = 0; j < model.terms(); ++j) f += model.amplitudes(j) * std::cos(phase(j));
    return f;
  };
  o.gradient = [model](const VectorXd& x) {
    VectorXd g = 2.0 * (model.quad_half * x);
    const VectorXd phase = model.frequencies.transpose() * x + model.phases;
    const VectorXd w = model.amplitudes.array() * phase.array().sin();
    if (model.terms() > 0) g -= model.frequencies * w;
    return g;
  };
  return o;
}

GradientCheckReport check_gradient(const Objective& o, int trials, std::uint64_t seed,
                                   double box_halfwidth) {
  if (trials < 1) throw std::invalid_argument("check_gradient: trials must be positive");
  if (!(box_halfwidth > 0.0))
    throw std::invalid_argument("check_gradient: box_halfwidth must be positive");
  std::mt19937_64 gen(seed);
  GradientCheckReport report;
  report.worst_point = VectorXd::Zero(o.dim);

  for (int t = 0; t < trials; ++t) {
    VectorXd x(o.dim);
    for (Index i = 0; i < o.dim; ++i)
      x(i) = rng::uniform_range(gen, -box_halfwidth, box_halfwidth);

    const VectorXd g = o.gradient(x);
    if (!g.allFinite()) {
      report.nonfinite_point = x;
      return report;
    }
    const double h = 1e-6 * std::max(1.0, x.norm());
    VectorXd fd(o.dim);
    bool finite = true;
    for (Index i = 0; i < o.dim && finite; ++i) {
      VectorXd hi = x, lo = x;
      hi(i) += h;
      lo(i) -= h;
      const double fhi = o.value(hi), flo = o.value(lo);
      finite = std::isfinite(fhi) && std::isfinite(flo);
      fd(i) = (fhi - flo) / (2.0 * h);
    }
    if (!finite) {
      report.nonfinite_point = x;
      return report;
    }
    const double rel = (fd - g).norm() / std::max(1.0, g.norm());
    if (rel > report.max_rel_error) {
      report.max_rel_error = rel;
      report.worst_point = x;
    }
  }
  return report;
}

Objective make_objective(const std::string& name, Index dim) {
  if (name == "levy") return levy(dim == 0 ? 2 : dim);
  if (name == "salomon") return salomon(dim == 0 ? 2 : dim);
  if (name == "rcigar") return rcigar(dim == 0 ? 20 : dim, true);
  if (name == "rcigar-noff") return rcigar(dim == 0 ? 20 : dim, false);
  if (name == "siam") {
    if (dim != 0 && dim != 2)
      throw std::invalid_argument("make_objective: siam is two-dimensional");
    return siam();
  }
  std::ostringstream msg;
  msg << "make_objective: unknown function '" << name << "'; known functions:";
  for (const auto& known : registry_names()) msg << " " << known;
  throw std::invalid_argument(msg.str());
}

std::vector<std::string> registry_names() {
  return {"levy", "salomon", "rcigar", "rcigar-noff", "siam"};
}

}  // namespace nlqn::objectives
