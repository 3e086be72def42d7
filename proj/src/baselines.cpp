#include "nlqn/baselines.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "nlqn/csv.hpp"
#include "nlqn/random.hpp"

namespace nlqn::baselines {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

void TraceSink::observe(double value, const VectorXd& point) {
  if (!std::isfinite(value) || value >= best_f) return;
  best_f = value;
  best_point = point;
  if (rows && counter) rows->push_back({counter->total(), value, restart_index});
}

namespace {

struct BudgetExhausted {};

struct GuardedObjective {
  const objectives::Objective& f;
  EvalCounter& counter;
  long budget;
  TraceSink* sink;

  double value(const VectorXd& x) {
    if (counter.total() >= budget) throw BudgetExhausted{};
    ++counter.function_evals;
    const double v = f.value(x);
    if (sink) sink->observe(v, x);
    return v;
  }

  VectorXd gradient(const VectorXd& x) {
    if (counter.total() >= budget) throw BudgetExhausted{};
    ++counter.gradient_evals;
    return f.gradient(x);
  }
};

struct WolfePoint {
  double alpha = 0.0;
  VectorXd x;
  double value = 0.0;
  VectorXd grad;
  bool ok = false;
};

constexpr double kC1 = 1e-4;
constexpr double kC2 = 0.9;
constexpr int kMaxTrials = 50;

// Strong Wolfe search along p from x (Nocedal-Wright bracketing plus a
// bisection zoom, at most kMaxTrials trial points per phase).
WolfePoint wolfe_search(GuardedObjective& obj, const VectorXd& x, double f0, const VectorXd& g0,
                        const VectorXd& p) {
  WolfePoint fail;
  const double d0 = g0.dot(p);
  if (!(d0 < 0.0) || !std::isfinite(d0)) return fail;

  const auto make_point = [&](double alpha, const VectorXd& xa, double fa,
                              const VectorXd& ga) {
    WolfePoint w;
    w.alpha = alpha;
    w.x = xa;
    w.value = fa;
    w.grad = ga;
    w.ok = true;
    return w;
  };

  const auto zoom = [&](double lo, double f_lo, double hi) -> WolfePoint {
    for (int i = 0; i < kMaxTrials; ++i) {
      if (std::abs(hi - lo) <= 1e-16 * std::max(1.0, std::abs(lo))) return fail;
      const double alpha = 0.5 * (lo + hi);
      const VectorXd xa = x + alpha * p;
      const double fa = obj.value(xa);
      if (!std::isfinite(fa) || fa > f0 + kC1 * alpha * d0 || fa >= f_lo) {
        hi = alpha;
        continue;
      }
      const VectorXd ga = obj.gradient(xa);
      if (!ga.allFinite()) return fail;
      const double da = ga.dot(p);
      if (std::abs(da) <= -kC2 * d0) return make_point(alpha, xa, fa, ga);
      if (da * (hi - lo) >= 0.0) hi = lo;
      lo = alpha;
      f_lo = fa;
    }
    return fail;
  };

  double prev_alpha = 0.0;
  double prev_f = f0;
  double alpha = 1.0;
  for (int i = 0; i < kMaxTrials; ++i) {
    const VectorXd xa = x + alpha * p;
    const double fa = obj.value(xa);
    if (!std::isfinite(fa) || fa > f0 + kC1 * alpha * d0 || (i > 0 && fa >= prev_f))
      return zoom(prev_alpha, prev_f, alpha);
    const VectorXd ga = obj.gradient(xa);
    if (!ga.allFinite()) return fail;
    const double da = ga.dot(p);
    if (std::abs(da) <= -kC2 * d0) return make_point(alpha, xa, fa, ga);
    if (da >= 0.0) return zoom(alpha, fa, prev_alpha);
    prev_alpha = alpha;
    prev_f = fa;
    alpha = std::min(2.0 * alpha, 1e8);
  }
  return fail;
}

}  // namespace

BfgsOutcome bfgs_local(const objectives::Objective& f, const VectorXd& start, double grad_tol,
                       EvalCounter& counter, long eval_budget, TraceSink* sink,
                       const BfgsObserver& observer) {
  if (start.size() != f.dim) throw std::invalid_argument("bfgs_local: start point has wrong size");
  if (!(grad_tol > 0.0)) throw std::invalid_argument("bfgs_local: grad_tol must be positive");

  GuardedObjective obj{f, counter, eval_budget, sink};
  const Index n = start.size();

  BfgsOutcome out;
  out.point = start;
  out.value = std::numeric_limits<double>::quiet_NaN();

  try {
    VectorXd x = start;
    VectorXd g = obj.gradient(x);
    if (!g.allFinite()) return out;
    if (g.norm() < grad_tol) {
      out.value = obj.value(x);
      out.converged = true;
      return out;
    }
    double fx = obj.value(x);
    if (!std::isfinite(fx)) return out;
    out.point = x;
    out.value = fx;

    MatrixXd h = MatrixXd::Identity(n, n);
    while (true) {
      VectorXd p = -(h * g);
      if (!(p.dot(g) < 0.0)) {  // safeguard against a corrupted metric
        h.setIdentity();
        p = -g;
      }
      const WolfePoint w = wolfe_search(obj, x, fx, g, p);
      if (!w.ok) return out;

      const VectorXd s = w.x - x;
      const VectorXd y = w.grad - g;
      const double sy = s.dot(y);
      if (sy > 1e-12 * s.norm() * y.norm()) {
        // (I - rho s y^T) H (I - rho y s^T) + rho s s^T expanded to rank-two
        // form; O(n^2) per update.
        const double rho = 1.0 / sy;
        const VectorXd hy = h * y;
        const double yhy = y.dot(hy);
        h.noalias() -= rho * (s * hy.transpose() + hy * s.transpose());
        h.noalias() += (rho * rho * yhy + rho) * s * s.transpose();
        if (observer) observer(h, w.x, w.grad);
      }
      x = w.x;
      fx = w.value;
      g = w.grad;
      out.point = x;
      out.value = fx;
      if (g.norm() < grad_tol) {
        out.converged = true;
        return out;
      }
    }
  } catch (const BudgetExhausted&) {
    return out;
  }
}

RbfgsResult rbfgs_run(const objectives::Objective& f, const RbfgsConfig& cfg,
                      const RestartObserver& on_restart) {
  if (cfg.dim < 1) throw std::invalid_argument("rbfgs_run: dim must be positive");
  if (cfg.reinit_center.size() != cfg.dim)
    throw std::invalid_argument("rbfgs_run: reinit_center has wrong size");
  if (!(cfg.reinit_halfwidth > 0.0))
    throw std::invalid_argument("rbfgs_run: reinit_halfwidth must be positive");
  if (cfg.eval_budget < 1) throw std::invalid_argument("rbfgs_run: budget must be at least 1");

  RbfgsResult result;
  std::mt19937_64 gen(cfg.seed);
  TraceSink sink;
  sink.counter = &result.evals;
  sink.rows = &result.trace;
  sink.best_point = cfg.reinit_center;

  int solves = 0;
  while (result.evals.total() < cfg.eval_budget) {
    VectorXd start(cfg.dim);
    if (solves == 0) {
      start = cfg.reinit_center;
    } else {
      for (Index i = 0; i < cfg.dim; ++i)
        start(i) = cfg.reinit_center(i) +
                   rng::uniform_range(gen, -cfg.reinit_halfwidth, cfg.reinit_halfwidth);
    }
    sink.restart_index = solves;
    if (on_restart) on_restart(solves, start);
    bfgs_local(f, start, cfg.grad_tol, result.evals, cfg.eval_budget, &sink);
    ++solves;
  }

  result.restarts = solves > 0 ? solves - 1 : 0;
  result.best_point = sink.best_point;
  result.best_value = sink.rows && !result.trace.empty()
                          ? sink.best_f
                          : std::numeric_limits<double>::quiet_NaN();
  if (!result.trace.empty() && result.trace.back().eval_count != result.evals.total())
    result.trace.push_back(
        {result.evals.total(), result.trace.back().best_f, result.trace.back().restart_index});
  return result;
}

void write_rbfgs_trace_csv(std::ostream& out, const RbfgsResult& result) {
  out << "eval_count,best_f,restart_index\n";
  for (const auto& row : result.trace)
    out << row.eval_count << "," << csv::format(row.best_f) << "," << row.restart_index << "\n";
}

}  // namespace nlqn::baselines
