#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <ostream>
#include <vector>

#include "nlqn/counter.hpp"
#include "nlqn/objectives.hpp"

namespace nlqn::baselines {

struct BfgsOutcome {
  Eigen::VectorXd point;
  double value = 0.0;
  bool converged = false;  // gradient norm fell below the tolerance
};

// Best-so-far trace rows for the restarted runs.
struct RbfgsTracePoint {
  long eval_count = 0;
  double best_f = 0.0;
  int restart_index = 0;
};

// Improvement recorder shared across restarts.
struct TraceSink {
  EvalCounter* counter = nullptr;
  std::vector<RbfgsTracePoint>* rows = nullptr;
  double best_f = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_point;
  int restart_index = 0;

  void observe(double value, const Eigen::VectorXd& point);
};

// Called after each accepted inverse-Hessian update, for invariant tests.
using BfgsObserver =
    std::function<void(const Eigen::MatrixXd& inv_hessian, const Eigen::VectorXd& x,
                       const Eigen::VectorXd& grad)>;

// Dense BFGS on the inverse Hessian (identity start) with a strong Wolfe
// linesearch (decrease 1e-4, curvature 0.9, at most 50 trial points).
// Updates are skipped unless s^T y > 1e-12 ||s|| ||y||. Stops when the
// gradient norm falls below grad_tol (converged), the linesearch fails, or
// the evaluation budget runs out mid-solve.
BfgsOutcome bfgs_local(const objectives::Objective& f, const Eigen::VectorXd& start,
                       double grad_tol, EvalCounter& counter, long eval_budget,
                       TraceSink* sink = nullptr, const BfgsObserver& observer = {});

struct RbfgsConfig {
  Eigen::Index dim = 0;
  double grad_tol = 1e-4;
  Eigen::VectorXd reinit_center;   // first start; restarts draw around it
  double reinit_halfwidth = 10.0;  // per-coordinate uniform box half-width
  long eval_budget = 100000;
  std::uint64_t seed = 0;
};

struct RbfgsResult {
  Eigen::VectorXd best_point;
  double best_value = 0.0;
  std::vector<RbfgsTracePoint> trace;
  EvalCounter evals;
  int restarts = 0;  // local solves started after the first
};

using RestartObserver = std::function<void(int restart_index, const Eigen::VectorXd& start)>;

// Repeated local solves: the first from reinit_center, each later one from a
// uniform draw on the box around it, until the budget is exhausted. Returns
// the best point over every evaluation.
RbfgsResult rbfgs_run(const objectives::Objective& f, const RbfgsConfig& cfg,
                      const RestartObserver& on_restart = {});

// Columns: eval_count,best_f,restart_index.
void write_rbfgs_trace_csv(std::ostream& out, const RbfgsResult& result);

}  // namespace nlqn::baselines
