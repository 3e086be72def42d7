#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "nlqn/objectives.hpp"

namespace nlqn::experiments {

// Runs fn(0..count-1) on up to `jobs` threads. Units must not share mutable
// state; the first exception thrown by any unit is rethrown.
void parallel_for(long count, int jobs, const std::function<void(long)>& fn);

// Median of a copy of the values (mean of the middle pair for even counts).
double median(std::vector<double> values);

// One-sided Mann-Whitney p-value (normal approximation with midranks, tie
// correction, and continuity correction) for the alternative that `a` is
// stochastically smaller than `b`. Returns 0.5 when every value is tied.
double mann_whitney_p_less(const std::vector<double>& a, const std::vector<double>& b);

// ---- search-direction angle study ----------------------------------------

enum class Estimator { newton, neg_b, mean_grad, random };
const char* to_string(Estimator estimator);

struct AngleRecord {
  double sigma0 = 0.0;  // sampling width of the cell
  double box = 0.0;     // start-point box half-width U
  long trial = 0;
  Estimator estimator = Estimator::random;
  double angle = 0.0;  // radians in [0, pi] against the direction to the origin
};

// Angle between dir and reference; pi/2 when either is zero.
double direction_angle(const Eigen::VectorXd& dir, const Eigen::VectorXd& reference);

// For every cell (sigma0, U) in {1e-2,1e-1,1,10,1e2,1e3}^2 draws `trials`
// start points x0 ~ Unif([-U,U]^20), fits one quadratic model from 30
// sampled gradients of the offset-free rotated-cigar objective, and records
// the angles of the model step, -b, the negated mean gradient, and a random
// unit direction against -x0. Returns 4 records per (cell, trial), grouped
// by cell then trial.
std::vector<AngleRecord> exp1_angles(std::uint64_t seed, long trials = 100, int jobs = 1);

// ---- benchmark traces ------------------------------------------------------

struct TracePoint {
  long eval_count = 0;
  double best_f = 0.0;
};

struct BenchmarkRun {
  std::string algo;  // "nlqn" | "rbfgs"
  std::string func;  // "levy" | "salomon" | "rcigar"
  long run = 0;
  std::vector<TracePoint> trace;  // best-so-far vs evaluation index
};

// Head-to-head benchmark at n=50: both solvers start each run from the same
// x0 ~ Unif([-10,10]^50) and spend the same evaluation budget. Traces start
// at f(x0) and end exactly at the budget index.
std::vector<BenchmarkRun> exp2_benchmark(std::uint64_t seed, long runs, long budget = 100000,
                                         int jobs = 1);

// ---- camel-ridge minimization study ---------------------------------------

inline constexpr double kSiamMinimum = -3.306868647475;

struct SiamRun {
  long run = 0;
  std::vector<TracePoint> trace;
  bool success = false;  // best value reached the known minimum within 1e-8
};

struct Exp3Result {
  std::vector<SiamRun> runs;
  long successes = 0;
  double threshold = kSiamMinimum + 1e-8;
};

// Seeded runs from Unif([-100,100]^2) with the small-sample configuration
// (k=3, sigma0=1, shrink 10/11) under the given evaluation budget.
Exp3Result exp3_siam(std::uint64_t seed, long runs, long budget = 30000, int jobs = 1);

// ---- disturbance-residual verification -------------------------------------

// Exact value of the integral of ||gradient of the cosine sum||^2 under
// N(0, sigma^2 * kernel), via the characteristic-function closed form.
double residual_exact(const objectives::RastriginModel& model, double sigma);

// Upper bound 2||a||^2 ||S||_F^2 (1 + (m-1) exp(-sigma^2 eps^2 / 2)) with
// eps the model's frequency separation.
double residual_bound(const objectives::RastriginModel& model, double sigma);

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};

// Monte-Carlo estimate of the same integral from `samples` draws.
McEstimate residual_monte_carlo(const objectives::RastriginModel& model, double sigma,
                                long samples, std::uint64_t seed);

struct BoundCheckRecord {
  double sigma = 0.0;
  double mc = 0.0;
  double exact = 0.0;
  double bound = 0.0;
  double mc_std_error = 0.0;
};

std::vector<BoundCheckRecord> bound_check(const objectives::RastriginModel& model,
                                          const std::vector<double>& sigmas, long mc_samples,
                                          std::uint64_t seed);

// Valid random instance with dim <= max_dim, terms <= max_terms, a random
// positive definite sampling kernel, and separation bounded away from zero.
objectives::RastriginModel random_rastrigin_model(std::uint64_t seed, Eigen::Index max_dim = 5,
                                                  Eigen::Index max_terms = 8);

// ---- fitted-curvature consistency ------------------------------------------

struct ConsistencyReport {
  std::vector<double> sigmas;
  std::vector<std::vector<double>> errors;  // [sigma][trial] relative error
  std::vector<double> medians;              // per sigma
};

// Fits quadratic models to the disturbed quadratic (cigar diagonal plus
// cosines of the given amplitude) at random centers and reports the relative
// Frobenius error of the model Hessian against the quadratic part's Hessian.
ConsistencyReport consistency_check(std::uint64_t seed, long trials = 20, Eigen::Index dim = 10,
                                    Eigen::Index samples = 500,
                                    std::vector<double> sigmas = {1e-2, 1.0, 1e3},
                                    double amplitude = 10.0, int jobs = 1);

// ---- CSV writers ------------------------------------------------------------

void write_exp1_csv(std::ostream& out, const std::vector<AngleRecord>& records);
void write_exp2_csv(std::ostream& out, const std::vector<BenchmarkRun>& runs);
void write_exp3_csv(std::ostream& out, const Exp3Result& result);
void write_bound_csv(std::ostream& out, const std::vector<BoundCheckRecord>& records);

}  // namespace nlqn::experiments
