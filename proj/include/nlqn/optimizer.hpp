#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <ostream>
#include <random>
#include <vector>

#include "nlqn/counter.hpp"
#include "nlqn/objectives.hpp"

namespace nlqn::optimizer {

struct NlqnConfig {
  Eigen::Index dim = 0;
  Eigen::Index sample_size = 0;  // gradient samples per iteration
  double sigma0 = 1.0;           // initial sampling width
  std::optional<long> max_iterations;
  std::optional<long> eval_budget;
  double ls_base = 6.0 / 5.0;  // linesearch step base
  int ls_exp_lo = -10;
  int ls_exp_hi = 10;
  double shrink = 0.5;  // width multiplier in (0,1)
  double sigma_floor = 1e-4;
  double step_floor = 1e-4;
  double expand_trigger = 2.0;  // step/width ratio that triggers widening
  double trust_radius = 1.0;
  std::uint64_t seed = 0;

  void validate() const;  // throws std::invalid_argument
};

// n x k matrix of independent standard normals from the given stream.
// Identical stream state gives an identical matrix.
Eigen::MatrixXd gaussian_sampler(Eigen::Index n, Eigen::Index k, std::mt19937_64& gen);

enum class DirectionTag { newton, neg_b, stall };
const char* to_string(DirectionTag tag);

struct LinesearchResult {
  Eigen::VectorXd point;
  double value = 0.0;  // equals the incumbent fx when stalled
  DirectionTag tag = DirectionTag::stall;
  int exponent = 0;
  bool stalled = false;
};

// Evaluates f at x + base^i * newton_dir and x + base^i * neg_linear for
// every exponent in [ls_exp_lo, ls_exp_hi], charging one unit each, and
// returns the best candidate that strictly improves on fx, the value at x.
// Ties break toward smaller value, then the newton family, then the smaller
// exponent. No improving candidate stalls: the point stays at x with value
// fx, which is what lets the width-shrink branch of `scaling` fire on
// stagnation instead of drifting along non-descending moves forever.
LinesearchResult linesearch(const objectives::Objective& f, const Eigen::VectorXd& newton_dir,
                            const Eigen::VectorXd& neg_linear, const Eigen::VectorXd& x,
                            double fx, const NlqnConfig& cfg, EvalCounter& counter);

// Width update: a width below sigma_floor is first reset to sigma0; then a
// step shorter than step_floor shrinks the width by `shrink`, a step longer
// than expand_trigger * width replaces it with shrink * ||step||, and
// anything else keeps it.
double scaling(double sigma0, double sigma, const Eigen::VectorXd& step, const NlqnConfig& cfg);

struct IterationRecord {
  long t = 0;                  // 1-based iteration index
  Eigen::VectorXd iterate;     // point after this iteration
  double f_value = 0.0;        // objective at that point
  double sigma = 0.0;          // sampling width used this iteration
  double newton_norm = 0.0;    // length of the unscaled newton direction
  double step_norm = 0.0;      // length of the accepted move
  DirectionTag tag = DirectionTag::stall;
  int exponent = 0;
  long evals = 0;  // counter total at end of iteration
  double best_f = 0.0;
};

struct NlqnResult {
  Eigen::VectorXd final_point;
  double final_value = 0.0;
  Eigen::VectorXd best_point;
  double best_value = 0.0;
  double initial_value = 0.0;  // f at the start point (uncharged, trace only)
  std::vector<IterationRecord> trace;
  EvalCounter evals;
};

// One sample-fit-step-rescale loop per iteration until the iteration cap or
// evaluation budget is reached (an iteration in flight always finishes its
// linesearch). Returns the final iterate and the best point ever evaluated.
NlqnResult nlqn_run(const objectives::Objective& f, const Eigen::VectorXd& start,
                    const NlqnConfig& cfg);

// Columns: t,f_xt,sigma_t,step_norm,dir_tag,exponent_i,evals,best_f. Row 0 is
// the start point.
void write_trace_csv(std::ostream& out, const NlqnResult& result, double sigma0);

}  // namespace nlqn::optimizer
