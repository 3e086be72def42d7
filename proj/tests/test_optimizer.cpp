#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

#include "doctest.h"
#include "nlqn/counter.hpp"
#include "nlqn/objectives.hpp"
#include "nlqn/optimizer.hpp"
#include "test_util.hpp"

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using namespace nlqn;
using optimizer::DirectionTag;
using optimizer::NlqnConfig;

namespace {

NlqnConfig base_config() {
  NlqnConfig cfg;
  cfg.dim = 3;
  cfg.sample_size = 4;
  cfg.max_iterations = 5;
  return cfg;
}

std::string trace_string(const optimizer::NlqnResult& result, double sigma0) {
  std::ostringstream out;
  optimizer::write_trace_csv(out, result, sigma0);
  return out.str();
}

}  // namespace

TEST_CASE("config validation rejects each bad field") {
  CHECK_NOTHROW(base_config().validate());
  auto cfg = base_config();
  cfg.dim = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = base_config();
  cfg.sample_size = 1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = base_config();
  cfg.sigma0 = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = base_config();
  cfg.max_iterations.reset();  // no cap of either kind
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = base_config();
  cfg.max_iterations = -1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = base_config();
  cfg.eval_budget = -1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = base_config();
  cfg.ls_base = 1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = base_config();
  cfg.ls_exp_lo = 1;
  cfg.ls_exp_hi = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = base_config();
  cfg.shrink = 1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = base_config();
  cfg.sigma_floor = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = base_config();
  cfg.expand_trigger = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = base_config();
  cfg.trust_radius = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("gaussian sampler draws roughly standard normal columns, deterministically") {
  std::mt19937_64 gen(5);
  const Index n = 10, k = 10000;
  const MatrixXd z = optimizer::gaussian_sampler(n, k, gen);
  const VectorXd mean = z.rowwise().mean();
  CHECK(mean.cwiseAbs().maxCoeff() <= 0.05);
  const MatrixXd cov = z * z.transpose() / static_cast<double>(k);
  CHECK((cov - MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() <= 0.05);

  std::mt19937_64 replay(5);
  CHECK((optimizer::gaussian_sampler(n, k, replay) - z).norm() == 0.0);
  CHECK((optimizer::gaussian_sampler(n, k, replay) - z).norm() != 0.0);  // stream advanced
  CHECK_THROWS_AS(optimizer::gaussian_sampler(0, 3, gen), std::invalid_argument);
}

TEST_CASE("linesearch picks the exact unit step when it hits the minimizer") {
  const auto f = testutil::quadratic_objective(MatrixXd::Identity(2, 2), VectorXd::Zero(2));
  VectorXd x(2), newton(2);
  x << 1.0, 0.0;
  newton << -1.0, 0.0;
  EvalCounter counter;
  const auto res = optimizer::linesearch(f, newton, VectorXd::Zero(2), x, 1.0, base_config(),
                                         counter);
  CHECK(counter.function_evals == 42);  // both families, 21 exponents each
  CHECK_FALSE(res.stalled);
  CHECK(res.tag == DirectionTag::newton);
  CHECK(res.exponent == 0);
  CHECK(res.point.norm() == 0.0);
  CHECK(res.value == 0.0);
}

TEST_CASE("linesearch scans the geometric grid for a misscaled direction") {
  const auto f = testutil::quadratic_objective(MatrixXd::Identity(2, 2), VectorXd::Zero(2));
  VectorXd x(2), dir(2);
  x << 1.0, 0.0;
  dir << -0.5, 0.0;  // needs a factor close to 2 = (6/5)^3.8
  EvalCounter counter;
  const auto res = optimizer::linesearch(f, dir, dir, x, 1.0, base_config(), counter);
  CHECK(res.exponent == 4);
  CHECK(res.tag == DirectionTag::newton);  // ties break toward the first family
  CHECK(res.value == doctest::Approx(std::pow(1.0 - std::pow(1.2, 4) * 0.5, 2)));
}

TEST_CASE("linesearch stalls when nothing strictly improves") {
  const auto f = testutil::quadratic_objective(MatrixXd::Identity(2, 2), VectorXd::Zero(2));
  const VectorXd x = VectorXd::Zero(2);  // already at the minimum

  EvalCounter counter;
  auto res = optimizer::linesearch(f, VectorXd::Zero(2), VectorXd::Zero(2), x, 0.0,
                                   base_config(), counter);
  CHECK(res.stalled);
  CHECK(res.tag == DirectionTag::stall);
  CHECK(res.value == 0.0);
  CHECK((res.point - x).norm() == 0.0);
  CHECK(counter.function_evals == 42);  // the grid is still charged

  VectorXd any(2);
  any << 0.3, -0.7;
  res = optimizer::linesearch(f, any, -any, x, 0.0, base_config(), counter);
  CHECK(res.stalled);  // every move leaves the minimum
}

TEST_CASE("linesearch never accepts a candidate with non-finite value") {
  objectives::Objective trap =
      testutil::quadratic_objective(MatrixXd::Identity(1, 1), VectorXd::Zero(1));
  trap.value = [](const VectorXd& x) {
    if (x(0) < 0.5) return std::numeric_limits<double>::quiet_NaN();
    return x(0) * x(0);
  };
  VectorXd x(1), dir(1);
  x << 1.0;
  dir << -1.0;  // most candidates land in the NaN region
  EvalCounter counter;
  const auto res = optimizer::linesearch(trap, dir, dir, x, 1.0, base_config(), counter);
  CHECK(std::isfinite(res.value));
  CHECK(res.value < 1.0);
  CHECK(res.point(0) >= 0.5);
}

TEST_CASE("width update follows the shrink, reset, and expand rules") {
  const auto cfg = base_config();  // floors 1e-4, shrink 0.5, expand trigger 2
  VectorXd tiny = VectorXd::Constant(1, 1e-5);
  VectorXd mid = VectorXd::Constant(1, 1.5);
  VectorXd big = VectorXd::Constant(1, 3.0);

  CHECK(optimizer::scaling(10.0, 10.0, tiny, cfg) == 5.0);   // stagnation shrinks
  CHECK(optimizer::scaling(10.0, 5e-5, tiny, cfg) == 5.0);   // floor resets to sigma0 first
  CHECK(optimizer::scaling(10.0, 1.0, big, cfg) == 1.5);     // long step re-anchors the width
  CHECK(optimizer::scaling(10.0, 1.0, mid, cfg) == 1.0);     // ordinary step keeps it
  CHECK_THROWS_AS(optimizer::scaling(10.0, 0.0, mid, cfg), std::invalid_argument);
  CHECK_THROWS_AS(optimizer::scaling(0.0, 1.0, mid, cfg), std::invalid_argument);
}

TEST_CASE("one iteration solves a convex quadratic to high relative accuracy") {
  std::mt19937_64 gen(9);
  const Index n = 5;
  const MatrixXd q = testutil::random_spd(n, gen);
  const VectorXd c = testutil::random_vector(n, gen);
  const auto f = testutil::quadratic_objective(q, c);
  const VectorXd start = testutil::random_vector(n, gen) * 3.0;

  NlqnConfig cfg;
  cfg.dim = n;
  cfg.sample_size = 10;
  cfg.max_iterations = 1;
  cfg.seed = 99;
  const auto result = optimizer::nlqn_run(f, start, cfg);

  const VectorXd minimizer = (2.0 * q).ldlt().solve(-c);
  const double fmin = f.value(minimizer);
  REQUIRE(result.trace.size() == 1u);
  CHECK(result.final_value - fmin <= 1e-6 * (result.initial_value - fmin) + 1e-10);
  CHECK(result.trace[0].tag == DirectionTag::newton);
}

TEST_CASE("a zero evaluation budget runs no iterations") {
  const auto f = testutil::quadratic_objective(MatrixXd::Identity(2, 2), VectorXd::Zero(2));
  NlqnConfig cfg;
  cfg.dim = 2;
  cfg.sample_size = 3;
  cfg.eval_budget = 0;
  VectorXd start(2);
  start << 1.0, 2.0;
  const auto result = optimizer::nlqn_run(f, start, cfg);
  CHECK(result.trace.empty());
  CHECK(result.evals.total() == 0);
  CHECK((result.final_point - start).norm() == 0.0);
  CHECK(result.final_value == result.initial_value);
  CHECK(result.best_value == result.initial_value);
}

TEST_CASE("evaluation accounting is exactly iterations times samples plus grid") {
  const auto f = objectives::levy(10);
  NlqnConfig cfg;
  cfg.dim = 10;
  cfg.sample_size = 15;
  cfg.max_iterations = 6;
  cfg.seed = 3;
  const auto result = optimizer::nlqn_run(f, VectorXd::Constant(10, 2.0), cfg);
  CHECK(result.evals.gradient_evals == 6 * 15);
  CHECK(result.evals.function_evals == 6 * 42);
  CHECK(result.evals.total() == 342);
  for (std::size_t i = 0; i < result.trace.size(); ++i)
    CHECK(result.trace[i].evals == static_cast<long>(i + 1) * 57);
}

TEST_CASE("an iteration in flight finishes even when it overshoots the budget") {
  const auto f = objectives::levy(10);
  NlqnConfig cfg;
  cfg.dim = 10;
  cfg.sample_size = 15;  // 57 per iteration
  cfg.eval_budget = 200;
  cfg.seed = 3;
  const auto result = optimizer::nlqn_run(f, VectorXd::Constant(10, 2.0), cfg);
  CHECK(result.trace.size() == 4u);  // 171 < 200, so a fourth iteration starts
  CHECK(result.evals.total() == 228);
}

TEST_CASE("trace rows satisfy the loop invariants on a rugged objective") {
  const auto f = objectives::siam();
  NlqnConfig cfg;
  cfg.dim = 2;
  cfg.sample_size = 3;  // 45 evaluations per iteration
  cfg.sigma0 = 1.0;
  cfg.shrink = 10.0 / 11.0;
  cfg.eval_budget = 4500;
  cfg.seed = 21;
  VectorXd start(2);
  start << 1.0, 1.0;
  const auto result = optimizer::nlqn_run(f, start, cfg);
  REQUIRE(result.trace.size() == 100u);

  double prev_best = result.initial_value;
  long stalls = 0;
  for (std::size_t i = 0; i < result.trace.size(); ++i) {
    const auto& rec = result.trace[i];
    CHECK(rec.t == static_cast<long>(i + 1));
    CHECK(rec.evals == static_cast<long>(i + 1) * 45);
    CHECK(rec.sigma > 0.0);
    CHECK(std::isfinite(rec.sigma));
    CHECK(rec.f_value == f.value(rec.iterate));
    CHECK(rec.best_f <= rec.f_value);
    CHECK(rec.best_f <= prev_best);
    prev_best = rec.best_f;
    CHECK(rec.exponent >= cfg.ls_exp_lo);
    CHECK(rec.exponent <= cfg.ls_exp_hi);
    const bool stalled = rec.tag == DirectionTag::stall;
    CHECK((rec.step_norm == 0.0) == stalled);
    if (stalled) {
      ++stalls;
      const VectorXd before = i == 0 ? start : result.trace[i - 1].iterate;
      CHECK((rec.iterate - before).norm() == 0.0);
    }
  }
  CHECK(result.trace.front().sigma == cfg.sigma0);
  CHECK(stalls >= 1);  // a hundred iterations on this surface always pin somewhere
  CHECK((result.final_point - result.trace.back().iterate).norm() == 0.0);
  CHECK(result.final_value == result.trace.back().f_value);
  CHECK(result.best_value == result.trace.back().best_f);
  CHECK(result.best_value == f.value(result.best_point));
}

TEST_CASE("identical seeds reproduce the trace bitwise and different seeds do not") {
  const auto f = objectives::levy(4);
  NlqnConfig cfg;
  cfg.dim = 4;
  cfg.sample_size = 6;
  cfg.max_iterations = 8;
  cfg.seed = 77;
  const VectorXd start = VectorXd::Constant(4, -1.5);
  const auto a = optimizer::nlqn_run(f, start, cfg);
  const auto b = optimizer::nlqn_run(f, start, cfg);
  CHECK(trace_string(a, cfg.sigma0) == trace_string(b, cfg.sigma0));
  CHECK((a.final_point - b.final_point).norm() == 0.0);

  cfg.seed = 78;
  const auto c = optimizer::nlqn_run(f, start, cfg);
  CHECK(trace_string(a, cfg.sigma0) != trace_string(c, cfg.sigma0));
}

TEST_CASE("the trace file has the documented header and start row") {
  const auto f = testutil::quadratic_objective(MatrixXd::Identity(2, 2), VectorXd::Zero(2));
  NlqnConfig cfg;
  cfg.dim = 2;
  cfg.sample_size = 3;
  cfg.max_iterations = 2;
  VectorXd start(2);
  start << 3.0, 4.0;
  const auto result = optimizer::nlqn_run(f, start, cfg);

  std::istringstream in(trace_string(result, cfg.sigma0));
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line == "t,f_xt,sigma_t,step_norm,dir_tag,exponent_i,evals,best_f");
  REQUIRE(std::getline(in, line));
  CHECK(line == "0,25,1,0,init,0,0,25");
  long rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == static_cast<long>(result.trace.size()));
}

TEST_CASE("runs reject bad start points") {
  const auto f = testutil::quadratic_objective(MatrixXd::Identity(2, 2), VectorXd::Zero(2));
  NlqnConfig cfg;
  cfg.dim = 2;
  cfg.sample_size = 3;
  cfg.max_iterations = 1;
  CHECK_THROWS_AS(optimizer::nlqn_run(f, VectorXd::Zero(3), cfg), std::invalid_argument);
  VectorXd bad(2);
  bad << 1.0, std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(optimizer::nlqn_run(f, bad, cfg), std::invalid_argument);

  objectives::Objective broken = f;
  broken.value = [](const VectorXd&) { return std::numeric_limits<double>::quiet_NaN(); };
  CHECK_THROWS_AS(optimizer::nlqn_run(broken, VectorXd::Zero(2), cfg), std::runtime_error);
}
