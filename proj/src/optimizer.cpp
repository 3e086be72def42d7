#include "nlqn/optimizer.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "nlqn/csv.hpp"
#include "nlqn/quadfit.hpp"
#include "nlqn/random.hpp"

namespace nlqn::optimizer {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

void NlqnConfig::validate() const {
  if (dim < 1) throw std::invalid_argument("NlqnConfig: dim must be positive");
  if (sample_size < 2) throw std::invalid_argument("NlqnConfig: sample_size must be at least 2");
  if (!(sigma0 > 0.0)) throw std::invalid_argument("NlqnConfig: sigma0 must be positive");
  if (!max_iterations && !eval_budget)
    throw std::invalid_argument("NlqnConfig: set an iteration cap or an evaluation budget");
  if (max_iterations && *max_iterations < 0)
    throw std::invalid_argument("NlqnConfig: iteration cap must be nonnegative");
  if (eval_budget && *eval_budget < 0)
    throw std::invalid_argument("NlqnConfig: evaluation budget must be nonnegative");
  if (!(ls_base > 1.0)) throw std::invalid_argument("NlqnConfig: ls_base must exceed 1");
  if (ls_exp_lo > ls_exp_hi) throw std::invalid_argument("NlqnConfig: empty exponent range");
  if (!(shrink > 0.0 && shrink < 1.0))
    throw std::invalid_argument("NlqnConfig: shrink must lie in (0,1)");
  if (!(sigma_floor > 0.0) || !(step_floor > 0.0))
    throw std::invalid_argument("NlqnConfig: floors must be positive");
  if (!(expand_trigger > 0.0))
    throw std::invalid_argument("NlqnConfig: expand_trigger must be positive");
  if (!(trust_radius > 0.0)) throw std::invalid_argument("NlqnConfig: trust_radius must be positive");
}

MatrixXd gaussian_sampler(Index n, Index k, std::mt19937_64& gen) {
  if (n < 1 || k < 1) throw std::invalid_argument("gaussian_sampler: empty shape");
  MatrixXd z(n, k);
  rng::NormalSampler normal;
  for (Index j = 0; j < k; ++j)
    for (Index i = 0; i < n; ++i) z(i, j) = normal.next(gen);
  return z;
}

const char* to_string(DirectionTag tag) {
  switch (tag) {
    case DirectionTag::newton: return "newton";
    case DirectionTag::neg_b: return "neg_b";
    case DirectionTag::stall: return "stall";
  }
  return "unknown";
}

LinesearchResult linesearch(const objectives::Objective& f, const VectorXd& newton_dir,
                            const VectorXd& neg_linear, const VectorXd& x, double fx,
                            const NlqnConfig& cfg, EvalCounter& counter) {
  LinesearchResult best;
  best.point = x;
  best.value = fx;
  best.stalled = true;

  const std::pair<DirectionTag, const VectorXd*> families[] = {
      {DirectionTag::newton, &newton_dir}, {DirectionTag::neg_b, &neg_linear}};

  // Enumeration order realizes the tie-break: smaller value first, then the
  // newton family, then the smaller exponent. A candidate must strictly beat
  // the incumbent value; NaN comparisons are false, so non-finite values can
  // never win.
  for (const auto& [tag, dir] : families) {
    for (int i = cfg.ls_exp_lo; i <= cfg.ls_exp_hi; ++i) {
      const VectorXd candidate = x + std::pow(cfg.ls_base, i) * (*dir);
      ++counter.function_evals;
      const double value = f.value(candidate);
      if (value < best.value) {
        best.point = candidate;
        best.value = value;
        best.tag = tag;
        best.exponent = i;
        best.stalled = false;
      }
    }
  }
  if (best.stalled) best.tag = DirectionTag::stall;
  return best;
}

double scaling(double sigma0, double sigma, const VectorXd& step, const NlqnConfig& cfg) {
  if (!(sigma0 > 0.0) || !(sigma > 0.0))
    throw std::invalid_argument("scaling: widths must be positive");
  if (sigma < cfg.sigma_floor) sigma = sigma0;  // reset, then fall through once
  const double len = step.norm();
  if (len < cfg.step_floor) return cfg.shrink * sigma;
  if (len > cfg.expand_trigger * sigma) return cfg.shrink * len;
  return sigma;
}

NlqnResult nlqn_run(const objectives::Objective& f, const VectorXd& start, const NlqnConfig& cfg) {
  cfg.validate();
  if (start.size() != cfg.dim) throw std::invalid_argument("nlqn_run: start point has wrong size");
  if (!start.allFinite()) throw std::invalid_argument("nlqn_run: non-finite start point");

  NlqnResult result;
  // Trace-only evaluation of the start point; the per-iteration accounting
  // stays exactly sample_size + linesearch grid.
  result.initial_value = f.value(start);
  if (!std::isfinite(result.initial_value))
    throw std::runtime_error("nlqn_run: objective is non-finite at the start point");

  std::mt19937_64 gen(cfg.seed);
  VectorXd x = start;
  double fx = result.initial_value;
  double sigma = cfg.sigma0;
  result.best_point = x;
  result.best_value = fx;

  const auto redraw = [&]() {
    VectorXd col(cfg.dim);
    rng::NormalSampler normal;
    for (Index i = 0; i < cfg.dim; ++i) col(i) = normal.next(gen);
    return col;
  };

  long t = 0;
  while (true) {
    if (cfg.max_iterations && t >= *cfg.max_iterations) break;
    if (cfg.eval_budget && result.evals.total() >= *cfg.eval_budget) break;

    const MatrixXd z = gaussian_sampler(cfg.dim, cfg.sample_size, gen);
    double newton_norm = 0.0;
    LinesearchResult ls;
    ls.point = x;
    ls.value = fx;
    ls.tag = DirectionTag::stall;
    ls.exponent = 0;
    ls.stalled = true;
    try {
      const auto batch = quadfit::assemble(f.gradient, x, sigma, z, result.evals, redraw);
      const auto model = quadfit::fit(batch);
      const auto dirs = quadfit::direction(model, cfg.trust_radius);
      newton_norm = dirs.newton.norm();
      ls = linesearch(f, dirs.newton, dirs.neg_linear, x, fx, cfg, result.evals);
    } catch (const std::exception&) {
      // Sampling with a very wide kernel can land where the gradient
      // overflows: the batch then fails even after redraws, or the fit
      // collapses into non-finite algebra. Treat such an iteration as
      // stalled — keep the iterate, shrink the width, move on — rather
      // than aborting a run that can still recover.
    }

    const VectorXd step = ls.point - x;
    const double sigma_used = sigma;
    sigma = scaling(cfg.sigma0, sigma, step, cfg);
    if (!ls.stalled) {
      x = ls.point;
      fx = ls.value;
      if (ls.value < result.best_value) {
        result.best_value = ls.value;
        result.best_point = ls.point;
      }
    }
    ++t;

    IterationRecord rec;
    rec.t = t;
    rec.iterate = x;
    rec.f_value = fx;
    rec.sigma = sigma_used;
    rec.newton_norm = newton_norm;
    rec.step_norm = step.norm();
    rec.tag = ls.tag;
    rec.exponent = ls.stalled ? 0 : ls.exponent;
    rec.evals = result.evals.total();
    rec.best_f = result.best_value;
    result.trace.push_back(std::move(rec));
  }

  result.final_point = x;
  result.final_value = fx;
  return result;
}

void write_trace_csv(std::ostream& out, const NlqnResult& result, double sigma0) {
  out << "t,f_xt,sigma_t,step_norm,dir_tag,exponent_i,evals,best_f\n";
  out << "0," << csv::format(result.initial_value) << "," << csv::format(sigma0)
      << ",0,init,0,0," << csv::format(result.initial_value) << "\n";
  for (const auto& rec : result.trace) {
    out << rec.t << "," << csv::format(rec.f_value) << "," << csv::format(rec.sigma) << ","
        << csv::format(rec.step_norm) << "," << to_string(rec.tag) << "," << rec.exponent << ","
        << rec.evals << "," << csv::format(rec.best_f) << "\n";
  }
}

}  // namespace nlqn::optimizer
