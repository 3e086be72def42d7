#include "nlqn/experiments.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <thread>

#include "nlqn/baselines.hpp"
#include "nlqn/csv.hpp"
#include "nlqn/optimizer.hpp"
#include "nlqn/quadfit.hpp"
#include "nlqn/random.hpp"

namespace nlqn::experiments {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

void parallel_for(long count, int jobs, const std::function<void(long)>& fn) {
  if (count <= 0) return;
  const int workers = static_cast<int>(std::min<long>(std::max(jobs, 1), count));
  if (workers == 1) {
    for (long i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<long> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      while (true) {
        const long i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median: empty input");
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  if (values.size() % 2 == 1) return values[mid];
  return 0.5 * (values[mid - 1] + values[mid]);
}

double mann_whitney_p_less(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("mann_whitney_p_less: empty sample");
  struct Entry {
    double value;
    int side;
  };
  std::vector<Entry> pool;
  pool.reserve(a.size() + b.size());
  for (double v : a) pool.push_back({v, 0});
  for (double v : b) pool.push_back({v, 1});
  std::sort(pool.begin(), pool.end(),
            [](const Entry& x, const Entry& y) { return x.value < y.value; });

  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double n = na + nb;
  double rank_sum_a = 0.0;
  double tie_term = 0.0;
  std::size_t i = 0;
  while (i < pool.size()) {
    std::size_t j = i;
    while (j < pool.size() && pool[j].value == pool[i].value) ++j;
    const double ties = static_cast<double>(j - i);
    const double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
    for (std::size_t t = i; t < j; ++t)
      if (pool[t].side == 0) rank_sum_a += avg_rank;
    if (ties > 1.0) tie_term += ties * ties * ties - ties;
    i = j;
  }
  const double u_a = rank_sum_a - 0.5 * na * (na + 1.0);
  const double mean = 0.5 * na * nb;
  const double variance = na * nb / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
  if (!(variance > 0.0)) return 0.5;
  const double z = (u_a + 0.5 - mean) / std::sqrt(variance);
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

// ---- search-direction angle study ----------------------------------------

const char* to_string(Estimator estimator) {
  switch (estimator) {
    case Estimator::newton: return "newton";
    case Estimator::neg_b: return "neg_b";
    case Estimator::mean_grad: return "mean_grad";
    case Estimator::random: return "random";
  }
  return "unknown";
}

double direction_angle(const VectorXd& dir, const VectorXd& reference) {
  const double nd = dir.norm();
  const double nr = reference.norm();
  if (nd == 0.0 || nr == 0.0) return 0.5 * std::numbers::pi;
  const double c = std::clamp(dir.dot(reference) / (nd * nr), -1.0, 1.0);
  return std::acos(c);
}

namespace {

void fill_normals(MatrixXd& m, rng::NormalSampler& normal, std::mt19937_64& gen) {
  for (Index c = 0; c < m.cols(); ++c)
    for (Index r = 0; r < m.rows(); ++r) m(r, c) = normal.next(gen);
}

VectorXd uniform_box(std::mt19937_64& gen, Index dim, double halfwidth) {
  VectorXd x(dim);
  for (Index i = 0; i < dim; ++i) x(i) = rng::uniform_range(gen, -halfwidth, halfwidth);
  return x;
}

}  // namespace

std::vector<AngleRecord> exp1_angles(std::uint64_t seed, long trials, int jobs) {
  if (trials < 1) throw std::invalid_argument("exp1_angles: trials must be positive");
  constexpr Index kDim = 20;
  constexpr Index kSamples = 30;
  const std::array<double, 6> grid = {1e-2, 1e-1, 1.0, 10.0, 100.0, 1000.0};

  const long cells = static_cast<long>(grid.size() * grid.size());
  std::vector<AngleRecord> records(static_cast<std::size_t>(cells * trials * 4));

  parallel_for(cells * trials, jobs, [&](long unit) {
    const long cell = unit / trials;
    const long trial = unit % trials;
    const double sigma0 = grid[static_cast<std::size_t>(cell) / grid.size()];
    const double box = grid[static_cast<std::size_t>(cell) % grid.size()];

    const auto objective = objectives::make_objective("rcigar-noff", kDim);
    std::mt19937_64 gen(rng::derive_seed(seed, static_cast<std::uint64_t>(unit)));

    VectorXd x0 = uniform_box(gen, kDim, box);
    while (x0.norm() == 0.0) x0 = uniform_box(gen, kDim, box);

    const MatrixXd offsets = optimizer::gaussian_sampler(kDim, kSamples, gen);
    EvalCounter scratch;
    const auto batch = quadfit::assemble(objective.gradient, x0, sigma0, offsets, scratch);
    const auto model = quadfit::fit(batch);
    const auto dirs = quadfit::direction(model, 1.0);
    const VectorXd mean_grad = batch.gradients.rowwise().mean();

    rng::NormalSampler normal;
    VectorXd random_dir(kDim);
    do {
      for (Index i = 0; i < kDim; ++i) random_dir(i) = normal.next(gen);
    } while (random_dir.norm() == 0.0);
    random_dir /= random_dir.norm();

    const VectorXd reference = -x0;
    const std::size_t slot = static_cast<std::size_t>(unit) * 4;
    records[slot + 0] = {sigma0, box, trial, Estimator::newton,
                         direction_angle(dirs.newton, reference)};
    records[slot + 1] = {sigma0, box, trial, Estimator::neg_b,
                         direction_angle(dirs.neg_linear, reference)};
    records[slot + 2] = {sigma0, box, trial, Estimator::mean_grad,
                         direction_angle(-mean_grad, reference)};
    records[slot + 3] = {sigma0, box, trial, Estimator::random,
                         direction_angle(random_dir, reference)};
  });
  return records;
}

// ---- benchmark traces ------------------------------------------------------

namespace {

std::vector<TracePoint> nlqn_trace_points(const optimizer::NlqnResult& result, long budget) {
  std::vector<TracePoint> points;
  points.reserve(result.trace.size() + 2);
  points.push_back({1, result.initial_value});
  for (const auto& rec : result.trace) points.push_back({rec.evals, rec.best_f});
  if (budget > points.back().eval_count) points.push_back({budget, points.back().best_f});
  return points;
}

optimizer::NlqnResult run_nlqn_budgeted(const objectives::Objective& objective,
                                        const VectorXd& x0, Index sample_size, double sigma0,
                                        double shrink, long budget, std::uint64_t seed) {
  optimizer::NlqnConfig cfg;
  cfg.dim = objective.dim;
  cfg.sample_size = sample_size;
  cfg.sigma0 = sigma0;
  cfg.shrink = shrink;
  cfg.seed = seed;
  // Whole iterations only, so the per-run accounting stays within the budget
  // and the trace can close exactly at the budget index.
  const long per_iteration = static_cast<long>(sample_size) + 42;
  cfg.max_iterations = budget / per_iteration;
  cfg.eval_budget = budget;
  return optimizer::nlqn_run(objective, x0, cfg);
}

}  // namespace

std::vector<BenchmarkRun> exp2_benchmark(std::uint64_t seed, long runs, long budget, int jobs) {
  if (runs < 1) throw std::invalid_argument("exp2_benchmark: runs must be positive");
  if (budget < 1) throw std::invalid_argument("exp2_benchmark: budget must be positive");
  constexpr Index kDim = 50;
  constexpr Index kSamples = 150;
  const std::array<const char*, 3> funcs = {"levy", "salomon", "rcigar"};

  std::vector<BenchmarkRun> out(static_cast<std::size_t>(2 * 3 * runs));
  parallel_for(2 * 3 * runs, jobs, [&](long unit) {
    const long algo = unit / (3 * runs);
    const long func_index = (unit % (3 * runs)) / runs;
    const long run = unit % runs;
    const auto objective =
        objectives::make_objective(funcs[static_cast<std::size_t>(func_index)], kDim);

    // The start point stream is shared by both solvers of a (function, run)
    // pair; each solver has its own stream.
    const std::uint64_t base = static_cast<std::uint64_t>((func_index * runs + run) * 3);
    std::mt19937_64 gen(rng::derive_seed(seed, base));
    const VectorXd x0 = uniform_box(gen, kDim, 10.0);

    BenchmarkRun result;
    result.func = funcs[static_cast<std::size_t>(func_index)];
    result.run = run;
    if (algo == 0) {
      result.algo = "nlqn";
      const auto r = run_nlqn_budgeted(objective, x0, kSamples, 10.0, 0.5, budget,
                                       rng::derive_seed(seed, base + 1));
      result.trace = nlqn_trace_points(r, budget);
    } else {
      result.algo = "rbfgs";
      baselines::RbfgsConfig cfg;
      cfg.dim = kDim;
      cfg.reinit_center = x0;
      cfg.reinit_halfwidth = 10.0;
      cfg.eval_budget = budget;
      cfg.seed = rng::derive_seed(seed, base + 2);
      const auto r = baselines::rbfgs_run(objective, cfg);
      result.trace.reserve(r.trace.size());
      for (const auto& row : r.trace) result.trace.push_back({row.eval_count, row.best_f});
    }
    out[static_cast<std::size_t>(unit)] = std::move(result);
  });
  return out;
}

// ---- camel-ridge minimization study ---------------------------------------

Exp3Result exp3_siam(std::uint64_t seed, long runs, long budget, int jobs) {
  if (runs < 1) throw std::invalid_argument("exp3_siam: runs must be positive");
  if (budget < 0) throw std::invalid_argument("exp3_siam: negative budget");

  Exp3Result result;
  result.runs.resize(static_cast<std::size_t>(runs));
  parallel_for(runs, jobs, [&](long run) {
    const auto objective = objectives::make_objective("siam", 2);
    std::mt19937_64 gen(rng::derive_seed(seed, static_cast<std::uint64_t>(run) * 2));
    const VectorXd x0 = uniform_box(gen, 2, 100.0);
    const auto r = run_nlqn_budgeted(objective, x0, 3, 1.0, 10.0 / 11.0, budget,
                                     rng::derive_seed(seed, static_cast<std::uint64_t>(run) * 2 + 1));
    SiamRun sr;
    sr.run = run;
    sr.trace = nlqn_trace_points(r, budget);
    sr.success = sr.trace.back().best_f <= result.threshold;
    result.runs[static_cast<std::size_t>(run)] = std::move(sr);
  });
  for (const auto& sr : result.runs)
    if (sr.success) ++result.successes;
  return result;
}

// ---- disturbance-residual verification -------------------------------------

double residual_exact(const objectives::RastriginModel& model, double sigma) {
  model.validate();
  if (!(sigma > 0.0)) throw std::invalid_argument("residual_exact: sigma must be positive");
  const Index m = model.terms();
  const MatrixXd& s = model.frequencies;
  const MatrixXd ks = model.kernel * s;
  const double s2 = sigma * sigma;
  double total = 0.0;
  for (Index j = 0; j < m; ++j) {
    for (Index l = 0; l < m; ++l) {
      const double dot = s.col(j).dot(s.col(l));
      if (dot == 0.0) continue;
      const VectorXd diff = s.col(j) - s.col(l);
      const VectorXd sum = s.col(j) + s.col(l);
      const double q_diff = diff.dot(ks.col(j) - ks.col(l));
      const double q_sum = sum.dot(ks.col(j) + ks.col(l));
      const double psi_j = model.phases(j);
      const double psi_l = model.phases(l);
      total += model.amplitudes(j) * model.amplitudes(l) * dot *
               (std::cos(psi_j - psi_l) * std::exp(-0.5 * s2 * q_diff) -
                std::cos(psi_j + psi_l) * std::exp(-0.5 * s2 * q_sum));
    }
  }
  // The product-to-sum identity for the sine pair carries a one-half factor.
  return 0.5 * total;
}

double residual_bound(const objectives::RastriginModel& model, double sigma) {
  model.validate();
  if (!(sigma > 0.0)) throw std::invalid_argument("residual_bound: sigma must be positive");
  const double m = static_cast<double>(model.terms());
  const double eps = model.separation();
  const double tail =
      model.terms() > 1 ? (m - 1.0) * std::exp(-0.5 * sigma * sigma * eps * eps) : 0.0;
  return 2.0 * model.amplitudes.squaredNorm() * model.frequencies.squaredNorm() * (1.0 + tail);
}

McEstimate residual_monte_carlo(const objectives::RastriginModel& model, double sigma,
                                long samples, std::uint64_t seed) {
  model.validate();
  if (!(sigma > 0.0))
    throw std::invalid_argument("residual_monte_carlo: sigma must be positive");
  if (samples < 2) throw std::invalid_argument("residual_monte_carlo: need at least 2 samples");

  const Index n = model.dim();
  Eigen::LLT<MatrixXd> llt(model.kernel);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("residual_monte_carlo: kernel factorization failed");
  const MatrixXd chol = llt.matrixL();

  std::mt19937_64 gen(seed);
  rng::NormalSampler normal;
  constexpr long kBlock = 4096;
  MatrixXd xi(n, kBlock);

  double sum = 0.0;
  double sum_sq = 0.0;
  long done = 0;
  while (done < samples) {
    const long b = std::min(kBlock, samples - done);
    auto block = xi.leftCols(b);
    for (Index c = 0; c < b; ++c)
      for (Index r = 0; r < n; ++r) block(r, c) = normal.next(gen);
    const MatrixXd points = sigma * (chol * block);
    MatrixXd t = model.frequencies.transpose() * points;
    t.colwise() += model.phases;
    Eigen::ArrayXXd w = t.array().sin();
    w.colwise() *= model.amplitudes.array();
    const MatrixXd grads = model.frequencies * w.matrix();
    for (Index c = 0; c < b; ++c) {
      const double q = grads.col(c).squaredNorm();
      sum += q;
      sum_sq += q * q;
    }
    done += b;
  }
  McEstimate est;
  const double count = static_cast<double>(samples);
  est.mean = sum / count;
  const double variance = std::max(0.0, (sum_sq - count * est.mean * est.mean) / (count - 1.0));
  est.std_error = std::sqrt(variance / count);
  return est;
}

std::vector<BoundCheckRecord> bound_check(const objectives::RastriginModel& model,
                                          const std::vector<double>& sigmas, long mc_samples,
                                          std::uint64_t seed) {
  std::vector<BoundCheckRecord> records;
  records.reserve(sigmas.size());
  for (std::size_t i = 0; i < sigmas.size(); ++i) {
    const double sigma = sigmas[i];
    BoundCheckRecord rec;
    rec.sigma = sigma;
    rec.exact = residual_exact(model, sigma);
    rec.bound = residual_bound(model, sigma);
    const auto mc = residual_monte_carlo(model, sigma, mc_samples,
                                         rng::derive_seed(seed, static_cast<std::uint64_t>(i)));
    rec.mc = mc.mean;
    rec.mc_std_error = mc.std_error;
    if (rec.exact > rec.bound)
      throw std::runtime_error("bound_check: disturbance residual exceeded its bound");
    records.push_back(rec);
  }
  return records;
}

objectives::RastriginModel random_rastrigin_model(std::uint64_t seed, Index max_dim,
                                                  Index max_terms) {
  if (max_dim < 1 || max_terms < 1)
    throw std::invalid_argument("random_rastrigin_model: bounds must be positive");
  std::mt19937_64 gen(seed);
  rng::NormalSampler normal;
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const Index n =
        1 + static_cast<Index>(rng::uniform_unit(gen) * static_cast<double>(max_dim));
    const Index m =
        1 + static_cast<Index>(rng::uniform_unit(gen) * static_cast<double>(max_terms));

    objectives::RastriginModel model;
    MatrixXd w(n, n);
    fill_normals(w, normal, gen);
    MatrixXd quad = w * w.transpose() / (2.0 * static_cast<double>(n));
    quad.diagonal().array() += 0.5;
    model.quad_half = 0.5 * (quad + quad.transpose());

    model.amplitudes = VectorXd(m);
    for (Index j = 0; j < m; ++j) model.amplitudes(j) = rng::uniform_range(gen, -2.0, 2.0);

    model.frequencies = MatrixXd(n, m);
    fill_normals(model.frequencies, normal, gen);

    model.phases = VectorXd(m);
    for (Index j = 0; j < m; ++j)
      model.phases(j) = rng::uniform_range(gen, 0.0, 2.0 * std::numbers::pi);

    MatrixXd v(n, n);
    fill_normals(v, normal, gen);
    MatrixXd kernel = v * v.transpose() / static_cast<double>(n);
    kernel.diagonal().array() += 0.25;
    model.kernel = 0.5 * (kernel + kernel.transpose());

    if (model.separation() < 1e-6) continue;
    model.validate();
    return model;
  }
  throw std::runtime_error("random_rastrigin_model: no well-separated instance found");
}

// ---- fitted-curvature consistency ------------------------------------------

ConsistencyReport consistency_check(std::uint64_t seed, long trials, Index dim, Index samples,
                                    std::vector<double> sigmas, double amplitude, int jobs) {
  if (trials < 1) throw std::invalid_argument("consistency_check: trials must be positive");
  if (dim < 2) throw std::invalid_argument("consistency_check: dim must be at least 2");
  if (sigmas.empty()) throw std::invalid_argument("consistency_check: no sigmas");

  const VectorXd diag = VectorXd::LinSpaced(dim, 1.0, 100.0);
  objectives::RastriginModel model;
  model.quad_half = MatrixXd(diag.asDiagonal());
  model.amplitudes = VectorXd::Constant(dim, -amplitude);
  model.frequencies = 20.0 * std::numbers::pi * MatrixXd::Identity(dim, dim);
  model.phases = VectorXd::Zero(dim);
  model.kernel = MatrixXd::Identity(dim, dim);
  model.validate();
  const auto objective = objectives::rastrigin_model_objective(model);
  const MatrixXd true_hessian = 2.0 * MatrixXd(diag.asDiagonal());
  const double hessian_norm = true_hessian.norm();

  ConsistencyReport report;
  report.sigmas = sigmas;
  report.errors.assign(sigmas.size(), std::vector<double>(static_cast<std::size_t>(trials)));

  const long count = static_cast<long>(sigmas.size()) * trials;
  parallel_for(count, jobs, [&](long unit) {
    const std::size_t sigma_index = static_cast<std::size_t>(unit / trials);
    const long trial = unit % trials;
    std::mt19937_64 gen(rng::derive_seed(seed, static_cast<std::uint64_t>(unit)));
    const VectorXd center = uniform_box(gen, dim, 10.0);
    const MatrixXd offsets = optimizer::gaussian_sampler(dim, samples, gen);
    EvalCounter scratch;
    const auto batch =
        quadfit::assemble(objective.gradient, center, sigmas[sigma_index], offsets, scratch);
    const auto fitted = quadfit::fit(batch);
    report.errors[sigma_index][static_cast<std::size_t>(trial)] =
        (fitted.hessian() - true_hessian).norm() / hessian_norm;
  });

  report.medians.reserve(sigmas.size());
  for (const auto& errs : report.errors) report.medians.push_back(median(errs));
  return report;
}

// ---- CSV writers ------------------------------------------------------------

void write_exp1_csv(std::ostream& out, const std::vector<AngleRecord>& records) {
  out << "sigma0,U,trial,estimator,angle_rad\n";
  for (const auto& rec : records)
    out << csv::format(rec.sigma0) << "," << csv::format(rec.box) << "," << rec.trial << ","
        << to_string(rec.estimator) << "," << csv::format(rec.angle) << "\n";
}

void write_exp2_csv(std::ostream& out, const std::vector<BenchmarkRun>& runs) {
  out << "algo,func,run,eval_count,best_f\n";
  for (const auto& run : runs)
    for (const auto& point : run.trace)
      out << run.algo << "," << run.func << "," << run.run << "," << point.eval_count << ","
          << csv::format(point.best_f) << "\n";
}

void write_exp3_csv(std::ostream& out, const Exp3Result& result) {
  out << "run,eval_count,best_f,success\n";
  for (const auto& run : result.runs)
    for (const auto& point : run.trace)
      out << run.run << "," << point.eval_count << "," << csv::format(point.best_f) << ","
          << (point.best_f <= result.threshold ? 1 : 0) << "\n";
}

void write_bound_csv(std::ostream& out, const std::vector<BoundCheckRecord>& records) {
  out << "sigma,mc,exact,bound\n";
  for (const auto& rec : records)
    out << csv::format(rec.sigma) << "," << csv::format(rec.mc) << "," << csv::format(rec.exact)
        << "," << csv::format(rec.bound) << "\n";
}

}  // namespace nlqn::experiments
