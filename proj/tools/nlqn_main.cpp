// Command-line front end: single optimizations, the three experiment
// suites, and the verification checks, all seeded and CSV-producing.
#include <Eigen/Dense>
#include <array>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "nlqn/baselines.hpp"
#include "nlqn/csv.hpp"
#include "nlqn/experiments.hpp"
#include "nlqn/objectives.hpp"
#include "nlqn/optimizer.hpp"
#include "nlqn/random.hpp"

namespace fs = std::filesystem;
using nlqn::csv::format;

namespace {

std::string default_out_dir() {
  const char* env = std::getenv("NLQN_OUT_DIR");
  return (env && *env) ? env : ".";
}

int default_jobs() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

std::ofstream open_out(const std::string& dir, const std::string& name) {
  fs::create_directories(dir);
  const fs::path path = fs::path(dir) / name;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return out;
}

Eigen::VectorXd draw_box(std::uint64_t seed, Eigen::Index dim, double halfwidth) {
  std::mt19937_64 gen(seed);
  Eigen::VectorXd x(dim);
  for (Eigen::Index i = 0; i < dim; ++i)
    x(i) = nlqn::rng::uniform_range(gen, -halfwidth, halfwidth);
  return x;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Non-local quasi-Newton optimizer: solver, experiments, verification"};
  app.require_subcommand(1);

  // ---- optimize ----
  auto* opt = app.add_subcommand("optimize", "Run the sampling quasi-Newton solver once");
  std::string opt_func = "levy";
  long opt_dim = 0;
  double opt_sigma0 = 10.0;
  long opt_k = 0;
  long opt_budget = 100000;
  long opt_iters = 0;
  double opt_gamma = 0.5;
  double opt_trust = 1.0;
  double opt_box = 10.0;
  std::uint64_t opt_seed = 0;
  std::string opt_out = default_out_dir();
  std::string opt_preset;
  opt->add_option("--func", opt_func, "objective name")->capture_default_str();
  opt->add_option("--dim", opt_dim, "dimension (0 = objective default)")->capture_default_str();
  opt->add_option("--sigma0", opt_sigma0, "initial sampling width")->capture_default_str();
  opt->add_option("--k", opt_k, "gradient samples per iteration (0 = 3*dim)")
      ->capture_default_str();
  opt->add_option("--budget", opt_budget, "total evaluation budget")->capture_default_str();
  opt->add_option("--iters", opt_iters, "iteration cap (0 = budget only)")->capture_default_str();
  opt->add_option("--gamma", opt_gamma, "width shrink factor in (0,1)")->capture_default_str();
  opt->add_option("--trust-radius", opt_trust, "ball radius for indefinite fits")
      ->capture_default_str();
  opt->add_option("--x0-box", opt_box, "start drawn uniformly from [-box, box]^n")
      ->capture_default_str();
  opt->add_option("--seed", opt_seed, "random seed")->capture_default_str();
  opt->add_option("--out", opt_out, "output directory")->capture_default_str();
  opt->add_option("--preset", opt_preset, "parameter preset")
      ->check(CLI::IsMember({"exp2", "exp3"}));

  // ---- exp1 ----
  auto* e1 = app.add_subcommand("exp1", "Search-direction angle study over a (sigma0, U) grid");
  std::uint64_t e1_seed = 0;
  long e1_trials = 100;
  int e1_jobs = default_jobs();
  std::string e1_out = default_out_dir();
  e1->add_option("--seed", e1_seed, "random seed")->capture_default_str();
  e1->add_option("--trials", e1_trials, "trials per grid cell")->capture_default_str();
  e1->add_option("--jobs", e1_jobs, "worker threads")->capture_default_str();
  e1->add_option("--out", e1_out, "output directory")->capture_default_str();

  // ---- exp2 ----
  auto* e2 = app.add_subcommand("exp2", "n=50 benchmark of the solver against restarted BFGS");
  std::uint64_t e2_seed = 0;
  long e2_runs = 20;
  long e2_budget = 100000;
  int e2_jobs = default_jobs();
  std::string e2_out = default_out_dir();
  e2->add_option("--seed", e2_seed, "random seed")->capture_default_str();
  e2->add_option("--runs", e2_runs, "runs per (algorithm, function)")->capture_default_str();
  e2->add_option("--budget", e2_budget, "evaluations per run")->capture_default_str();
  e2->add_option("--jobs", e2_jobs, "worker threads")->capture_default_str();
  e2->add_option("--out", e2_out, "output directory")->capture_default_str();

  // ---- exp3 ----
  auto* e3 = app.add_subcommand("exp3", "Two-dimensional camel-ridge minimization study");
  std::uint64_t e3_seed = 0;
  long e3_runs = 20;
  long e3_budget = 30000;
  int e3_jobs = default_jobs();
  std::string e3_out = default_out_dir();
  e3->add_option("--seed", e3_seed, "random seed")->capture_default_str();
  e3->add_option("--runs", e3_runs, "independent runs")->capture_default_str();
  e3->add_option("--budget", e3_budget, "evaluations per run")->capture_default_str();
  e3->add_option("--jobs", e3_jobs, "worker threads")->capture_default_str();
  e3->add_option("--out", e3_out, "output directory")->capture_default_str();

  // ---- check-bound ----
  auto* cb = app.add_subcommand("check-bound",
                                "Verify the disturbance-residual bound on random models");
  std::uint64_t cb_seed = 0;
  long cb_models = 20;
  long cb_mc = 1000000;
  std::string cb_out = default_out_dir();
  cb->add_option("--seed", cb_seed, "random seed")->capture_default_str();
  cb->add_option("--models", cb_models, "random model instances")->capture_default_str();
  cb->add_option("--mc-samples", cb_mc, "Monte-Carlo samples per sigma")->capture_default_str();
  cb->add_option("--out", cb_out, "output directory")->capture_default_str();

  // ---- check-consistency ----
  auto* cc = app.add_subcommand("check-consistency",
                                "Verify the fitted-curvature error ordering across widths");
  std::uint64_t cc_seed = 0;
  long cc_trials = 20;
  int cc_jobs = default_jobs();
  std::string cc_out = default_out_dir();
  cc->add_option("--seed", cc_seed, "random seed")->capture_default_str();
  cc->add_option("--trials", cc_trials, "fits per width")->capture_default_str();
  cc->add_option("--jobs", cc_jobs, "worker threads")->capture_default_str();
  cc->add_option("--out", cc_out, "output directory")->capture_default_str();

  // ---- check-gradients ----
  auto* cg = app.add_subcommand("check-gradients",
                                "Finite-difference check of every registered gradient");
  std::uint64_t cg_seed = 0;
  long cg_trials = 200;
  cg->add_option("--seed", cg_seed, "random seed")->capture_default_str();
  cg->add_option("--trials", cg_trials, "probe points per objective")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (opt->parsed()) {
      if (opt_preset == "exp2") {
        if (!opt->count("--sigma0")) opt_sigma0 = 10.0;
        if (!opt->count("--gamma")) opt_gamma = 0.5;
        if (!opt->count("--k")) opt_k = 0;  // 3 * dim
        if (!opt->count("--x0-box")) opt_box = 10.0;
      } else if (opt_preset == "exp3") {
        if (!opt->count("--sigma0")) opt_sigma0 = 1.0;
        if (!opt->count("--gamma")) opt_gamma = 10.0 / 11.0;
        if (!opt->count("--k")) opt_k = 3;
        if (!opt->count("--x0-box")) opt_box = 100.0;
      }
      const auto objective = nlqn::objectives::make_objective(opt_func, opt_dim);
      nlqn::optimizer::NlqnConfig cfg;
      cfg.dim = objective.dim;
      cfg.sample_size = opt_k > 0 ? opt_k : 3 * objective.dim;
      cfg.sigma0 = opt_sigma0;
      cfg.shrink = opt_gamma;
      cfg.trust_radius = opt_trust;
      cfg.seed = nlqn::rng::derive_seed(opt_seed, 1);
      cfg.eval_budget = opt_budget;
      if (opt_iters > 0) cfg.max_iterations = opt_iters;
      const auto x0 = draw_box(nlqn::rng::derive_seed(opt_seed, 0), objective.dim, opt_box);
      const auto result = nlqn::optimizer::nlqn_run(objective, x0, cfg);
      auto out = open_out(opt_out, "optimize_trace.csv");
      nlqn::optimizer::write_trace_csv(out, result, cfg.sigma0);
      std::cout << "func=" << objective.name << " dim=" << objective.dim
                << " evals=" << result.evals.total() << " final_f=" << format(result.final_value)
                << " best_f=" << format(result.best_value) << "\n";
      return 0;
    }

    if (e1->parsed()) {
      const auto records = nlqn::experiments::exp1_angles(e1_seed, e1_trials, e1_jobs);
      auto out = open_out(e1_out, "exp1_angles.csv");
      nlqn::experiments::write_exp1_csv(out, records);
      std::cout << "wrote " << records.size() << " angle records\n";
      return 0;
    }

    if (e2->parsed()) {
      const auto runs = nlqn::experiments::exp2_benchmark(e2_seed, e2_runs, e2_budget, e2_jobs);
      auto out = open_out(e2_out, "exp2_traces.csv");
      nlqn::experiments::write_exp2_csv(out, runs);
      for (const std::string algo : {"nlqn", "rbfgs"})
        for (const std::string func : {"levy", "salomon", "rcigar"}) {
          std::vector<double> finals;
          for (const auto& r : runs)
            if (r.algo == algo && r.func == func) finals.push_back(r.trace.back().best_f);
          std::cout << algo << " " << func
                    << " median_best=" << format(nlqn::experiments::median(finals)) << "\n";
        }
      return 0;
    }

    if (e3->parsed()) {
      const auto result = nlqn::experiments::exp3_siam(e3_seed, e3_runs, e3_budget, e3_jobs);
      auto out = open_out(e3_out, "exp3_traces.csv");
      nlqn::experiments::write_exp3_csv(out, result);
      const double fraction =
          static_cast<double>(result.successes) / static_cast<double>(result.runs.size());
      auto summary = open_out(e3_out, "exp3_success.csv");
      summary << "runs,successes,fraction\n"
              << result.runs.size() << "," << result.successes << "," << format(fraction) << "\n";
      std::cout << "successes=" << result.successes << "/" << result.runs.size()
                << " fraction=" << format(fraction) << "\n";
      return 0;
    }

    if (cb->parsed()) {
      std::vector<nlqn::experiments::BoundCheckRecord> all;
      bool mc_ok = true;
      const std::vector<double> sigmas = {0.1, 0.5, 1.0, 2.0, 5.0, 10.0};
      for (long i = 0; i < cb_models; ++i) {
        const auto model = nlqn::experiments::random_rastrigin_model(
            nlqn::rng::derive_seed(cb_seed, 1000 + static_cast<std::uint64_t>(i)));
        const auto records = nlqn::experiments::bound_check(
            model, sigmas, cb_mc, nlqn::rng::derive_seed(cb_seed, static_cast<std::uint64_t>(i)));
        for (const auto& rec : records) {
          if (std::abs(rec.mc - rec.exact) > 5.0 * rec.mc_std_error) {
            mc_ok = false;
            std::cerr << "Monte-Carlo mismatch at sigma=" << format(rec.sigma)
                      << ": mc=" << format(rec.mc) << " exact=" << format(rec.exact)
                      << " se=" << format(rec.mc_std_error) << "\n";
          }
          all.push_back(rec);
        }
      }
      auto out = open_out(cb_out, "bound_check.csv");
      nlqn::experiments::write_bound_csv(out, all);
      std::cout << (mc_ok ? "residual bound and Monte-Carlo agreement hold on "
                          : "violations found over ")
                << cb_models << " models x " << sigmas.size() << " widths\n";
      return mc_ok ? 0 : 1;
    }

    if (cc->parsed()) {
      const auto report = nlqn::experiments::consistency_check(cc_seed, cc_trials, 10, 500,
                                                               {1e-2, 1.0, 1e3}, 10.0, cc_jobs);
      auto out = open_out(cc_out, "consistency.csv");
      out << "sigma,trial,rel_error\n";
      for (std::size_t i = 0; i < report.sigmas.size(); ++i)
        for (std::size_t t = 0; t < report.errors[i].size(); ++t)
          out << format(report.sigmas[i]) << "," << t << "," << format(report.errors[i][t])
              << "\n";
      for (std::size_t i = 0; i < report.sigmas.size(); ++i)
        std::cout << "sigma=" << format(report.sigmas[i])
                  << " median_rel_error=" << format(report.medians[i]) << "\n";
      const bool ordered = report.medians.back() < report.medians.front();
      std::cout << (ordered ? "curvature error decreases from the smallest to the largest width\n"
                            : "ordering violated\n");
      return ordered ? 0 : 1;
    }

    if (cg->parsed()) {
      bool ok = true;
      std::uint64_t unit = 0;
      for (const auto& name : nlqn::objectives::registry_names()) {
        std::vector<Eigen::Index> dims = {0};
        if (name != "siam") dims.push_back(50);
        for (const auto dim : dims) {
          const auto objective = nlqn::objectives::make_objective(name, dim);
          const double box = name == "siam" ? 1.0 : 2.0;
          const auto report = nlqn::objectives::check_gradient(
              objective, static_cast<int>(cg_trials), nlqn::rng::derive_seed(cg_seed, unit++),
              box);
          const bool pass = report.ok(1e-5);
          ok = ok && pass;
          std::cout << (pass ? "ok   " : "FAIL ") << objective.name << " dim=" << objective.dim
                    << " max_rel_error=" << format(report.max_rel_error) << "\n";
        }
      }
      return ok ? 0 : 1;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
