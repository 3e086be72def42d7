// End-to-end checks of the installed command-line binary: exit codes, CSV
// artifacts, reproducibility, and the environment-variable output root.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string first_line(const std::string& text) {
  return text.substr(0, text.find('\n'));
}

// Scratch root shared by all cases in this binary; removed at exit.
const fs::path& scratch_root() {
  static const fs::path root = [] {
    auto path = fs::temp_directory_path() /
                ("nlqn_cli_" + std::to_string(static_cast<long>(::getpid())));
    fs::create_directories(path);
    return path;
  }();
  return root;
}

struct ScratchCleaner {
  ~ScratchCleaner() {
    std::error_code ec;
    fs::remove_all(scratch_root(), ec);
  }
} cleaner;

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = scratch_root() / name;
  fs::create_directories(dir);
  return dir;
}

RunResult run_cli(const std::string& args, const std::string& env_prefix = "") {
  static long counter = 0;
  const fs::path out_file = scratch_root() / ("stdout_" + std::to_string(counter));
  const fs::path err_file = scratch_root() / ("stderr_" + std::to_string(counter));
  ++counter;

  std::string cmd = env_prefix;
  if (!cmd.empty()) cmd += " ";
  cmd += std::string("'") + NLQN_CLI_PATH + "' " + args + " >'" + out_file.string() + "' 2>'" +
         err_file.string() + "'";

  RunResult result;
  const int status = std::system(cmd.c_str());
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  result.out = slurp(out_file);
  result.err = slurp(err_file);
  return result;
}

}  // namespace

TEST_CASE("a zero-budget run still writes the header and start row") {
  const auto dir = fresh_dir("zero_budget");
  const auto res = run_cli("optimize --func levy --dim 5 --budget 0 --seed 3 --out '" +
                           dir.string() + "'");
  CHECK(res.exit_code == 0);
  CHECK(res.out.find("func=levy dim=5 evals=0") != std::string::npos);

  const std::string trace = slurp(dir / "optimize_trace.csv");
  std::istringstream lines(trace);
  std::string header, row, extra;
  REQUIRE(std::getline(lines, header));
  REQUIRE(std::getline(lines, row));
  CHECK_FALSE(std::getline(lines, extra));
  CHECK(header == "t,f_xt,sigma_t,step_norm,dir_tag,exponent_i,evals,best_f");
  CHECK(row.rfind("0,", 0) == 0);
  CHECK(row.find("init") != std::string::npos);
}

TEST_CASE("identical seeds give byte-identical trace files") {
  const auto dir_a = fresh_dir("repro_a");
  const auto dir_b = fresh_dir("repro_b");
  const std::string args = "optimize --func levy --dim 10 --k 15 --iters 3 --seed 7 --out '";
  const auto a = run_cli(args + dir_a.string() + "'");
  const auto b = run_cli(args + dir_b.string() + "'");
  REQUIRE(a.exit_code == 0);
  REQUIRE(b.exit_code == 0);
  CHECK(a.out == b.out);
  const std::string trace_a = slurp(dir_a / "optimize_trace.csv");
  CHECK(trace_a == slurp(dir_b / "optimize_trace.csv"));
  CHECK(trace_a.find("\n1,") != std::string::npos);  // three real iterations follow row 0
  CHECK(trace_a.find("\n3,") != std::string::npos);

  const auto c = run_cli("optimize --func levy --dim 10 --k 15 --iters 3 --seed 8 --out '" +
                         fresh_dir("repro_c").string() + "'");
  CHECK(c.out != a.out);
}

TEST_CASE("usage errors exit with status two") {
  CHECK(run_cli("optimize --func no-such-objective").exit_code == 2);
  CHECK(run_cli("optimize --func no-such-objective").err.find("levy") != std::string::npos);
  CHECK(run_cli("optimize --dim notanumber").exit_code == 2);
  CHECK(run_cli("optimize --no-such-flag 1").exit_code == 2);
  CHECK(run_cli("").exit_code == 2);  // a subcommand is required
  CHECK(run_cli("no-such-subcommand").exit_code == 2);
  CHECK(run_cli("optimize --func siam --dim 7").exit_code == 2);  // fixed-dimension objective
}

TEST_CASE("help lists every subcommand and exits cleanly") {
  const auto res = run_cli("--help");
  CHECK(res.exit_code == 0);
  for (const char* name : {"optimize", "exp1", "exp2", "exp3", "check-bound",
                           "check-consistency", "check-gradients"})
    CHECK(res.out.find(name) != std::string::npos);
}

TEST_CASE("the angle study command writes its record file") {
  const auto dir = fresh_dir("exp1");
  const auto res = run_cli("exp1 --trials 2 --seed 5 --jobs 2 --out '" + dir.string() + "'");
  CHECK(res.exit_code == 0);
  CHECK(res.out.find("wrote 288 angle records") != std::string::npos);
  const std::string csv = slurp(dir / "exp1_angles.csv");
  CHECK(first_line(csv) == "sigma0,U,trial,estimator,angle_rad");
  CHECK(csv.find(",mean_grad,") != std::string::npos);
}

TEST_CASE("the benchmark command reports a median per solver and function") {
  const auto dir = fresh_dir("exp2");
  const auto res =
      run_cli("exp2 --runs 1 --budget 1000 --seed 2 --jobs 4 --out '" + dir.string() + "'");
  CHECK(res.exit_code == 0);
  CHECK(res.out.find("nlqn levy median_best=") != std::string::npos);
  CHECK(res.out.find("rbfgs rcigar median_best=") != std::string::npos);
  CHECK(first_line(slurp(dir / "exp2_traces.csv")) == "algo,func,run,eval_count,best_f");
}

TEST_CASE("the camel-ridge command writes traces and a success summary") {
  const auto dir = fresh_dir("exp3");
  const auto res =
      run_cli("exp3 --runs 3 --budget 1500 --seed 1 --jobs 2 --out '" + dir.string() + "'");
  CHECK(res.exit_code == 0);
  CHECK(res.out.find("successes=") != std::string::npos);
  CHECK(res.out.find("/3 fraction=") != std::string::npos);
  CHECK(first_line(slurp(dir / "exp3_traces.csv")) == "run,eval_count,best_f,success");

  const std::string summary = slurp(dir / "exp3_success.csv");
  std::istringstream lines(summary);
  std::string header, row;
  REQUIRE(std::getline(lines, header));
  REQUIRE(std::getline(lines, row));
  CHECK(header == "runs,successes,fraction");
  CHECK(row.rfind("3,", 0) == 0);
}

TEST_CASE("the bound check accepts random instances at moderate sample counts") {
  const auto dir = fresh_dir("bound");
  const auto res =
      run_cli("check-bound --models 2 --mc-samples 20000 --seed 0 --out '" + dir.string() + "'");
  CHECK(res.exit_code == 0);
  CHECK(first_line(slurp(dir / "bound_check.csv")) == "sigma,mc,exact,bound");
}

TEST_CASE("the consistency check reports the width-ordered curvature errors") {
  const auto dir = fresh_dir("consistency");
  const auto res =
      run_cli("check-consistency --trials 5 --seed 0 --jobs 4 --out '" + dir.string() + "'");
  CHECK(res.exit_code == 0);
  CHECK(res.out.find("median_rel_error=") != std::string::npos);
  CHECK(first_line(slurp(dir / "consistency.csv")) == "sigma,trial,rel_error");
}

TEST_CASE("the gradient check passes every registered objective") {
  const auto res = run_cli("check-gradients --trials 60 --seed 0");
  CHECK(res.exit_code == 0);
  CHECK(res.out.find("ok   levy") != std::string::npos);
  CHECK(res.out.find("ok   siam") != std::string::npos);
  CHECK(res.out.find("FAIL") == std::string::npos);
}

TEST_CASE("presets reproduce the study configurations") {
  const auto dir = fresh_dir("preset");
  const auto res = run_cli("optimize --func siam --preset exp3 --budget 900 --seed 4 --out '" +
                           dir.string() + "'");
  CHECK(res.exit_code == 0);
  CHECK(res.out.find("func=siam dim=2 evals=900") != std::string::npos);
  CHECK(run_cli("optimize --preset no-such-preset").exit_code == 2);
}

TEST_CASE("the environment variable sets the default output root") {
  const auto dir = fresh_dir("env_root");
  const auto res = run_cli("optimize --func levy --dim 4 --budget 0 --seed 6",
                           "NLQN_OUT_DIR='" + dir.string() + "'");
  CHECK(res.exit_code == 0);
  CHECK(fs::exists(dir / "optimize_trace.csv"));
}
