#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "cli.hpp"
#include "fixtures.hpp"
#include "tobit/simulation.hpp"

namespace fs = std::filesystem;
using namespace tobit;
using tobit::cli::run;

namespace {

// Fresh scratch directory per test case, removed afterwards.
struct Scratch {
  fs::path dir;
  explicit Scratch(const std::string& name) : dir(fs::temp_directory_path() / ("tobit_cli_" + name)) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
  std::string operator/(const std::string& f) const { return (dir / f).string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Outcome {
  int code;
  std::string out, err;
};

Outcome call(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

void write_fixture(const std::string& path, const SkeletonFrameSet& frames) { write_skeleton_csv(path, frames); }

bool starts_with_echo(const std::string& text, const std::string& command) {
  return text.rfind("# tobit " + std::string(cli::kVersion) + " " + command + "\n", 0) == 0 &&
         text.find("# seed = ") != std::string::npos;
}

double overall_m(const std::string& metrics_csv) {
  std::istringstream in(metrics_csv);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("overall_M,", 0) == 0) return std::stod(line.substr(10));
  }
  return -1.0;
}

}  // namespace

TEST_CASE("usage errors exit 64") {
  CHECK(call({}).code == cli::kUsage);
  CHECK(call({"nonsense"}).code == cli::kUsage);
  CHECK(call({"oscillator", "--a", "0.5", "--b", "-0.5"}).code == cli::kUsage);
  CHECK(call({"oscillator", "--iterations", "0"}).code == cli::kUsage);
  CHECK(call({"moments-check", "--dim", "2", "--mean", "0,0"}).code == cli::kUsage);
  CHECK(call({"moments-check", "--dim", "1", "--mean", "0", "--var", "1", "--bounds", "1", "0"}).code ==
        cli::kUsage);
  CHECK(call({"filter", "--input", "/nonexistent/file.csv"}).code == cli::kUsage);

  Scratch s("usage");
  SyntheticSkeletonConfig cfg;
  cfg.frames = 30;
  write_fixture(s / "in.csv", synthetic_skeleton(cfg));
  CHECK(call({"filter", "--input", s / "in.csv", "--method", "sgf", "--window", "4", "--out-dir", s / "o"}).code ==
        cli::kUsage);
  CHECK(call({"filter", "--input", s / "in.csv", "--method", "ukf", "--out-dir", s / "o"}).code == cli::kUsage);
  CHECK(call({"filter", "--input", s / "in.csv", "--c", "0.3,0,0.3", "--out-dir", s / "o"}).code == cli::kUsage);
  CHECK(call({"estimate-q", "--input", s / "in.csv", "--grid", "0.1,0.01", "--out-dir", s / "o"}).code ==
        cli::kUsage);
  CHECK(call({"estimate-q", "--input", s / "in.csv", "--joint", "noggin", "--out-dir", s / "o"}).code == cli::kUsage);
  CHECK(call({"evaluate", "--test", s / "in.csv", "--reference", s / "in.csv", "--lag-min", "3", "--lag-max", "1",
              "--out-dir", s / "o"})
            .code == cli::kUsage);
  CHECK(call({"--help"}).code == cli::kOk);
}

TEST_CASE("malformed data exits 65") {
  Scratch s("data");
  {
    std::ofstream f(s / "bad.csv");
    f << "t,x,y,z\n0,1,2,3\n";
  }
  CHECK(call({"filter", "--input", s / "bad.csv", "--out-dir", s / "o"}).code == cli::kDataFormat);
  {
    std::ofstream f(s / "empty.csv");
  }
  CHECK(call({"filter", "--input", s / "empty.csv", "--out-dir", s / "o"}).code == cli::kDataFormat);

  SyntheticSkeletonConfig cfg;
  cfg.frames = 5;
  auto frames = synthetic_skeleton(cfg);
  write_fixture(s / "good.csv", frames);
  std::string text = slurp(s / "good.csv");
  // Swap two data rows so the timestamps go backwards.
  std::vector<std::string> lines;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  std::swap(lines[2], lines[3]);
  {
    std::ofstream f(s / "backwards.csv");
    for (const auto& l : lines) f << l << '\n';
  }
  CHECK(call({"estimate-q", "--input", s / "backwards.csv", "--out-dir", s / "o"}).code == cli::kDataFormat);
}

TEST_CASE("oscillator writes its tables and reruns identically") {
  Scratch s("osc");
  const auto a = call({"oscillator", "--iterations", "1", "--seed", "7", "--out-dir", s / "a"});
  const auto b = call({"oscillator", "--iterations", "1", "--seed", "7", "--out-dir", s / "b"});
  REQUIRE(a.code == cli::kOk);
  REQUIRE(b.code == cli::kOk);
  const std::string table = slurp(s / "a/table1.csv");
  CHECK(table == slurp(s / "b/table1.csv"));
  CHECK(slurp(s / "a/rmse_diff.csv") == slurp(s / "b/rmse_diff.csv"));
  CHECK(starts_with_echo(table, "oscillator"));
  CHECK(starts_with_echo(slurp(s / "a/rmse_diff.csv"), "oscillator"));
  CHECK(table.find("# seed = 7") != std::string::npos);
  CHECK(table.find("filter,rmse_x1,rmse_x2\n") != std::string::npos);
  CHECK(table.find("\nTKF,") != std::string::npos);
  CHECK(table.find("\nTKFc,") != std::string::npos);

  // Same numbers as the library call.
  OscillatorConfig cfg;
  cfg.seed = 7;
  const auto lib = run_oscillator_benchmark(cfg, 1);
  CHECK(table.find("TKFc," + format_double(lib.mean_rmse.at("TKFc")(0)) + "," +
                   format_double(lib.mean_rmse.at("TKFc")(1))) != std::string::npos);
}

TEST_CASE("moments-check") {
  SUBCASE("open bounds return the input covariance") {
    std::ostringstream out, err;
    cli::MomentsCheckOptions opt;
    opt.mean = Eigen::Vector2d(1.0, -1.0);
    opt.cov = Eigen::Matrix2d{{2.0, 0.5}, {0.5, 1.0}};
    opt.lower = Eigen::Vector2d::Constant(-kInf<double>);
    opt.upper = Eigen::Vector2d::Constant(kInf<double>);
    opt.samples = 10000;
    opt.reps = 4;
    const auto r = cli::cmd_moments_check(opt, out, err);
    CHECK((r.analytic.cov - opt.cov).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((r.analytic.mean - opt.mean).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(r.exit_code == cli::kOk);
  }
  SUBCASE("one-sided scalar") {
    const auto o = call({"moments-check", "--dim", "1", "--mean", "0", "--var", "1", "--bounds", "0", "inf",
                         "--samples", "20000", "--reps", "5"});
    CHECK(o.code == cli::kOk);
    std::ostringstream out, err;
    cli::MomentsCheckOptions opt;
    opt.mean = Eigen::VectorXd::Zero(1);
    opt.cov = Eigen::MatrixXd::Identity(1, 1);
    opt.lower = Eigen::VectorXd::Zero(1);
    opt.upper = Eigen::VectorXd::Constant(1, kInf<double>);
    opt.samples = 20000;
    opt.reps = 5;
    const auto r = cli::cmd_moments_check(opt, out, err);
    CHECK(r.analytic.mean(0) == doctest::Approx(1.0 / std::sqrt(2.0 * std::numbers::pi)).epsilon(1e-14));
  }
  SUBCASE("flags reach the command") {
    const auto o = call({"moments-check", "--samples", "2000", "--reps", "3", "--seed", "11"});
    CHECK(o.code == cli::kOk);
    CHECK(starts_with_echo(o.out, "moments-check"));
    CHECK(o.out.find("# seed = 11") != std::string::npos);
    CHECK(o.out.find("# samples = 2000") != std::string::npos);
  }
}

TEST_CASE("filter: raw is canonical, ATKF smooths more than KF, reruns match") {
  Scratch s("filter");
  SyntheticSkeletonConfig cfg;
  cfg.seed = 4;
  const auto frames = synthetic_skeleton(cfg);
  write_fixture(s / "in.csv", frames);

  REQUIRE(call({"filter", "--input", s / "in.csv", "--method", "raw", "--out-dir", s / "raw"}).code == cli::kOk);
  const auto raw = parse_skeleton_csv(s / "raw/filtered_raw.csv");
  CHECK(raw.frames.stacked() == frames.stacked());
  CHECK(raw.frames.timestamps == frames.timestamps);
  const std::string raw_text = slurp(s / "raw/filtered_raw.csv");
  CHECK(starts_with_echo(raw_text, "filter"));
  CHECK(raw_text.substr(raw_text.find("\nt,") + 1) == slurp(s / "in.csv"));

  REQUIRE(call({"filter", "--input", s / "in.csv", "--method", "kf", "--out-dir", s / "kf"}).code == cli::kOk);
  REQUIRE(call({"filter", "--input", s / "in.csv", "--method", "atkf", "--out-dir", s / "atkf"}).code == cli::kOk);
  const std::string kf_metrics = slurp(s / "kf/metrics.csv"), atkf_metrics = slurp(s / "atkf/metrics.csv");
  CHECK(starts_with_echo(kf_metrics, "filter"));
  CHECK(overall_m(atkf_metrics) > 0.0);
  CHECK(overall_m(atkf_metrics) < overall_m(kf_metrics));

  REQUIRE(call({"filter", "--input", s / "in.csv", "--method", "atkf", "--out-dir", s / "atkf2", "--output",
                s / "atkf2.csv"})
              .code == cli::kOk);
  CHECK(slurp(s / "atkf2.csv") == slurp(s / "atkf/filtered_atkf.csv"));
  CHECK(slurp(s / "atkf2/metrics.csv") == atkf_metrics);

  REQUIRE(call({"filter", "--input", s / "in.csv", "--method", "sgf", "--window", "7", "--order", "2", "--out-dir",
                s / "sgf"})
              .code == cli::kOk);
  CHECK(slurp(s / "sgf/metrics.csv").find("# window = 7") != std::string::npos);
}

TEST_CASE("estimate-q") {
  Scratch s("estq");
  const Eigen::Vector3d lower(-3, -1.5, 0.5), upper(3, 3, 5);
  // Every joint walks independently with q = 0.0025.
  std::vector<TrajectorySeries> joints;
  Eigen::MatrixXd stacked(200, 75);
  for (int j = 0; j < 25; ++j) {
    const auto series = fixture::random_walk_series(100 + j, 200, 0.0025, 0.1, Eigen::Vector3d(0.0, 0.5, 2.5), lower, upper);
    stacked.middleCols(3 * j, 3) = series.channels;
  }
  const Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(200, 0.0, 199.0 / 30.0);
  write_fixture(s / "walk.csv", SkeletonFrameSet::from_stacked(t, stacked));

  const auto single = call({"estimate-q", "--input", s / "walk.csv", "--grid", "0.004", "--out-dir", s / "one"});
  CHECK(single.code == cli::kOk);
  CHECK(single.out.find("q_estimate,0.004\n") != std::string::npos);
  CHECK(starts_with_echo(slurp(s / "one/q_profile.csv"), "estimate-q"));

  const auto full = call({"estimate-q", "--input", s / "walk.csv", "--joint", "head,hand_left", "--out-dir", s / "full"});
  REQUIRE(full.code == cli::kOk);
  const auto pos = full.out.find("q_estimate,");
  REQUIRE(pos != std::string::npos);
  const double q = std::stod(full.out.substr(pos + 11));
  CHECK(q > 0.0025 / 3.0);
  CHECK(q < 0.0025 * 3.0);
  CHECK(full.out.find("# joints = head hand_left") != std::string::npos);

  // A motionless recording pushes the optimum to the smallest q.
  Eigen::MatrixXd still(200, 75);
  for (int j = 0; j < 25; ++j) {
    still.middleCols(3 * j, 3) =
        fixture::random_walk_series(300 + j, 200, 0.0, 0.1, Eigen::Vector3d(0.0, 0.5, 2.5), lower, upper).channels;
  }
  write_fixture(s / "still.csv", SkeletonFrameSet::from_stacked(t, still));
  const auto boundary = call({"estimate-q", "--input", s / "still.csv", "--joint", "head", "--out-dir", s / "still"});
  CHECK(boundary.code == cli::kBoundaryOptimum);
  CHECK(boundary.out.find("q_estimate,boundary:1e-05") != std::string::npos);
}

TEST_CASE("evaluate finds the lag") {
  Scratch s("eval");
  SyntheticSkeletonConfig cfg;
  cfg.seed = 8;
  const auto ref = synthetic_skeleton(cfg);
  const int k = 5;
  const auto test = SkeletonFrameSet::from_stacked(ref.timestamps.head(ref.frames() - k),
                                                   ref.stacked().bottomRows(ref.frames() - k));
  write_fixture(s / "ref.csv", ref);
  write_fixture(s / "test.csv", test);
  const auto o = call({"evaluate", "--test", s / "test.csv", "--reference", s / "ref.csv", "--lag-min", "0",
                       "--lag-max", "10", "--out-dir", s / "o"});
  REQUIRE(o.code == cli::kOk);
  CHECK(o.out.find("best lag 5") != std::string::npos);
  const std::string table = slurp(s / "o/evaluation.csv");
  CHECK(starts_with_echo(table, "evaluate"));
  CHECK(table.find("joint,channel,rmse,lag\n") != std::string::npos);
  CHECK(starts_with_echo(slurp(s / "o/lag_profile.csv"), "evaluate"));
}
