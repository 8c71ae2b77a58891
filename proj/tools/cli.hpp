#pragma once

// Command implementations behind the `tobit` executable. Each command takes
// resolved options and returns its exit code; run() parses argv into them.

#include <Eigen/Dense>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tobit/likelihood.hpp"
#include "tobit/monte_carlo.hpp"
#include "tobit/simulation.hpp"
#include "tobit/trajectory_io.hpp"

namespace tobit::cli {

enum ExitCode : int {
  kOk = 0,
  kNumericalFailure = 1,
  kTooManyAborts = 2,
  kBoundaryOptimum = 3,
  kUsage = 64,
  kDataFormat = 65,
};

inline constexpr const char* kVersion = "1.0.0";

struct OscillatorOptions {
  OscillatorConfig config;
  int iterations = 100;
  unsigned threads = 0;
  std::string out_dir = "out";
};

struct MomentsCheckOptions {
  // Defaults are the published 3-d worked example.
  Eigen::VectorXd mean = Eigen::Vector3d(2, 2, 3);
  Eigen::MatrixXd cov = (Eigen::Matrix3d() << 5, 3, 4, 3, 5, 4, 4, 4, 5).finished();
  Eigen::VectorXd lower = Eigen::Vector3d(-1, -3, 1);
  Eigen::VectorXd upper = Eigen::Vector3d(1, 7, 4);
  double noise_var = 1.0;  ///< R = noise_var * I for the baseline matrix
  long samples = 100000;
  int reps = 100;
  std::uint64_t seed = 0;
  double max_se = 4.0;
};

struct MomentsCheckResult {
  CensoredMoments<double> analytic;
  std::optional<Eigen::MatrixXd> baseline;
  MonteCarloMoments<double> oracle;
  double worst_mean_ratio = 0.0;  ///< max |analytic - oracle| / SE over mean entries
  double worst_cov_ratio = 0.0;   ///< same over covariance entries
  int exit_code = kOk;
};

struct FilterOptions {
  std::string input;
  std::string output;  ///< empty: <out_dir>/filtered_<method>.csv
  std::string out_dir = "out";
  SkeletonMethod method = SkeletonMethod::ATKF;
  SkeletonFilterParams params;
  std::uint64_t seed = 0;
};

struct EstimateQOptions {
  std::string input;
  std::string out_dir = "out";
  LikelihoodVariant variant = LikelihoodVariant::Corrected;
  std::vector<std::string> joints;  ///< empty: all joints, log-likelihoods summed
  std::vector<double> grid;         ///< empty: 25 log-spaced points on [1e-5, 1e-1]
  SkeletonFilterParams params;
  std::uint64_t seed = 0;
};

struct EstimateQResult {
  QProfile profile;
  std::optional<double> q;
  int exit_code = kOk;
};

struct EvaluateOptions {
  std::string test;
  std::string reference;
  std::string out_dir = "out";
  int lag_min = 0;
  int lag_max = 0;
  std::uint64_t seed = 0;
};

int cmd_oscillator(const OscillatorOptions& opt, std::ostream& out, std::ostream& err);
MomentsCheckResult cmd_moments_check(const MomentsCheckOptions& opt, std::ostream& out,
                                     std::ostream& err);
int cmd_filter(const FilterOptions& opt, std::ostream& out, std::ostream& err);
EstimateQResult cmd_estimate_q(const EstimateQOptions& opt, std::ostream& out, std::ostream& err);
int cmd_evaluate(const EvaluateOptions& opt, std::ostream& out, std::ostream& err);

/// Full command line entry point; argv[0] is the program name.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Log-likelihood of one skeleton recording summed over the selected joints,
/// with Q = q I. Frame 0 seeds each joint's belief.
double skeleton_loglik(const SkeletonFrameSet& frames, const std::vector<std::size_t>& joints,
                       const SkeletonFilterParams& params, LikelihoodVariant variant, double q);

}  // namespace tobit::cli
