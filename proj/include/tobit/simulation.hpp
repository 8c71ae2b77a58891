#pragma once

// Synthetic experiments: the saturated damped oscillator benchmark, RMSE and
// smoothness metrics, and injection of skeleton "collapse" artifacts.

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <optional>
#include <numbers>
#include <string>
#include <vector>

#include "tobit/filters.hpp"
#include "tobit/trajectory_io.hpp"

namespace tobit {

struct OscillatorConfig {
  double c = 0.999;                          ///< damping factor of A
  double w = 0.005 * 2.0 * std::numbers::pi;  ///< rotation per step
  double q_std = 0.05;                       ///< process noise standard deviation
  double v_noise = 0.5;                      ///< measurement noise variance
  double a = -0.5;
  double b = 0.5;
  int steps = 1000;
  Eigen::Vector2d x0 = Eigen::Vector2d(5.0, 0.0);
  Eigen::Matrix2d p0 = Eigen::Matrix2d::Identity();
  std::uint64_t seed = 0;

  void validate() const;
  StateSpaceModel<double> model() const;
  CensorBounds<double> bounds() const;
};

struct OscillatorSample {
  Eigen::MatrixXd truth;     ///< steps x 2, states x_1..x_steps
  Eigen::VectorXd latent;    ///< y*_k
  Eigen::VectorXd censored;  ///< y_k = clamp(y*_k, a, b)
};

/// Draws one trajectory; x_0 = cfg.x0 is deterministic, noise comes from
/// mt19937_64 seeded with cfg.seed.
OscillatorSample simulate_oscillator(const OscillatorConfig& cfg);

struct RunResult {
  OscillatorSample sample;
  std::map<std::string, Eigen::MatrixXd> estimates;  ///< posterior means, steps x 2
  std::map<std::string, Eigen::VectorXd> rmse;       ///< per state coordinate
};

/// Simulates one trajectory and runs the baseline TKF and TKF^c on it.
RunResult run_oscillator(const OscillatorConfig& cfg);

struct BenchmarkTable {
  int iterations = 0;
  int aborted = 0;
  std::map<std::string, Eigen::VectorXd> mean_rmse;  ///< keyed "TKF", "TKFc"
  std::vector<Eigen::Vector2d> rmse_difference;      ///< per iteration TKF - TKF^c
  std::vector<std::uint64_t> seeds;                  ///< seed of each completed iteration

  /// More than 5% of iterations aborted with a filter error.
  bool failed() const { return aborted * 20 > iterations; }
};

/// Seed of iteration i: base_seed + i.
inline std::uint64_t iteration_seed(std::uint64_t base_seed, int iteration) {
  return base_seed + static_cast<std::uint64_t>(iteration);
}

/// Repeats run_oscillator n_iterations times (iterations run in parallel,
/// results reduced in iteration order).
BenchmarkTable run_oscillator_benchmark(const OscillatorConfig& cfg, int n_iterations,
                                        unsigned n_threads = 0);

/// Root mean squared error per column.
Eigen::VectorXd rmse(const Eigen::MatrixXd& estimate, const Eigen::MatrixXd& truth);

/// Mean squared successive difference per column.
Eigen::VectorXd smoothness_metric(const Eigen::MatrixXd& series);

/// Subtracts `magnitude` from one channel for `duration` frames starting at
/// `frame`.
Eigen::MatrixXd inject_collapse(const Eigen::MatrixXd& series, Eigen::Index frame,
                                Eigen::Index channel, double magnitude, Eigen::Index duration);

/// Synthetic 25-joint recording: a subject walking slowly toward the sensor
/// with arm swing, white sensor noise, and whole-skeleton "fall down" frames
/// in the vertical channel.
struct SyntheticSkeletonConfig {
  int frames = 300;
  double frame_rate = 30.0;
  double noise_sd = 0.005;
  double swing_amplitude = 0.08;   ///< meters, limbs only
  double walk_speed = 0.3;         ///< meters per second along depth
  int collapses = 3;
  double collapse_magnitude = 0.3;  ///< meters subtracted from y
  int collapse_duration = 2;        ///< frames
  bool static_pose = false;         ///< no walking or swing, noise and collapses only
  std::uint64_t seed = 0;
};

SkeletonFrameSet synthetic_skeleton(const SyntheticSkeletonConfig& cfg);

/// Overall average M of the per-channel smoothness metric across joints.
double overall_smoothness(const SkeletonFrameSet& frames);

}  // namespace tobit
