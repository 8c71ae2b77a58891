#include "tobit/simulation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <thread>

namespace tobit {

void OscillatorConfig::validate() const {
  if (!(a < b)) throw InvalidArgument("oscillator limits need a < b");
  if (steps < 1) throw InvalidArgument("oscillator needs steps >= 1");
  if (q_std < 0.0 || v_noise < 0.0) throw InvalidArgument("noise levels must be nonnegative");
}

StateSpaceModel<double> OscillatorConfig::model() const {
  StateSpaceModel<double> m;
  m.A.resize(2, 2);
  m.A << std::cos(w), -std::sin(w), std::sin(w), std::cos(w);
  m.A *= c;
  m.H.resize(1, 2);
  m.H << 1.0, 0.0;
  m.Q = Eigen::Matrix2d::Identity() * (q_std * q_std);
  m.R = Eigen::MatrixXd::Constant(1, 1, v_noise);
  return m;
}

CensorBounds<double> OscillatorConfig::bounds() const {
  return CensorBounds<double>::uniform(1, a, b);
}

OscillatorSample simulate_oscillator(const OscillatorConfig& cfg) {
  cfg.validate();
  const auto model = cfg.model();
  std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32)};
  std::mt19937_64 engine(seq);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double v_sd = std::sqrt(cfg.v_noise);

  OscillatorSample out;
  out.truth.resize(cfg.steps, 2);
  out.latent.resize(cfg.steps);
  out.censored.resize(cfg.steps);
  Eigen::Vector2d x = cfg.x0;
  for (int k = 0; k < cfg.steps; ++k) {
    const double w0 = normal(engine);
    const double w1 = normal(engine);
    const double v = normal(engine);
    x = model.A * x + cfg.q_std * Eigen::Vector2d(w0, w1);
    out.truth.row(k) = x.transpose();
    out.latent(k) = x(0) + v_sd * v;
    out.censored(k) = std::clamp(out.latent(k), cfg.a, cfg.b);
  }
  return out;
}

RunResult run_oscillator(const OscillatorConfig& cfg) {
  RunResult result;
  result.sample = simulate_oscillator(cfg);
  const auto model = cfg.model();
  const GaussianBelief<double> initial{cfg.x0, cfg.p0};

  const std::pair<const char*, FilterKind> filters[] = {{"TKF", FilterKind::TKF},
                                                        {"TKFc", FilterKind::TKFc}};
  for (const auto& [name, kind] : filters) {
    TobitFilter<double> filter(kind, model, initial, cfg.bounds());
    Eigen::MatrixXd est(cfg.steps, 2);
    for (int k = 0; k < cfg.steps; ++k) {
      const auto report = filter.step(Eigen::VectorXd::Constant(1, result.sample.censored(k)));
      est.row(k) = report.posterior.mean.transpose();
    }
    result.rmse[name] = rmse(est, result.sample.truth);
    result.estimates[name] = std::move(est);
  }
  return result;
}

BenchmarkTable run_oscillator_benchmark(const OscillatorConfig& cfg, int n_iterations,
                                        unsigned n_threads) {
  if (n_iterations < 1) throw InvalidArgument("benchmark needs n_iterations >= 1");
  cfg.validate();

  std::vector<std::optional<RunResult>> runs(static_cast<std::size_t>(n_iterations));
  if (n_threads == 0) n_threads = std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min<unsigned>(n_threads, static_cast<unsigned>(n_iterations));
  {
    std::vector<std::jthread> workers;
    for (unsigned t = 0; t < n_threads; ++t) {
      workers.emplace_back([&, t] {
        for (int i = static_cast<int>(t); i < n_iterations; i += static_cast<int>(n_threads)) {
          OscillatorConfig local = cfg;
          local.seed = iteration_seed(cfg.seed, i);
          try {
            runs[static_cast<std::size_t>(i)] = run_oscillator(local);
          } catch (const Error&) {
            runs[static_cast<std::size_t>(i)].reset();
          }
        }
      });
    }
  }

  BenchmarkTable table;
  table.iterations = n_iterations;
  // Kahan-compensated sums, accumulated in iteration order.
  std::map<std::string, std::pair<Eigen::VectorXd, Eigen::VectorXd>> sums;
  int completed = 0;
  for (int i = 0; i < n_iterations; ++i) {
    const auto& run = runs[static_cast<std::size_t>(i)];
    if (!run) {
      ++table.aborted;
      continue;
    }
    ++completed;
    table.seeds.push_back(iteration_seed(cfg.seed, i));
    table.rmse_difference.emplace_back(run->rmse.at("TKF") - run->rmse.at("TKFc"));
    for (const auto& [name, value] : run->rmse) {
      auto& [sum, comp] = sums[name];
      if (sum.size() == 0) {
        sum = Eigen::VectorXd::Zero(value.size());
        comp = Eigen::VectorXd::Zero(value.size());
      }
      const Eigen::VectorXd y = value - comp;
      const Eigen::VectorXd t = sum + y;
      comp = (t - sum) - y;
      sum = t;
    }
  }
  for (const auto& [name, sc] : sums) table.mean_rmse[name] = sc.first / completed;
  return table;
}

Eigen::VectorXd rmse(const Eigen::MatrixXd& estimate, const Eigen::MatrixXd& truth) {
  if (estimate.rows() != truth.rows() || estimate.cols() != truth.cols() || truth.rows() == 0) {
    throw InvalidArgument("rmse needs equally shaped, non-empty inputs");
  }
  return ((estimate - truth).array().square().colwise().mean()).sqrt().transpose();
}

Eigen::VectorXd smoothness_metric(const Eigen::MatrixXd& series) {
  if (series.rows() < 2) throw InvalidArgument("smoothness metric needs at least two frames");
  const Eigen::Index n = series.rows();
  const Eigen::MatrixXd diff = series.bottomRows(n - 1) - series.topRows(n - 1);
  return diff.array().square().colwise().mean().transpose();
}

Eigen::MatrixXd inject_collapse(const Eigen::MatrixXd& series, Eigen::Index frame,
                                Eigen::Index channel, double magnitude, Eigen::Index duration) {
  if (frame < 0 || duration < 0 || channel < 0 || channel >= series.cols() ||
      frame + duration > series.rows()) {
    throw IndexOutOfRange("collapse window lies outside the series");
  }
  Eigen::MatrixXd out = series;
  out.block(frame, channel, duration, 1).array() -= magnitude;
  return out;
}

}  // namespace tobit

namespace tobit {

namespace {

// Rough standing pose in sensor coordinates (x right, y up, z depth), meters.
const std::array<Eigen::Vector3d, 25> kRestPose = {
    Eigen::Vector3d(0.00, -0.10, 0.0),   Eigen::Vector3d(0.00, 0.20, 0.0),
    Eigen::Vector3d(0.00, 0.50, 0.0),    Eigen::Vector3d(0.00, 0.62, 0.0),
    Eigen::Vector3d(-0.18, 0.42, 0.0),   Eigen::Vector3d(-0.22, 0.15, 0.0),
    Eigen::Vector3d(-0.24, -0.08, 0.0),  Eigen::Vector3d(-0.24, -0.15, 0.0),
    Eigen::Vector3d(0.18, 0.42, 0.0),    Eigen::Vector3d(0.22, 0.15, 0.0),
    Eigen::Vector3d(0.24, -0.08, 0.0),   Eigen::Vector3d(0.24, -0.15, 0.0),
    Eigen::Vector3d(-0.09, -0.15, 0.0),  Eigen::Vector3d(-0.10, -0.55, 0.0),
    Eigen::Vector3d(-0.10, -0.95, 0.0),  Eigen::Vector3d(-0.10, -1.02, -0.08),
    Eigen::Vector3d(0.09, -0.15, 0.0),   Eigen::Vector3d(0.10, -0.55, 0.0),
    Eigen::Vector3d(0.10, -0.95, 0.0),   Eigen::Vector3d(0.10, -1.02, -0.08),
    Eigen::Vector3d(0.00, 0.45, 0.0),    Eigen::Vector3d(-0.24, -0.22, 0.0),
    Eigen::Vector3d(-0.22, -0.14, -0.03), Eigen::Vector3d(0.24, -0.22, 0.0),
    Eigen::Vector3d(0.22, -0.14, -0.03)};

// Joints that swing while walking, with the phase sign of the swing.
double swing_sign(std::size_t joint) {
  switch (joint) {
    case 5: case 6: case 7: case 21: case 22: case 17: case 18: case 19: return 1.0;
    case 9: case 10: case 11: case 23: case 24: case 13: case 14: case 15: return -1.0;
    default: return 0.0;
  }
}

}  // namespace

SkeletonFrameSet synthetic_skeleton(const SyntheticSkeletonConfig& cfg) {
  if (cfg.frames < 2) throw InvalidArgument("synthetic skeleton needs at least two frames");
  if (cfg.collapse_duration < 0 || cfg.collapses < 0) {
    throw InvalidArgument("collapse count and duration must be nonnegative");
  }
  std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32)};
  std::mt19937_64 engine(seq);
  std::normal_distribution<double> normal(0.0, 1.0);

  const Eigen::Index n = cfg.frames;
  const std::size_t joints = kKinectJoints.size();
  Eigen::VectorXd t(n);
  Eigen::MatrixXd stacked(n, static_cast<Eigen::Index>(3 * joints));
  for (Eigen::Index k = 0; k < n; ++k) {
    t(k) = static_cast<double>(k) / cfg.frame_rate;
    const double depth = cfg.static_pose ? 3.0 : 3.5 - cfg.walk_speed * t(k);
    const double swing = cfg.static_pose ? 0.0 : cfg.swing_amplitude * std::sin(2.0 * std::numbers::pi * t(k));
    for (std::size_t j = 0; j < joints; ++j) {
      Eigen::Vector3d p = kRestPose[j];
      p.z() += depth + swing_sign(j) * swing;
      for (Eigen::Index c = 0; c < 3; ++c) {
        stacked(k, static_cast<Eigen::Index>(3 * j) + c) = p(c) + cfg.noise_sd * normal(engine);
      }
    }
  }
  if (cfg.collapses > 0 && cfg.collapse_duration > 0) {
    // Events are spread over the interior so none overlaps another.
    const Eigen::Index span = n / (cfg.collapses + 1);
    std::uniform_int_distribution<Eigen::Index> jitter(0, std::max<Eigen::Index>(0, span / 3));
    for (int e = 0; e < cfg.collapses; ++e) {
      const Eigen::Index frame = std::min<Eigen::Index>(
          (e + 1) * span + jitter(engine), n - cfg.collapse_duration);
      for (std::size_t j = 0; j < joints; ++j) {
        stacked = inject_collapse(stacked, frame, static_cast<Eigen::Index>(3 * j + 1),
                                  cfg.collapse_magnitude, cfg.collapse_duration);
      }
    }
  }
  return SkeletonFrameSet::from_stacked(t, stacked);
}

double overall_smoothness(const SkeletonFrameSet& frames) {
  frames.validate();
  double sum = 0.0;
  Eigen::Index count = 0;
  for (const auto& j : frames.joints) {
    sum += smoothness_metric(j.channels).sum();
    count += j.channels.cols();
  }
  return sum / static_cast<double>(count);
}

}  // namespace tobit
