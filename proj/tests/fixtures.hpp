#pragma once

// Seeded data generators shared by the tests and the acceptance run.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "oracles.hpp"
#include "tobit/trajectory_io.hpp"

namespace fixture {

using oracle::random_cov;

// Random stable linear-Gaussian model with a simulated trajectory of
// measurements (steps x meas_dim). Measurement noise is independent per
// component, as the Tobit measurement model assumes.
struct RandomModel {
  Eigen::MatrixXd A, H, Q, R;
  Eigen::VectorXd x0;
  Eigen::MatrixXd P0;
  Eigen::MatrixXd ys;
};

inline RandomModel random_model(std::mt19937_64& rng, Eigen::Index n, Eigen::Index m, int steps) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> radius(0.5, 0.99);
  RandomModel out;
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) g(i, j) = normal(rng);
  const double rho = Eigen::EigenSolver<Eigen::MatrixXd>(g).eigenvalues().cwiseAbs().maxCoeff();
  out.A = g * (radius(rng) / std::max(rho, 1e-9));
  out.H.resize(m, n);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < n; ++j) out.H(i, j) = normal(rng);
  out.Q = random_cov(rng, n, 0.01, 0.5);
  std::uniform_real_distribution<double> log_r(std::log(0.05), std::log(1.0));
  out.R = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) out.R(i, i) = std::exp(log_r(rng));
  out.x0.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) out.x0(i) = normal(rng);
  out.P0 = Eigen::MatrixXd::Identity(n, n);

  const Eigen::MatrixXd lq = Eigen::LLT<Eigen::MatrixXd>(out.Q).matrixL();
  const Eigen::MatrixXd lr = Eigen::LLT<Eigen::MatrixXd>(out.R).matrixL();
  const auto draw = [&](Eigen::Index k) {
    Eigen::VectorXd z(k);
    for (Eigen::Index i = 0; i < k; ++i) z(i) = normal(rng);
    return z;
  };
  out.ys.resize(steps, m);
  Eigen::VectorXd x = out.x0;
  for (int k = 0; k < steps; ++k) {
    x = out.A * x + lq * draw(n);
    out.ys.row(k) = (out.H * x + lr * draw(m)).transpose();
  }
  return out;
}

// Three-channel random walk with process noise q I observed with noise
// sd r_sd, clamped into [lower, upper] like a depth sensor's working range.
inline tobit::TrajectorySeries random_walk_series(std::uint64_t seed, int frames, double q, double r_sd,
                                                  const Eigen::Vector3d& start,
                                                  const Eigen::Vector3d& lower,
                                                  const Eigen::Vector3d& upper) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  tobit::TrajectorySeries s;
  s.timestamps.resize(frames);
  s.channels.resize(frames, 3);
  s.channel_names = {"x", "y", "z"};
  Eigen::Vector3d x = start;
  for (int k = 0; k < frames; ++k) {
    if (k > 0)
      for (int i = 0; i < 3; ++i) x(i) += std::sqrt(q) * normal(rng);
    s.timestamps(k) = k / 30.0;
    for (int i = 0; i < 3; ++i)
      s.channels(k, i) = std::clamp(x(i) + r_sd * normal(rng), lower(i), upper(i));
  }
  return s;
}

}  // namespace fixture
