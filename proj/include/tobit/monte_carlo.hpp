#pragma once

// Sampling oracle for censored moments: draw latent N(mean, cov), clamp each
// component into its bounds, and average sample moments over repetitions.
//
// Repetition r draws from std::mt19937_64 seeded with seed_seq{seed, r}, so
// results depend only on (seed, r) and are identical regardless of how
// repetitions are spread over threads.

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <thread>
#include <vector>

#include "tobit/errors.hpp"
#include "tobit/types.hpp"

namespace tobit {

template <typename Scalar = double>
struct MonteCarloMoments {
  CensoredMoments<Scalar> moments;
  /// Standard error of each averaged entry, from the within-sample variance
  /// of the underlying products pooled over all draws.
  Vector<Scalar> mean_se;
  Matrix<Scalar> cov_se;
};

namespace detail {

/// Square-root factor L with L L^T = cov; falls back to an eigen
/// decomposition for semidefinite input.
template <typename Scalar>
Matrix<Scalar> sampling_factor(const Matrix<Scalar>& cov) {
  Eigen::LLT<Matrix<Scalar>> llt(cov);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> eig(cov);
  const Vector<Scalar> root = eig.eigenvalues().cwiseMax(Scalar(0)).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal();
}

struct RepStats {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  Eigen::MatrixXd product_var;  ///< variance of (y_i - m_i)(y_j - m_j) across draws
  Eigen::VectorXd below;
  Eigen::VectorXd above;
};

template <typename Scalar>
RepStats run_repetition(const MvnSpec<Scalar>& spec, const CensorBounds<Scalar>& bounds,
                        const Matrix<Scalar>& factor, std::int64_t n_samples, std::uint64_t seed,
                        std::uint64_t rep) {
  const Index n = spec.dim();
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(rep), static_cast<std::uint32_t>(rep >> 32)};
  std::mt19937_64 engine(seq);
  std::normal_distribution<double> normal(0.0, 1.0);

  const Eigen::MatrixXd l = factor.template cast<double>();
  const Eigen::VectorXd mu = spec.mean.template cast<double>();
  const Eigen::VectorXd lo = bounds.lower.template cast<double>();
  const Eigen::VectorXd hi = bounds.upper.template cast<double>();

  Eigen::VectorXd z(n), y(n);
  Eigen::MatrixXd draws(n, n_samples);
  Eigen::VectorXd below = Eigen::VectorXd::Zero(n), above = Eigen::VectorXd::Zero(n);
  for (std::int64_t s = 0; s < n_samples; ++s) {
    for (Index i = 0; i < n; ++i) z(i) = normal(engine);
    y.noalias() = mu + l * z;
    for (Index i = 0; i < n; ++i) {
      if (y(i) <= lo(i)) {
        y(i) = lo(i);
        below(i) += 1;
      } else if (y(i) >= hi(i)) {
        y(i) = hi(i);
        above(i) += 1;
      }
    }
    draws.col(s) = y - mu;
  }
  const double count = static_cast<double>(n_samples);
  const Eigen::VectorXd mean_d = draws.rowwise().mean();
  draws.colwise() -= mean_d;

  RepStats out;
  out.mean = mu + mean_d;
  out.cov = Eigen::MatrixXd::Zero(n, n);
  out.product_var = Eigen::MatrixXd::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i; j < n; ++j) {
      const Eigen::ArrayXd prod = draws.row(i).array() * draws.row(j).array();
      const double m2 = prod.sum() / count;
      out.cov(i, j) = out.cov(j, i) = n_samples > 1 ? prod.sum() / (count - 1.0) : 0.0;
      out.product_var(i, j) = out.product_var(j, i) = std::max(0.0, prod.square().mean() - m2 * m2);
    }
  }
  out.below = below / count;
  out.above = above / count;
  return out;
}

}  // namespace detail

/// Monte Carlo estimate of censored moments: n_reps repetitions of n_samples
/// clamped draws, averaged.
template <typename Scalar>
MonteCarloMoments<Scalar> mc_censored_oracle(const MvnSpec<Scalar>& spec,
                                             const CensorBounds<Scalar>& bounds,
                                             std::int64_t n_samples, std::int64_t n_reps,
                                             std::uint64_t seed, unsigned n_threads = 0) {
  if (n_samples < 1 || n_reps < 1) throw InvalidArgument("n_samples and n_reps must be >= 1");
  bounds.validate(spec.dim());
  const Index n = spec.dim();
  const Matrix<Scalar> factor = detail::sampling_factor<Scalar>(spec.cov);

  std::vector<detail::RepStats> reps(static_cast<std::size_t>(n_reps));
  if (n_threads == 0) n_threads = std::max(1u, std::thread::hardware_concurrency());
  n_threads = static_cast<unsigned>(std::min<std::int64_t>(n_threads, n_reps));
  {
    std::vector<std::jthread> workers;
    for (unsigned t = 0; t < n_threads; ++t) {
      workers.emplace_back([&, t] {
        for (std::int64_t r = t; r < n_reps; r += n_threads) {
          reps[static_cast<std::size_t>(r)] = detail::run_repetition(
              spec, bounds, factor, n_samples, seed, static_cast<std::uint64_t>(r));
        }
      });
    }
  }

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(n);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(n, n), product_var = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd below = Eigen::VectorXd::Zero(n), above = Eigen::VectorXd::Zero(n);
  for (const auto& r : reps) {
    mean += r.mean;
    cov += r.cov;
    product_var += r.product_var;
    below += r.below;
    above += r.above;
  }
  const double k = static_cast<double>(n_reps);
  mean /= k;
  cov /= k;
  product_var /= k;
  below /= k;
  above /= k;

  const double total = k * static_cast<double>(n_samples);
  const Eigen::VectorXd mean_se = (cov.diagonal().cwiseMax(0.0) / total).cwiseSqrt();
  const Eigen::MatrixXd cov_se = (product_var / total).cwiseSqrt();

  MonteCarloMoments<Scalar> out;
  out.moments.mean = mean.cast<Scalar>();
  out.moments.cov = cov.cast<Scalar>();
  out.moments.region_probs.below = below.cast<Scalar>();
  out.moments.region_probs.above = above.cast<Scalar>();
  out.moments.region_probs.inside = (Eigen::VectorXd::Ones(n) - below - above).cast<Scalar>();
  out.mean_se = mean_se.cast<Scalar>();
  out.cov_se = cov_se.cast<Scalar>();
  return out;
}

}  // namespace tobit
