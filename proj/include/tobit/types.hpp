#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>

#include "tobit/errors.hpp"

namespace tobit {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Index = Eigen::Index;

template <typename Scalar>
constexpr Scalar kInf = std::numeric_limits<Scalar>::infinity();

/// Multivariate normal N(mean, cov) of a latent measurement.
template <typename Scalar = double>
struct MvnSpec {
  Vector<Scalar> mean;
  Matrix<Scalar> cov;

  Index dim() const { return mean.size(); }

  void validate() const {
    const Index n = dim();
    if (n < 1) throw InvalidArgument("MvnSpec needs dim >= 1");
    if (cov.rows() != n || cov.cols() != n) throw InvalidArgument("MvnSpec cov shape mismatch");
    const Scalar scale = cov.cwiseAbs().maxCoeff();
    if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > Scalar(1e-12) * scale) {
      throw InvalidArgument("MvnSpec cov is not symmetric");
    }
    if ((cov.diagonal().array() <= Scalar(0)).any()) {
      throw InvalidArgument("MvnSpec cov needs a strictly positive diagonal");
    }
    if (n > 1) {
      Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> eig(cov, Eigen::EigenvaluesOnly);
      if (eig.eigenvalues().minCoeff() < Scalar(-1e-10) * cov.trace()) {
        throw InvalidArgument("MvnSpec cov is not positive semidefinite");
      }
    }
  }
};

/// Per-component censoring interval (lower_i, upper_i); entries may be infinite.
template <typename Scalar = double>
struct CensorBounds {
  Vector<Scalar> lower;
  Vector<Scalar> upper;

  Index dim() const { return lower.size(); }

  static CensorBounds unbounded(Index n) {
    return {Vector<Scalar>::Constant(n, -kInf<Scalar>), Vector<Scalar>::Constant(n, kInf<Scalar>)};
  }
  static CensorBounds uniform(Index n, Scalar lo, Scalar hi) {
    return {Vector<Scalar>::Constant(n, lo), Vector<Scalar>::Constant(n, hi)};
  }

  void validate(Index n) const {
    if (lower.size() != n || upper.size() != n) {
      throw InvalidArgument("CensorBounds dimension mismatch");
    }
    for (Index i = 0; i < n; ++i) {
      if (std::isnan(lower(i)) || std::isnan(upper(i)) || !(lower(i) < upper(i))) {
        throw InvalidArgument("CensorBounds needs lower < upper in every component");
      }
    }
  }
};

/// Per-component probabilities that the latent value falls below, inside or
/// above the censoring interval.
template <typename Scalar = double>
struct RegionProbabilities {
  Vector<Scalar> below;
  Vector<Scalar> inside;
  Vector<Scalar> above;

  static RegionProbabilities all_inside(Index n) {
    return {Vector<Scalar>::Zero(n), Vector<Scalar>::Ones(n), Vector<Scalar>::Zero(n)};
  }
};

template <typename Scalar = double>
struct CensoredMoments {
  Vector<Scalar> mean;
  Matrix<Scalar> cov;
  RegionProbabilities<Scalar> region_probs;
};

}  // namespace tobit
