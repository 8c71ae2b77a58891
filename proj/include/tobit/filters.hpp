#pragma once

// Kalman-type filters for linear Gaussian models observed through a clamp.
//
//   x_{k+1} = A x_k + w_k,   w_k ~ N(0, Q)
//   y*_k    = H x_k + v_k,   v_k ~ N(0, R)
//   y_k,i   = clamp(y*_k,i, a_i, b_i)
//
// All updates share one skeleton: given the censored measurement mean E(y),
// the state/measurement cross covariance R1 and the measurement covariance
// R2, the gain is K = R1 R2^-1, the mean moves by K (y - E(y)) and the
// covariance shrinks by K R1^T. The variants differ in how E(y), R1 and R2
// are formed.

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <optional>
#include <vector>

#include "tobit/censored_moments.hpp"
#include "tobit/errors.hpp"
#include "tobit/types.hpp"

namespace tobit {

template <typename Scalar = double>
struct StateSpaceModel {
  Matrix<Scalar> A;  ///< transition, n x n
  Matrix<Scalar> H;  ///< observation, m x n
  Matrix<Scalar> Q;  ///< process noise covariance, n x n
  Matrix<Scalar> R;  ///< measurement noise covariance, m x m

  Index state_dim() const { return A.rows(); }
  Index meas_dim() const { return H.rows(); }

  void validate() const {
    const Index n = state_dim();
    const Index m = meas_dim();
    if (A.cols() != n || H.cols() != n || Q.rows() != n || Q.cols() != n || R.rows() != m ||
        R.cols() != m) {
      throw InvalidArgument("state space model dimensions are inconsistent");
    }
    auto check_psd = [](const Matrix<Scalar>& M, const char* name) {
      const Scalar scale = std::max(Scalar(1), M.cwiseAbs().maxCoeff());
      if ((M - M.transpose()).cwiseAbs().maxCoeff() > Scalar(1e-10) * scale) {
        throw InvalidArgument(std::string(name) + " is not symmetric");
      }
      Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> eig(M, Eigen::EigenvaluesOnly);
      if (eig.eigenvalues().minCoeff() < Scalar(-1e-10) * scale) {
        throw InvalidArgument(std::string(name) + " is not positive semidefinite");
      }
    };
    check_psd(Q, "Q");
    check_psd(R, "R");
  }
};

template <typename Scalar = double>
struct GaussianBelief {
  Vector<Scalar> mean;
  Matrix<Scalar> cov;
};

enum class CensorFlag { Below, Inside, Above };

template <typename Scalar = double>
struct CensoredObservation {
  Vector<Scalar> y;
  std::vector<CensorFlag> flags;

  /// Clamps a latent measurement into the bounds.
  static CensoredObservation clamp(const Vector<Scalar>& latent, const CensorBounds<Scalar>& bounds) {
    CensoredObservation obs{latent, std::vector<CensorFlag>(static_cast<std::size_t>(latent.size()))};
    for (Index i = 0; i < latent.size(); ++i) {
      auto& flag = obs.flags[static_cast<std::size_t>(i)];
      if (latent(i) <= bounds.lower(i)) {
        obs.y(i) = bounds.lower(i);
        flag = CensorFlag::Below;
      } else if (latent(i) >= bounds.upper(i)) {
        obs.y(i) = bounds.upper(i);
        flag = CensorFlag::Above;
      } else {
        flag = CensorFlag::Inside;
      }
    }
    return obs;
  }
};

template <typename Scalar = double>
struct FilterStepReport {
  GaussianBelief<Scalar> prior;
  GaussianBelief<Scalar> posterior;
  Matrix<Scalar> gain;                 ///< K_k, n x m
  Vector<Scalar> predicted_meas_mean;  ///< E(y_k | y_{k-1})
  Matrix<Scalar> predicted_meas_cov;   ///< R_{k,2}
  Matrix<Scalar> cross_cov;            ///< R_{k,1}
  RegionProbabilities<Scalar> region_probs;
  CensorBounds<Scalar> bounds;  ///< limits the update was evaluated with
  Vector<Scalar> observation;   ///< measurement actually fed to the update
  Scalar jitter = 0;            ///< diagonal loading added before inverting R_{k,2}
};

namespace detail {

template <typename Scalar>
Matrix<Scalar> symmetrized(const Matrix<Scalar>& M) {
  return (M + M.transpose()) / Scalar(2);
}

/// Symmetrizes and clips negative eigenvalues to zero.
template <typename Scalar>
Matrix<Scalar> psd_floor(const Matrix<Scalar>& M) {
  Matrix<Scalar> sym = symmetrized(M);
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> eig(sym);
  if (eig.eigenvalues().minCoeff() >= Scalar(0)) return sym;
  const Vector<Scalar> clipped = eig.eigenvalues().cwiseMax(Scalar(0));
  return symmetrized<Scalar>(eig.eigenvectors() * clipped.asDiagonal() *
                             eig.eigenvectors().transpose());
}

template <typename Scalar>
bool well_conditioned(const Eigen::LLT<Matrix<Scalar>>& llt) {
  return llt.info() == Eigen::Success && llt.rcond() > Scalar(1e-12);
}

/// Cholesky of M with diagonal loading escalated from 1e-12*trace by x10 up
/// to 1e-6*trace. Returns the factor and the loading used.
template <typename Scalar>
std::pair<Eigen::LLT<Matrix<Scalar>>, Scalar> factor_with_jitter(const Matrix<Scalar>& M) {
  Eigen::LLT<Matrix<Scalar>> llt(M);
  if (well_conditioned(llt)) return {llt, Scalar(0)};
  const Scalar trace = std::max(M.trace(), std::numeric_limits<Scalar>::min());
  const Index n = M.rows();
  for (Scalar rel = Scalar(1e-12); rel <= Scalar(1e-6) * Scalar(1.0000001); rel *= Scalar(10)) {
    const Scalar jitter = rel * trace;
    llt.compute(M + jitter * Matrix<Scalar>::Identity(n, n));
    if (well_conditioned(llt)) return {llt, jitter};
  }
  throw SingularCensoredCovariance("R_{k,2} is singular after maximal diagonal loading");
}

template <typename Scalar>
void finish_update(FilterStepReport<Scalar>& report, const Vector<Scalar>& y) {
  report.observation = y;
  if (report.cross_cov.cwiseAbs().maxCoeff() == Scalar(0)) {
    // Every component is certainly censored: the measurement carries no
    // information and R2 may be exactly zero.
    report.gain = Matrix<Scalar>::Zero(report.cross_cov.rows(), report.cross_cov.cols());
  } else {
    auto [llt, jitter] = factor_with_jitter(report.predicted_meas_cov);
    report.jitter = jitter;
    // K = R1 R2^-1  <=>  R2 K^T = R1^T
    report.gain = llt.solve(report.cross_cov.transpose()).transpose();
  }
  report.posterior.mean =
      report.prior.mean + report.gain * (y - report.predicted_meas_mean);
  report.posterior.cov =
      psd_floor<Scalar>(report.prior.cov - report.gain * report.cross_cov.transpose());
}

template <typename Scalar>
void check_update_inputs(const StateSpaceModel<Scalar>& model, const GaussianBelief<Scalar>& prior,
                         const Vector<Scalar>& y) {
  if (prior.mean.size() != model.state_dim() || prior.cov.rows() != model.state_dim() ||
      prior.cov.cols() != model.state_dim()) {
    throw InvalidArgument("belief does not match the model's state dimension");
  }
  if (y.size() != model.meas_dim()) {
    throw InvalidArgument("measurement does not match the model's measurement dimension");
  }
}

}  // namespace detail

template <typename Scalar>
GaussianBelief<Scalar> predict(const StateSpaceModel<Scalar>& model,
                               const GaussianBelief<Scalar>& belief) {
  return {model.A * belief.mean,
          detail::symmetrized<Scalar>(model.A * belief.cov * model.A.transpose() + model.Q)};
}

/// Textbook Kalman update of an already predicted belief.
template <typename Scalar>
FilterStepReport<Scalar> kf_update(const StateSpaceModel<Scalar>& model,
                                   const GaussianBelief<Scalar>& prior, const Vector<Scalar>& y) {
  detail::check_update_inputs(model, prior, y);
  const Index m = model.meas_dim();
  FilterStepReport<Scalar> report;
  report.prior = prior;
  report.predicted_meas_mean = model.H * prior.mean;
  report.predicted_meas_cov =
      detail::symmetrized<Scalar>(model.H * prior.cov * model.H.transpose() + model.R);
  report.cross_cov = prior.cov * model.H.transpose();
  report.region_probs = RegionProbabilities<Scalar>::all_inside(m);
  report.bounds = CensorBounds<Scalar>::unbounded(m);

  Eigen::LLT<Matrix<Scalar>> llt(report.predicted_meas_cov);
  if (!detail::well_conditioned(llt)) {
    throw SingularInnovation("innovation covariance is numerically singular");
  }
  report.gain = llt.solve(report.cross_cov.transpose()).transpose();
  report.observation = y;
  report.posterior.mean = prior.mean + report.gain * (y - report.predicted_meas_mean);
  report.posterior.cov =
      detail::psd_floor<Scalar>(prior.cov - report.gain * report.cross_cov.transpose());
  return report;
}

template <typename Scalar>
FilterStepReport<Scalar> kf_step(const StateSpaceModel<Scalar>& model,
                                 const GaussianBelief<Scalar>& belief, const Vector<Scalar>& y) {
  return kf_update(model, predict(model, belief), y);
}

/// Corrected Tobit update. The latent measurement is N(m, S) with
/// m = H x^-, S = H P^- H^T + R; region probabilities, the censored mean and
/// the exact censored covariance are all evaluated under that law.
template <typename Scalar>
FilterStepReport<Scalar> tkfc_update(const StateSpaceModel<Scalar>& model,
                                     const GaussianBelief<Scalar>& prior,
                                     const CensoredObservation<Scalar>& obs,
                                     const CensorBounds<Scalar>& bounds) {
  detail::check_update_inputs(model, prior, obs.y);
  bounds.validate(model.meas_dim());
  FilterStepReport<Scalar> report;
  report.prior = prior;
  report.bounds = bounds;

  MvnSpec<Scalar> latent{model.H * prior.mean,
                         detail::symmetrized<Scalar>(model.H * prior.cov * model.H.transpose() +
                                                     model.R)};
  const Vector<Scalar> scale = latent.cov.diagonal().cwiseSqrt();
  report.region_probs = region_probabilities_scaled(latent.mean, scale, bounds);
  report.predicted_meas_mean = censored_mean_scaled(latent.mean, scale, bounds);
  report.cross_cov =
      prior.cov * model.H.transpose() * report.region_probs.inside.asDiagonal();
  report.predicted_meas_cov = censored_covariance(latent, bounds);

  detail::finish_update(report, obs.y);
  return report;
}

/// Baseline Tobit update: limits standardized by sqrt(r_ii) and
/// R*_2 = D_un H P^- H^T D_un + diag(truncated variances).
template <typename Scalar>
FilterStepReport<Scalar> tkf_baseline_update(const StateSpaceModel<Scalar>& model,
                                             const GaussianBelief<Scalar>& prior,
                                             const CensoredObservation<Scalar>& obs,
                                             const CensorBounds<Scalar>& bounds) {
  detail::check_update_inputs(model, prior, obs.y);
  bounds.validate(model.meas_dim());
  const Index m = model.meas_dim();
  FilterStepReport<Scalar> report;
  report.prior = prior;
  report.bounds = bounds;

  const Vector<Scalar> mean = model.H * prior.mean;
  const Vector<Scalar> scale = model.R.diagonal().cwiseSqrt();
  report.region_probs = region_probabilities_scaled(mean, scale, bounds);
  report.predicted_meas_mean = censored_mean_scaled(mean, scale, bounds);

  const auto d_un = report.region_probs.inside.asDiagonal();
  report.cross_cov = prior.cov * model.H.transpose() * d_un;

  Vector<Scalar> truncated_var(m);
  for (Index i = 0; i < m; ++i) {
    const Scalar lo = detail::standardize(bounds.lower(i), mean(i), scale(i));
    const Scalar hi = detail::standardize(bounds.upper(i), mean(i), scale(i));
    truncated_var(i) = model.R(i, i) * std_truncated_variance(lo, hi);
  }
  const Matrix<Scalar> hph = model.H * prior.cov * model.H.transpose();
  Matrix<Scalar> r2 = d_un * hph * d_un;
  r2.diagonal() += truncated_var;
  report.predicted_meas_cov = detail::symmetrized<Scalar>(r2);

  detail::finish_update(report, obs.y);
  return report;
}

/// Censoring limits centred on the previous estimate: H x_{k-1} -+ c.
template <typename Scalar>
CensorBounds<Scalar> adaptive_bounds(const StateSpaceModel<Scalar>& model,
                                     const GaussianBelief<Scalar>& belief, const Vector<Scalar>& c) {
  const Vector<Scalar> centre = model.H * belief.mean;
  CensorBounds<Scalar> bounds{centre - c, centre + c};
  // Pull each limit in by an ulp where rounding left it more than c away, so
  // a clamped observation is never further than c from the centre.
  for (Index i = 0; i < centre.size(); ++i) {
    while (centre(i) - bounds.lower(i) > c(i)) bounds.lower(i) = std::nextafter(bounds.lower(i), centre(i));
    while (bounds.upper(i) - centre(i) > c(i)) bounds.upper(i) = std::nextafter(bounds.upper(i), centre(i));
  }
  return bounds;
}

/// Adaptive Tobit step: limits follow the previous posterior, the raw
/// measurement is clamped into them, then a corrected Tobit update runs.
template <typename Scalar>
FilterStepReport<Scalar> atkf_step(const StateSpaceModel<Scalar>& model,
                                   const GaussianBelief<Scalar>& belief,
                                   const Vector<Scalar>& y_raw, const Vector<Scalar>& c) {
  if (c.size() != model.meas_dim() || (c.array() <= Scalar(0)).any()) {
    throw InvalidArgument("ATKF offsets c must be strictly positive, one per measurement");
  }
  const CensorBounds<Scalar> bounds = adaptive_bounds(model, belief, c);
  const auto obs = CensoredObservation<Scalar>::clamp(y_raw, bounds);
  return tkfc_update(model, predict(model, belief), obs, bounds);
}

enum class FilterKind { KF, TKF, TKFc, ATKF };

/// One stream of filtering with a fixed model; call step() once per frame.
template <typename Scalar = double>
class TobitFilter {
 public:
  TobitFilter(FilterKind kind, StateSpaceModel<Scalar> model, GaussianBelief<Scalar> initial,
              std::optional<CensorBounds<Scalar>> bounds = std::nullopt,
              Vector<Scalar> offsets = {})
      : kind_(kind),
        model_(std::move(model)),
        belief_(std::move(initial)),
        bounds_(bounds ? std::move(*bounds) : CensorBounds<Scalar>::unbounded(model_.meas_dim())),
        offsets_(std::move(offsets)) {
    model_.validate();
    bounds_.validate(model_.meas_dim());
    if (kind_ == FilterKind::ATKF && offsets_.size() != model_.meas_dim()) {
      throw InvalidArgument("ATKF needs one offset per measurement component");
    }
  }

  /// Advances by one frame. For the fixed-limit Tobit filters the
  /// measurement is clamped into the configured bounds first.
  FilterStepReport<Scalar> step(const Vector<Scalar>& y) {
    FilterStepReport<Scalar> report;
    switch (kind_) {
      case FilterKind::KF:
        report = kf_step(model_, belief_, y);
        break;
      case FilterKind::TKF:
        report = tkf_baseline_update(model_, predict(model_, belief_),
                                     CensoredObservation<Scalar>::clamp(y, bounds_), bounds_);
        break;
      case FilterKind::TKFc:
        report = tkfc_update(model_, predict(model_, belief_),
                             CensoredObservation<Scalar>::clamp(y, bounds_), bounds_);
        break;
      case FilterKind::ATKF:
        report = atkf_step(model_, belief_, y, offsets_);
        break;
    }
    belief_ = report.posterior;
    return report;
  }

  const GaussianBelief<Scalar>& belief() const { return belief_; }
  const StateSpaceModel<Scalar>& model() const { return model_; }
  FilterKind kind() const { return kind_; }

 private:
  FilterKind kind_;
  StateSpaceModel<Scalar> model_;
  GaussianBelief<Scalar> belief_;
  CensorBounds<Scalar> bounds_;
  Vector<Scalar> offsets_;
};

}  // namespace tobit
