#pragma once

// Censored-data log-likelihood of a filtered run and scalar process-noise
// estimation (Q = q I) by maximizing it.

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "tobit/filters.hpp"
#include "tobit/trajectory_io.hpp"

namespace tobit {

enum class LikelihoodVariant {
  Corrected,  ///< standardized by the predictive measurement variance s_ii
  Baseline,   ///< standardized by the measurement noise variance r_ii
};

/// Log terms are clamped here so that fully implausible steps stay finite.
inline constexpr double kMinLogTerm = -745.0;

struct LikelihoodReport {
  double loglik = 0.0;
  int n_below = 0;
  int n_inside = 0;
  int n_above = 0;
  Eigen::VectorXd per_step_terms;  ///< summed over components
};

/// One-step-ahead predictive quantities of a single frame.
struct PredictiveTerms {
  Eigen::VectorXd mean;    ///< m_k = H x_k^-
  Eigen::VectorXd s_diag;  ///< diag(H P_k^- H^T + R)
  Eigen::VectorXd r_diag;  ///< diag(R)
};

/// Per-component log density of an observation under the censored normal:
/// log Phi at the lower limit, log(1 - Phi) at the upper limit, the normal
/// log density inside. `scale` is the standard deviation used throughout.
double censored_log_term(double y, double lower, double upper, double mean, double scale);

/// Accumulates the likelihood from precomputed predictive terms. Row k of
/// `observations` pairs with predictive[k] and bounds[k] (or bounds[0] when a
/// single bound set is given).
LikelihoodReport censored_loglik_terms(const std::vector<PredictiveTerms>& predictive,
                                       const Eigen::MatrixXd& observations,
                                       const std::vector<CensorBounds<double>>& bounds,
                                       LikelihoodVariant variant);

/// Runs the variant's own filter (TKF^c for Corrected, baseline TKF for
/// Baseline) over frames [first_frame, end) of the series from `initial` and
/// evaluates the censored likelihood of those frames.
LikelihoodReport censored_loglik(const StateSpaceModel<double>& model,
                                 const TrajectorySeries& series,
                                 const std::vector<CensorBounds<double>>& bounds,
                                 LikelihoodVariant variant, const GaussianBelief<double>& initial,
                                 Eigen::Index first_frame = 0);

struct QProfile {
  std::vector<double> grid;
  std::vector<double> loglik;
  std::size_t best_index = 0;
  bool interior = false;  ///< maximum not at a grid endpoint
};

/// Evaluates f on every grid point (in parallel, reduced in grid order).
QProfile profile_grid(const std::function<double(double)>& f, const std::vector<double>& grid);

/// Golden-section refinement of the profile maximum on its bracketing
/// interval. Throws NoInteriorMaximum when the maximum sits at an endpoint of
/// a grid with more than one point.
double refine_maximum(const std::function<double(double)>& f, const QProfile& profile,
                      double tolerance = 1e-6);

/// Maximizes censored_loglik over Q = q I. The grid must be positive and
/// strictly increasing.
double estimate_q(const StateSpaceModel<double>& model_template, const TrajectorySeries& series,
                  const std::vector<CensorBounds<double>>& bounds, const std::vector<double>& q_grid,
                  LikelihoodVariant variant, const GaussianBelief<double>& initial,
                  Eigen::Index first_frame = 0);

/// Checks that a q grid is non-empty, positive and strictly increasing.
void validate_q_grid(const std::vector<double>& q_grid);

}  // namespace tobit
