#include "tobit/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <thread>

namespace tobit {

double censored_log_term(double y, double lower, double upper, double mean, double scale) {
  if (!(scale > 0.0)) throw InvalidArgument("likelihood scale must be positive");
  double term = 0.0;
  if (y <= lower) {
    term = log_std_cdf((lower - mean) / scale);
  } else if (y >= upper) {
    term = log_std_cdf(-(upper - mean) / scale);
  } else {
    const double z = (y - mean) / scale;
    term = -0.5 * z * z - std::log(scale) - 0.5 * std::log(2.0 * std::numbers::pi);
  }
  return std::max(term, kMinLogTerm);
}

LikelihoodReport censored_loglik_terms(const std::vector<PredictiveTerms>& predictive,
                                       const Eigen::MatrixXd& observations,
                                       const std::vector<CensorBounds<double>>& bounds,
                                       LikelihoodVariant variant) {
  const auto steps = static_cast<Eigen::Index>(predictive.size());
  if (observations.rows() != steps) throw InvalidArgument("one predictive term per observation");
  if (bounds.size() != 1 && bounds.size() != predictive.size()) {
    throw InvalidArgument("bounds need one entry or one per step");
  }
  LikelihoodReport report;
  report.per_step_terms = Eigen::VectorXd::Zero(steps);
  for (Eigen::Index k = 0; k < steps; ++k) {
    const auto& p = predictive[static_cast<std::size_t>(k)];
    const auto& bk = bounds.size() == 1 ? bounds.front() : bounds[static_cast<std::size_t>(k)];
    const Eigen::VectorXd& var = variant == LikelihoodVariant::Corrected ? p.s_diag : p.r_diag;
    for (Eigen::Index i = 0; i < observations.cols(); ++i) {
      const double y = observations(k, i);
      if (y <= bk.lower(i)) {
        ++report.n_below;
      } else if (y >= bk.upper(i)) {
        ++report.n_above;
      } else {
        ++report.n_inside;
      }
      report.per_step_terms(k) +=
          censored_log_term(y, bk.lower(i), bk.upper(i), p.mean(i), std::sqrt(var(i)));
    }
  }
  report.loglik = report.per_step_terms.sum();
  return report;
}

LikelihoodReport censored_loglik(const StateSpaceModel<double>& model,
                                 const TrajectorySeries& series,
                                 const std::vector<CensorBounds<double>>& bounds,
                                 LikelihoodVariant variant, const GaussianBelief<double>& initial,
                                 Eigen::Index first_frame) {
  model.validate();
  const Eigen::Index m = model.meas_dim();
  if (series.channels.cols() != m) throw InvalidArgument("series channels must match H rows");
  if (first_frame < 0 || series.frames() - first_frame < 2) {
    throw InvalidArgument("likelihood needs at least two frames");
  }
  const Eigen::Index steps = series.frames() - first_frame;
  if (bounds.size() != 1 && bounds.size() != static_cast<std::size_t>(steps)) {
    throw InvalidArgument("bounds need one entry or one per evaluated frame");
  }
  for (const auto& b : bounds) b.validate(m);

  std::vector<PredictiveTerms> predictive;
  predictive.reserve(static_cast<std::size_t>(steps));
  Eigen::MatrixXd observations(steps, m);
  GaussianBelief<double> belief = initial;
  const Eigen::VectorXd r_diag = model.R.diagonal();
  for (Eigen::Index k = 0; k < steps; ++k) {
    const auto& bk = bounds.size() == 1 ? bounds.front() : bounds[static_cast<std::size_t>(k)];
    const auto prior = predict(model, belief);
    const Eigen::MatrixXd S = model.H * prior.cov * model.H.transpose() + model.R;
    predictive.push_back({model.H * prior.mean, S.diagonal(), r_diag});
    const auto obs = CensoredObservation<double>::clamp(
        series.channels.row(first_frame + k).transpose(), bk);
    observations.row(k) = obs.y.transpose();
    const auto report = variant == LikelihoodVariant::Corrected
                            ? tkfc_update(model, prior, obs, bk)
                            : tkf_baseline_update(model, prior, obs, bk);
    belief = report.posterior;
  }
  return censored_loglik_terms(predictive, observations, bounds, variant);
}

QProfile profile_grid(const std::function<double(double)>& f, const std::vector<double>& grid) {
  validate_q_grid(grid);
  QProfile profile;
  profile.grid = grid;
  profile.loglik.assign(grid.size(), 0.0);
  std::vector<std::exception_ptr> errors(grid.size());
  {
    const unsigned threads = std::min<unsigned>(std::max(1u, std::thread::hardware_concurrency()),
                                                static_cast<unsigned>(grid.size()));
    std::vector<std::jthread> workers;
    for (unsigned t = 0; t < threads; ++t) {
      workers.emplace_back([&, t] {
        for (std::size_t g = t; g < grid.size(); g += threads) {
          try {
            profile.loglik[g] = f(grid[g]);
          } catch (...) {
            errors[g] = std::current_exception();
          }
        }
      });
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  profile.best_index = static_cast<std::size_t>(
      std::max_element(profile.loglik.begin(), profile.loglik.end()) - profile.loglik.begin());
  profile.interior = profile.best_index > 0 && profile.best_index + 1 < grid.size();
  return profile;
}

double refine_maximum(const std::function<double(double)>& f, const QProfile& profile,
                      double tolerance) {
  const auto& g = profile.grid;
  if (g.size() == 1) return g.front();
  if (!profile.interior) {
    throw NoInteriorMaximum("maximum at grid endpoint q = " + format_double(g[profile.best_index]) +
                            "; widen the grid");
  }
  double lo = g[profile.best_index - 1];
  double hi = g[profile.best_index + 1];
  const double inv_phi = 1.0 / std::numbers::phi;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = f(x1);
  double f2 = f(x2);
  while (hi - lo > tolerance) {
    if (f1 >= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = f(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = f(x2);
    }
  }
  const double mid = 0.5 * (lo + hi);
  // Never return something worse than the best grid point.
  return f(mid) >= profile.loglik[profile.best_index] ? mid : g[profile.best_index];
}

double estimate_q(const StateSpaceModel<double>& model_template, const TrajectorySeries& series,
                  const std::vector<CensorBounds<double>>& bounds, const std::vector<double>& q_grid,
                  LikelihoodVariant variant, const GaussianBelief<double>& initial,
                  Eigen::Index first_frame) {
  const auto f = [&](double q) {
    StateSpaceModel<double> model = model_template;
    model.Q = Eigen::MatrixXd::Identity(model.state_dim(), model.state_dim()) * q;
    return censored_loglik(model, series, bounds, variant, initial, first_frame).loglik;
  };
  const QProfile profile = profile_grid(f, q_grid);
  return refine_maximum(f, profile);
}

void validate_q_grid(const std::vector<double>& q_grid) {
  if (q_grid.empty()) throw InvalidArgument("q grid is empty");
  for (std::size_t i = 0; i < q_grid.size(); ++i) {
    if (!(q_grid[i] > 0.0)) throw InvalidArgument("q grid entries must be positive");
    if (i > 0 && !(q_grid[i] > q_grid[i - 1])) {
      throw InvalidArgument("q grid must be strictly increasing");
    }
  }
}

}  // namespace tobit
