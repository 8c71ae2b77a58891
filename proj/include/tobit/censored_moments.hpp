#pragma once

// Moments of interval-censored (clamped) multivariate normal measurements.
//
// A latent y* ~ N(mu, Sigma) is observed as y_i = clamp(y*_i, a_i, b_i).
// Component means and variances depend only on the component's own limits;
// cross moments depend only on the pair's limits, so everything reduces to
// univariate and bivariate normal quantities.

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <utility>

#include "tobit/errors.hpp"
#include "tobit/gauss.hpp"
#include "tobit/types.hpp"

namespace tobit {

/// Probability below which a conditioning region is treated as empty.
template <typename Scalar = double>
inline constexpr Scalar kMinRegionProb = Scalar(1e-12);

namespace detail {

// limit * prob with the convention inf * 0 == 0.
template <typename Scalar>
Scalar limit_times(Scalar limit, Scalar prob) {
  return prob == Scalar(0) ? Scalar(0) : limit * prob;
}

// x * phi(x), zero at +-inf.
template <typename Scalar>
Scalar x_pdf(Scalar x) {
  return std::isinf(x) ? Scalar(0) : x * std_pdf(x);
}

template <typename Scalar>
Scalar standardize(Scalar limit, Scalar mean, Scalar scale) {
  if (std::isinf(limit)) return limit;
  return (limit - mean) / scale;
}

}  // namespace detail

/// Region probabilities with limits standardized by an explicit per-component
/// scale (the square root of whichever variance the caller considers).
template <typename Scalar>
RegionProbabilities<Scalar> region_probabilities_scaled(const Vector<Scalar>& mean,
                                                        const Vector<Scalar>& scale,
                                                        const CensorBounds<Scalar>& bounds) {
  const Index n = mean.size();
  RegionProbabilities<Scalar> out{Vector<Scalar>(n), Vector<Scalar>(n), Vector<Scalar>(n)};
  for (Index i = 0; i < n; ++i) {
    const Scalar lo = detail::standardize(bounds.lower(i), mean(i), scale(i));
    const Scalar hi = detail::standardize(bounds.upper(i), mean(i), scale(i));
    out.below(i) = std_cdf(lo);
    out.above(i) = std_sf(hi);
    // Not 1 - below - above: that cancels when the latent law sits deep in
    // a censored tail.
    out.inside(i) = std_interval_prob(lo, hi);
  }
  return out;
}

template <typename Scalar>
RegionProbabilities<Scalar> region_probabilities(const MvnSpec<Scalar>& spec,
                                                 const CensorBounds<Scalar>& bounds) {
  bounds.validate(spec.dim());
  return region_probabilities_scaled<Scalar>(spec.mean, spec.cov.diagonal().cwiseSqrt(), bounds);
}

/// Conditional moments of a bivariate normal restricted to a rectangle.
template <typename Scalar = double>
struct TruncatedMoments2 {
  Scalar prob = 0;
  Eigen::Matrix<Scalar, 2, 1> mean;
  Eigen::Matrix<Scalar, 2, 2> second;
};

/// Truncated first and second moments of a bivariate normal over the
/// rectangle given by `bounds`. Pairs with |rho| >= 1 - 1e-9 are regularized
/// to that bound.
template <typename Scalar>
TruncatedMoments2<Scalar> truncated_moments(const MvnSpec<Scalar>& spec,
                                            const CensorBounds<Scalar>& bounds) {
  if (spec.dim() != 2) throw InvalidArgument("truncated moments are bivariate");
  bounds.validate(2);
  using Vec2 = Eigen::Matrix<Scalar, 2, 1>;
  using Mat2 = Eigen::Matrix<Scalar, 2, 2>;

  const Vec2 sd = spec.cov.diagonal().cwiseSqrt();
  const Scalar rho = clamp_correlation(spec.cov(0, 1) / (sd(0) * sd(1)));
  Mat2 sigma;
  sigma << sd(0) * sd(0), rho * sd(0) * sd(1), rho * sd(0) * sd(1), sd(1) * sd(1);

  // Work in coordinates centred on the mean.
  Vec2 lo, hi;
  for (int i = 0; i < 2; ++i) {
    lo(i) = std::isinf(bounds.lower(i)) ? bounds.lower(i) : bounds.lower(i) - spec.mean(i);
    hi(i) = std::isinf(bounds.upper(i)) ? bounds.upper(i) : bounds.upper(i) - spec.mean(i);
  }

  TruncatedMoments2<Scalar> out;
  out.prob = bivariate_rect_prob(StdInterval<Scalar>(lo(0) / sd(0), hi(0) / sd(0)),
                                 StdInterval<Scalar>(lo(1) / sd(1), hi(1) / sd(1)), rho);
  if (!(out.prob >= kMinRegionProb<Scalar>)) {
    throw DegenerateRegion("truncation region probability below 1e-12");
  }
  const Scalar prob = out.prob;

  // Marginal density of component k at x times the conditional probability
  // that the other component lies in its interval, normalized by prob.
  auto f1 = [&](int k, Scalar x) -> Scalar {
    if (std::isinf(x)) return Scalar(0);
    const int q = 1 - k;
    const Scalar cond_mean = sigma(q, k) / sigma(k, k) * x;
    const Scalar cond_sd = sd(q) * std::sqrt((Scalar(1) - rho) * (Scalar(1) + rho));
    const Scalar p = std_interval_prob(detail::standardize(lo(q), cond_mean, cond_sd),
                                       detail::standardize(hi(q), cond_mean, cond_sd));
    return std_pdf(x / sd(k)) / sd(k) * p / prob;
  };
  // Joint density at (x_k, x_q), normalized by prob.
  auto f2 = [&](int k, Scalar x, Scalar y) -> Scalar {
    const int q = 1 - k;
    return bivariate_pdf(x / sd(k), y / sd(q), rho) / (sd(k) * sd(q)) / prob;
  };
  auto x_f1 = [&](int k, Scalar x) -> Scalar { return std::isinf(x) ? Scalar(0) : x * f1(k, x); };

  Vec2 f_lo, f_hi, xf_lo, xf_hi;
  for (int k = 0; k < 2; ++k) {
    f_lo(k) = f1(k, lo(k));
    f_hi(k) = f1(k, hi(k));
    xf_lo(k) = x_f1(k, lo(k));
    xf_hi(k) = x_f1(k, hi(k));
  }
  Mat2 f_box;  // f_box(k, q) = [F(lo_k,lo_q) - F(lo_k,hi_q)] - [F(hi_k,lo_q) - F(hi_k,hi_q)]
  for (int k = 0; k < 2; ++k) {
    const int q = 1 - k;
    f_box(k, q) = (f2(k, lo(k), lo(q)) - f2(k, lo(k), hi(q))) -
                  (f2(k, hi(k), lo(q)) - f2(k, hi(k), hi(q)));
    f_box(k, k) = 0;
  }

  const Vec2 centred_mean = sigma * (f_lo - f_hi);
  Mat2 centred_second;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      Scalar acc = sigma(i, j);
      for (int k = 0; k < 2; ++k) {
        acc += sigma(i, k) * sigma(j, k) * (xf_lo(k) - xf_hi(k)) / sigma(k, k);
        const int q = 1 - k;
        acc += sigma(i, k) * (sigma(j, q) - sigma(k, q) * sigma(j, k) / sigma(k, k)) * f_box(k, q);
      }
      centred_second(i, j) = acc;
    }
  }

  const Vec2 mu = spec.mean.template head<2>();
  out.mean = mu + centred_mean;
  out.second = centred_second + mu * centred_mean.transpose() + centred_mean * mu.transpose() +
               mu * mu.transpose();
  return out;
}

template <typename Scalar>
Vector<Scalar> truncated_mean(const MvnSpec<Scalar>& spec, const CensorBounds<Scalar>& bounds) {
  return truncated_moments(spec, bounds).mean;
}

template <typename Scalar>
Matrix<Scalar> truncated_second_moment(const MvnSpec<Scalar>& spec,
                                       const CensorBounds<Scalar>& bounds) {
  return truncated_moments(spec, bounds).second;
}

/// Censored mean of each component, with limits standardized by `scale`:
///   mean_i * P_un + scale_i * (phi(alpha_i) - phi(beta_i)) + a_i * P_a + b_i * P_b.
/// With scale = sqrt(diag(Sigma)) this is the exact censored mean.
template <typename Scalar>
Vector<Scalar> censored_mean_scaled(const Vector<Scalar>& mean, const Vector<Scalar>& scale,
                                    const CensorBounds<Scalar>& bounds) {
  const Index n = mean.size();
  const auto probs = region_probabilities_scaled(mean, scale, bounds);
  Vector<Scalar> out(n);
  for (Index i = 0; i < n; ++i) {
    const Scalar lo = detail::standardize(bounds.lower(i), mean(i), scale(i));
    const Scalar hi = detail::standardize(bounds.upper(i), mean(i), scale(i));
    out(i) = mean(i) * probs.inside(i) + scale(i) * (std_pdf(lo) - std_pdf(hi)) +
             detail::limit_times(bounds.lower(i), probs.below(i)) +
             detail::limit_times(bounds.upper(i), probs.above(i));
  }
  return out;
}

template <typename Scalar>
Vector<Scalar> censored_mean(const MvnSpec<Scalar>& spec, const CensorBounds<Scalar>& bounds) {
  spec.validate();
  bounds.validate(spec.dim());
  return censored_mean_scaled<Scalar>(spec.mean, spec.cov.diagonal().cwiseSqrt(), bounds);
}

/// Variance of clamp(Y, a, b) for scalar Y ~ N(mu, var).
template <typename Scalar>
Scalar censored_variance(Scalar mu, Scalar var, Scalar a, Scalar b) {
  // The expression is shift invariant; evaluate it centred on mu so the
  // mu^2 terms do not cancel catastrophically.
  const Scalar sd = std::sqrt(var);
  const Scalar lo = detail::standardize(a, mu, sd);
  const Scalar hi = detail::standardize(b, mu, sd);
  const Scalar ca = std::isinf(a) ? a : a - mu;
  const Scalar cb = std::isinf(b) ? b : b - mu;
  const Scalar p_a = std_cdf(lo);
  const Scalar p_b = std_sf(hi);
  const Scalar p_un = std_interval_prob(lo, hi);
  // var * (f(a) - f(b)) with f the N(mu, var) density.
  const Scalar g = sd * (std_pdf(lo) - std_pdf(hi));
  const Scalar tail_mean = detail::limit_times(ca, p_a) + detail::limit_times(cb, p_b);

  Scalar v = var * p_un;
  // 1 - P_a and 1 - P_b written as sums of the other two regions.
  v += detail::limit_times(ca * ca, (p_un + p_b) * p_a);
  v += detail::limit_times(cb * cb, (p_a + p_un) * p_b);
  if (p_a > 0 && p_b > 0) v -= Scalar(2) * ca * cb * p_a * p_b;
  v -= g * g;
  v += var * (detail::x_pdf(lo) - detail::x_pdf(hi));
  v -= Scalar(2) * g * tail_mean;
  return std::max(v, Scalar(0));
}

/// Covariance of clamp(y*_i) and clamp(y*_j) for i != j, by summing over the
/// 3x3 partition of the (i, j) plane into below/inside/above cells.
template <typename Scalar>
Scalar censored_cross_covariance(const MvnSpec<Scalar>& spec, const CensorBounds<Scalar>& bounds,
                                 Index i, Index j) {
  const Scalar sd_i = std::sqrt(spec.cov(i, i));
  const Scalar sd_j = std::sqrt(spec.cov(j, j));
  const Scalar rho = clamp_correlation(spec.cov(i, j) / (sd_i * sd_j));

  // Centred coordinates; covariance is shift invariant.
  auto centre = [](Scalar limit, Scalar mu) { return std::isinf(limit) ? limit : limit - mu; };
  const Scalar a_i = centre(bounds.lower(i), spec.mean(i));
  const Scalar b_i = centre(bounds.upper(i), spec.mean(i));
  const Scalar a_j = centre(bounds.lower(j), spec.mean(j));
  const Scalar b_j = centre(bounds.upper(j), spec.mean(j));

  MvnSpec<Scalar> pair;
  pair.mean = Vector<Scalar>::Zero(2);
  pair.cov.resize(2, 2);
  pair.cov << sd_i * sd_i, rho * sd_i * sd_j, rho * sd_i * sd_j, sd_j * sd_j;

  const Scalar inf = kInf<Scalar>;
  // Cell intervals in centred units: 0 below, 1 inside, 2 above.
  const std::array<std::pair<Scalar, Scalar>, 3> cells_i = {
      {{-inf, a_i}, {a_i, b_i}, {b_i, inf}}};
  const std::array<std::pair<Scalar, Scalar>, 3> cells_j = {
      {{-inf, a_j}, {a_j, b_j}, {b_j, inf}}};
  // Observed (clamped) value of each component in the tail cells.
  const std::array<Scalar, 3> clamp_i = {a_i, Scalar(0), b_i};
  const std::array<Scalar, 3> clamp_j = {a_j, Scalar(0), b_j};

  Scalar cross = 0;
  for (int ci = 0; ci < 3; ++ci) {
    for (int cj = 0; cj < 3; ++cj) {
      const auto [lo_i, hi_i] = cells_i[static_cast<std::size_t>(ci)];
      const auto [lo_j, hi_j] = cells_j[static_cast<std::size_t>(cj)];
      // Empty cells arise from infinite limits.
      if (!(lo_i < hi_i) || !(lo_j < hi_j)) continue;
      const Scalar p = bivariate_rect_prob(StdInterval<Scalar>(lo_i / sd_i, hi_i / sd_i),
                                           StdInterval<Scalar>(lo_j / sd_j, hi_j / sd_j), rho);
      if (!(p >= kMinRegionProb<Scalar>)) continue;
      if (ci != 1 && cj != 1) {
        cross += clamp_i[static_cast<std::size_t>(ci)] * clamp_j[static_cast<std::size_t>(cj)] * p;
        continue;
      }
      CensorBounds<Scalar> cell{Vector<Scalar>(2), Vector<Scalar>(2)};
      cell.lower << lo_i, lo_j;
      cell.upper << hi_i, hi_j;
      const auto tm = truncated_moments(pair, cell);
      if (ci == 1 && cj == 1) {
        cross += tm.second(0, 1) * tm.prob;
      } else if (ci == 1) {
        cross += clamp_j[static_cast<std::size_t>(cj)] * tm.mean(0) * tm.prob;
      } else {
        cross += clamp_i[static_cast<std::size_t>(ci)] * tm.mean(1) * tm.prob;
      }
    }
  }

  Vector<Scalar> centred_mean(2);
  Vector<Scalar> scale(2);
  scale << sd_i, sd_j;
  CensorBounds<Scalar> pair_bounds{Vector<Scalar>(2), Vector<Scalar>(2)};
  pair_bounds.lower << a_i, a_j;
  pair_bounds.upper << b_i, b_j;
  centred_mean = censored_mean_scaled<Scalar>(Vector<Scalar>::Zero(2), scale, pair_bounds);
  return cross - centred_mean(0) * centred_mean(1);
}

template <typename Scalar>
Matrix<Scalar> censored_covariance(const MvnSpec<Scalar>& spec, const CensorBounds<Scalar>& bounds) {
  spec.validate();
  bounds.validate(spec.dim());
  const Index n = spec.dim();
  Matrix<Scalar> cov(n, n);
  for (Index i = 0; i < n; ++i) {
    cov(i, i) = censored_variance(spec.mean(i), spec.cov(i, i), bounds.lower(i), bounds.upper(i));
    for (Index j = 0; j < i; ++j) {
      cov(i, j) = cov(j, i) = censored_cross_covariance(spec, bounds, i, j);
    }
  }
  return cov;
}

template <typename Scalar>
CensoredMoments<Scalar> censored_moments(const MvnSpec<Scalar>& spec,
                                         const CensorBounds<Scalar>& bounds) {
  return {censored_mean(spec, bounds), censored_covariance(spec, bounds),
          region_probabilities(spec, bounds)};
}

/// Variance of N(0, 1) truncated to (lo, hi), in standardized units.
/// Intervals lying entirely in one tail are evaluated through Mills ratios
/// so that the result stays accurate when Phi(hi) - Phi(lo) underflows.
template <typename Scalar>
Scalar std_truncated_variance(Scalar lo, Scalar hi) {
  if (hi <= Scalar(0)) return std_truncated_variance(-hi, -lo);
  if (lo >= Scalar(0)) {
    // phi(hi) / phi(lo), and Z / phi(lo) = M(lo) - ratio * M(hi).
    const Scalar ratio = std::isinf(hi) ? Scalar(0) : std::exp(-(hi - lo) * (hi + lo) / Scalar(2));
    const Scalar m_hi = std::isinf(hi) ? Scalar(0) : ratio * mills_ratio(hi);
    const Scalar z = mills_ratio(lo) - m_hi;
    if (!(z > Scalar(0))) return Scalar(0);
    const Scalar lambda = (Scalar(1) - ratio) / z;
    const Scalar hi_term = std::isinf(hi) ? Scalar(0) : hi * ratio;
    const Scalar v = Scalar(1) + (lo - hi_term) / z - lambda * lambda;
    return std::max(v, Scalar(0));
  }
  const Scalar z = std_interval_prob(lo, hi);
  if (z < kMinRegionProb<Scalar>) return Scalar(0);
  const Scalar lambda = (std_pdf(lo) - std_pdf(hi)) / z;
  const Scalar v = Scalar(1) + (detail::x_pdf(lo) - detail::x_pdf(hi)) / z - lambda * lambda;
  return std::max(v, Scalar(0));
}

}  // namespace tobit
