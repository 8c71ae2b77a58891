#pragma once

// Standard normal primitives in one and two dimensions.
//
// Infinite arguments are ordinary values here: std_cdf(-inf) == 0,
// std_pdf(+inf) == 0 and rectangle probabilities accept semi-infinite
// intervals without sentinel substitution.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "tobit/errors.hpp"

namespace tobit {

/// Interval in standardized units; either endpoint may be infinite.
template <typename Scalar = double>
struct StdInterval {
  Scalar lo = -std::numeric_limits<Scalar>::infinity();
  Scalar hi = std::numeric_limits<Scalar>::infinity();

  StdInterval() = default;
  StdInterval(Scalar lo_, Scalar hi_) : lo(lo_), hi(hi_) {
    if (!(lo < hi)) throw InvalidArgument("interval requires lo < hi");
  }

  static StdInterval whole() { return {}; }
};

/// Largest |rho| accepted by callers that regularize near-singular pairs.
template <typename Scalar = double>
inline constexpr Scalar kMaxCorrelation = Scalar(1) - Scalar(1e-9);

template <typename Scalar>
Scalar clamp_correlation(Scalar rho) {
  return std::clamp(rho, -kMaxCorrelation<Scalar>, kMaxCorrelation<Scalar>);
}

template <typename Scalar>
Scalar std_pdf(Scalar x) {
  if (std::isinf(x)) return Scalar(0);
  return std::exp(Scalar(-0.5) * x * x) * std::numbers::inv_sqrtpi_v<Scalar> /
         std::numbers::sqrt2_v<Scalar>;
}

template <typename Scalar>
Scalar std_cdf(Scalar x) {
  if (x == std::numeric_limits<Scalar>::infinity()) return Scalar(1);
  if (x == -std::numeric_limits<Scalar>::infinity()) return Scalar(0);
  return Scalar(0.5) * std::erfc(-x / std::numbers::sqrt2_v<Scalar>);
}

/// Upper tail 1 - Phi(x), accurate for large positive x.
template <typename Scalar>
Scalar std_sf(Scalar x) {
  return std_cdf(-x);
}

/// log Phi(x) without underflow for very negative x.
template <typename Scalar>
Scalar log_std_cdf(Scalar x) {
  if (x > Scalar(-30)) return std::log(std_cdf(x));
  // Asymptotic series of the Mills ratio.
  const Scalar x2 = x * x;
  const Scalar series = Scalar(1) - Scalar(1) / x2 + Scalar(3) / (x2 * x2) -
                        Scalar(15) / (x2 * x2 * x2);
  return Scalar(-0.5) * x2 - std::log(-x) -
         Scalar(0.5) * std::log(Scalar(2) * std::numbers::pi_v<Scalar>) +
         std::log(series);
}

/// Mills ratio (1 - Phi(x)) / phi(x) for x >= 0; continued fraction in the
/// tail where both numerator and denominator underflow.
template <typename Scalar>
Scalar mills_ratio(Scalar x) {
  if (x == std::numeric_limits<Scalar>::infinity()) return Scalar(0);
  if (x < Scalar(5)) return std_sf(x) / std_pdf(x);
  // Lentz evaluation of 1 / (x + 1 / (x + 2 / (x + 3 / (x + ...)))).
  const Scalar tiny = std::numeric_limits<Scalar>::min() * Scalar(1e10);
  Scalar f = x;
  Scalar c = x;
  Scalar d = 0;
  for (int n = 1; n < 500; ++n) {
    d = x + Scalar(n) * d;
    if (d == Scalar(0)) d = tiny;
    c = x + Scalar(n) / c;
    if (c == Scalar(0)) c = tiny;
    d = Scalar(1) / d;
    const Scalar delta = c * d;
    f *= delta;
    if (std::abs(delta - Scalar(1)) < std::numeric_limits<Scalar>::epsilon()) break;
  }
  return Scalar(1) / f;
}

/// Interval probability Phi(hi) - Phi(lo), computed on the tail that keeps
/// precision.
template <typename Scalar>
Scalar std_interval_prob(Scalar lo, Scalar hi) {
  if (lo > 0) return std::max(Scalar(0), std_sf(lo) - std_sf(hi));
  return std::max(Scalar(0), std_cdf(hi) - std_cdf(lo));
}

template <typename Scalar>
Scalar bivariate_pdf(Scalar x1, Scalar x2, Scalar rho) {
  if (!(std::abs(rho) < Scalar(1))) {
    throw CorrelationOutOfRange("|rho| must be < 1");
  }
  if (std::isinf(x1) || std::isinf(x2)) return Scalar(0);
  const Scalar one_minus = (Scalar(1) - rho) * (Scalar(1) + rho);
  const Scalar q = (x1 * x1 - Scalar(2) * rho * x1 * x2 + x2 * x2) / one_minus;
  return std::exp(Scalar(-0.5) * q) /
         (Scalar(2) * std::numbers::pi_v<Scalar> * std::sqrt(one_minus));
}

namespace detail {

// Gauss-Legendre abscissae (negative half) and weights for 6, 12 and 20
// points.
inline constexpr std::array<double, 3> kGlw6 = {0.1713244923791705, 0.3607615730481384,
                                                0.4679139345726904};
inline constexpr std::array<double, 3> kGlx6 = {-0.9324695142031522, -0.6612093864662647,
                                                -0.2386191860831970};
inline constexpr std::array<double, 6> kGlw12 = {
    0.04717533638651177, 0.1069393259953183, 0.1600783285433464,
    0.2031674267230659,  0.2334925365383547, 0.2491470458134029};
inline constexpr std::array<double, 6> kGlx12 = {
    -0.9815606342467191, -0.9041172563704750, -0.7699026741943050,
    -0.5873179542866171, -0.3678314989981802, -0.1252334085114692};
inline constexpr std::array<double, 10> kGlw20 = {
    0.01761400713915212, 0.04060142980038694, 0.06267204833410906,
    0.08327674157670475, 0.1019301198172404,  0.1181945319615184,
    0.1316886384491766,  0.1420961093183821,  0.1491729864726037,
    0.1527533871307259};
inline constexpr std::array<double, 10> kGlx20 = {
    -0.9931285991850949, -0.9639719272779138, -0.9122344282513259,
    -0.8391169718222188, -0.7463319064601508, -0.6360536807265150,
    -0.5108670019508271, -0.3737060887154196, -0.2277858511416451,
    -0.07652652113349733};

// P(Z1 > h, Z2 > k) for finite h, k (Drezner-Wesolowsky reduction with
// Genz's refinements for high correlation).
template <typename Scalar>
Scalar bivariate_upper_finite(Scalar h, Scalar k, Scalar r) {
  const double* w = nullptr;
  const double* x = nullptr;
  std::size_t n = 0;
  if (std::abs(r) < Scalar(0.3)) {
    w = kGlw6.data(); x = kGlx6.data(); n = kGlw6.size();
  } else if (std::abs(r) < Scalar(0.75)) {
    w = kGlw12.data(); x = kGlx12.data(); n = kGlw12.size();
  } else {
    w = kGlw20.data(); x = kGlx20.data(); n = kGlw20.size();
  }

  const Scalar two_pi = Scalar(2) * std::numbers::pi_v<Scalar>;
  Scalar hk = h * k;
  Scalar bvn = 0;

  if (std::abs(r) < Scalar(0.925)) {
    const Scalar hs = (h * h + k * k) / Scalar(2);
    const Scalar asr = std::asin(r);
    for (std::size_t i = 0; i < n; ++i) {
      const Scalar xi = Scalar(x[i]);
      const Scalar wi = Scalar(w[i]);
      Scalar sn = std::sin(asr * (xi + Scalar(1)) / Scalar(2));
      bvn += wi * std::exp((sn * hk - hs) / (Scalar(1) - sn * sn));
      sn = std::sin(asr * (-xi + Scalar(1)) / Scalar(2));
      bvn += wi * std::exp((sn * hk - hs) / (Scalar(1) - sn * sn));
    }
    return bvn * asr / (Scalar(2) * two_pi) + std_sf(h) * std_sf(k);
  }

  if (r < 0) {
    k = -k;
    hk = -hk;
  }
  if (std::abs(r) < Scalar(1)) {
    const Scalar as = (Scalar(1) - r) * (Scalar(1) + r);
    Scalar a = std::sqrt(as);
    const Scalar bs = (h - k) * (h - k);
    const Scalar c = (Scalar(4) - hk) / Scalar(8);
    const Scalar d = (Scalar(12) - hk) / Scalar(16);
    bvn = a * std::exp(-(bs / as + hk) / Scalar(2)) *
          (Scalar(1) - c * (bs - as) * (Scalar(1) - d * bs / Scalar(5)) / Scalar(3) +
           c * d * as * as / Scalar(5));
    if (hk > Scalar(-160)) {
      const Scalar b = std::sqrt(bs);
      bvn -= std::exp(-hk / Scalar(2)) * std::sqrt(two_pi) * std_cdf(-b / a) * b *
             (Scalar(1) - c * bs * (Scalar(1) - d * bs / Scalar(5)) / Scalar(3));
    }
    a /= Scalar(2);
    for (std::size_t i = 0; i < n; ++i) {
      const Scalar xi = Scalar(x[i]);
      const Scalar wi = Scalar(w[i]);
      Scalar xs = (a * (xi + Scalar(1))) * (a * (xi + Scalar(1)));
      Scalar rs = std::sqrt(Scalar(1) - xs);
      bvn += a * wi *
             (std::exp(-bs / (Scalar(2) * xs) - hk / (Scalar(1) + rs)) / rs -
              std::exp(-(bs / xs + hk) / Scalar(2)) * (Scalar(1) + c * xs * (Scalar(1) + d * xs)));
      xs = as * (-xi + Scalar(1)) * (-xi + Scalar(1)) / Scalar(4);
      rs = std::sqrt(Scalar(1) - xs);
      bvn += a * wi * std::exp(-(bs / xs + hk) / Scalar(2)) *
             (std::exp(-hk * (Scalar(1) - rs) / (Scalar(2) * (Scalar(1) + rs))) / rs -
              (Scalar(1) + c * xs * (Scalar(1) + d * xs)));
    }
    bvn = -bvn / two_pi;
  }
  if (r > 0) return bvn + std_sf(std::max(h, k));
  return -bvn + std::max(Scalar(0), std_sf(h) - std_sf(k));
}

}  // namespace detail

/// P(Z1 > h, Z2 > k) for the standard bivariate normal; h, k may be infinite.
template <typename Scalar>
Scalar bivariate_upper(Scalar h, Scalar k, Scalar rho) {
  constexpr Scalar inf = std::numeric_limits<Scalar>::infinity();
  // Beyond |x| = 40 every tail mass is below the smallest normal double, so
  // such limits are exactly infinite at working precision.
  constexpr Scalar saturate = Scalar(40);
  if (h > saturate) h = inf;
  if (h < -saturate) h = -inf;
  if (k > saturate) k = inf;
  if (k < -saturate) k = -inf;
  if (h == inf || k == inf) return Scalar(0);
  if (h == -inf) return k == -inf ? Scalar(1) : std_sf(k);
  if (k == -inf) return std_sf(h);
  if (rho == Scalar(0)) return std_sf(h) * std_sf(k);
  return std::clamp(detail::bivariate_upper_finite(h, k, rho), Scalar(0), Scalar(1));
}

/// P(i1.lo < Z1 < i1.hi, i2.lo < Z2 < i2.hi) under correlation rho.
template <typename Scalar>
Scalar bivariate_rect_prob(const StdInterval<Scalar>& i1, const StdInterval<Scalar>& i2,
                           Scalar rho) {
  if (!(std::abs(rho) < Scalar(1))) {
    throw CorrelationOutOfRange("|rho| must be < 1");
  }
  if (rho == Scalar(0)) {
    return std_interval_prob(i1.lo, i1.hi) * std_interval_prob(i2.lo, i2.hi);
  }
  const Scalar p = bivariate_upper(i1.lo, i2.lo, rho) - bivariate_upper(i1.lo, i2.hi, rho) -
                   bivariate_upper(i1.hi, i2.lo, rho) + bivariate_upper(i1.hi, i2.hi, rho);
  return std::clamp(p, Scalar(0), Scalar(1));
}

}  // namespace tobit
