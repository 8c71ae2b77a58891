#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "tobit/censored_moments.hpp"
#include "tobit/monte_carlo.hpp"

using namespace tobit;
using oracle::inf;

namespace {

MvnSpec<double> worked_spec() {
  MvnSpec<double> spec;
  spec.mean = Eigen::Vector3d(2, 2, 3);
  spec.cov.resize(3, 3);
  spec.cov << 5, 3, 4, 3, 5, 4, 4, 4, 5;
  return spec;
}

CensorBounds<double> worked_bounds() {
  return {Eigen::Vector3d(-1, -3, 1), Eigen::Vector3d(1, 7, 4)};
}

MvnSpec<double> spec2(double m0, double m1, double c00, double c01, double c11) {
  MvnSpec<double> s;
  s.mean = Eigen::Vector2d(m0, m1);
  s.cov.resize(2, 2);
  s.cov << c00, c01, c01, c11;
  return s;
}

CensorBounds<double> bounds2(double a0, double b0, double a1, double b1) {
  return {Eigen::Vector2d(a0, a1), Eigen::Vector2d(b0, b1)};
}

}  // namespace

TEST_CASE("distribution and bounds validation") {
  auto s = spec2(0, 0, 1, 2, 1);
  CHECK_THROWS_AS(s.validate(), InvalidArgument);  // not PSD
  s = spec2(0, 0, 0, 0, 1);
  CHECK_THROWS_AS(s.validate(), InvalidArgument);  // zero variance
  CHECK_THROWS_AS(bounds2(1, 1, 0, 2).validate(2), InvalidArgument);
  CHECK_THROWS_AS(bounds2(0, 1, 0, 2).validate(3), InvalidArgument);
}

TEST_CASE("region probabilities") {
  MvnSpec<double> s{Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1)};
  auto p = region_probabilities(s, CensorBounds<double>::unbounded(1));
  CHECK(p.below(0) == 0.0);
  CHECK(p.inside(0) == 1.0);
  CHECK(p.above(0) == 0.0);
  p = region_probabilities(s, CensorBounds<double>::uniform(1, 0.0, inf));
  CHECK(p.below(0) == doctest::Approx(0.5));
  CHECK(p.inside(0) == doctest::Approx(0.5));
  CHECK(p.above(0) == 0.0);

  // mean 2, variance 5, limits (-1, 1) against quadrature of the density.
  MvnSpec<double> t{Eigen::VectorXd::Constant(1, 2.0), Eigen::MatrixXd::Constant(1, 1, 5.0)};
  p = region_probabilities(t, CensorBounds<double>::uniform(1, -1.0, 1.0));
  const double sd = std::sqrt(5.0);
  const auto f = [&](double x) { return oracle::phi((x - 2.0) / sd) / sd; };
  CHECK(std::abs(p.below(0) - oracle::simpson(f, 2.0 - 14 * sd, -1.0, 40000)) < 1e-12);
  CHECK(std::abs(p.inside(0) - oracle::simpson(f, -1.0, 1.0, 4000)) < 1e-12);
  CHECK(std::abs(p.above(0) - oracle::simpson(f, 1.0, 2.0 + 14 * sd, 40000)) < 1e-12);
}

TEST_CASE("truncated moments trivial cases") {
  const auto s = spec2(0, 0, 1, 0, 1);
  const Eigen::Vector2d m = truncated_mean(s, bounds2(-inf, inf, -inf, inf));
  CHECK(m.norm() < 1e-14);
  const Eigen::Matrix2d sec = truncated_second_moment(s, bounds2(-inf, inf, -inf, inf));
  CHECK((sec - Eigen::Matrix2d::Identity()).norm() < 1e-14);

  const Eigen::Vector2d half = truncated_mean(s, bounds2(0, inf, -inf, inf));
  CHECK(half(0) == doctest::Approx(std::sqrt(2.0 / std::numbers::pi)).epsilon(1e-14));
  CHECK(std::abs(half(1)) < 1e-14);

  const double c = 0.8;
  const Eigen::Matrix2d sym = truncated_second_moment(s, bounds2(-c, c, -inf, inf));
  const double expected = 1.0 - 2.0 * c * oracle::phi(c) / (2.0 * oracle::Phi(c) - 1.0);
  CHECK(sym(0, 0) == doctest::Approx(expected).epsilon(1e-13));
  CHECK(sym(1, 1) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(std::abs(sym(0, 1)) < 1e-14);
}

TEST_CASE("truncated moments against conditional quadrature") {
  struct Case {
    MvnSpec<double> spec;
    CensorBounds<double> bounds;
  };
  const Case cases[] = {
      {spec2(2, 3, 4, 4, 4.5), bounds2(-1, 1, 1, 4)},
      {spec2(2, 3, 4, 3, 4), bounds2(-1, 1, -3, 7)},
      {spec2(0.5, -1, 2, -1.2, 1), bounds2(-inf, 1, -2, inf)},
      {spec2(0, 0, 1, 0.97, 1), bounds2(0.5, inf, 0.2, 1.5)},
      {spec2(1, 1, 1, -0.5, 3), bounds2(1.5, 4, -inf, 0)},
  };
  for (const auto& c : cases) {
    double prob = 0;
    Eigen::Vector2d mean;
    Eigen::Matrix2d second;
    oracle::truncated_pair(c.spec.mean, c.spec.cov, c.bounds.lower, c.bounds.upper, prob, mean, second);
    const auto got = truncated_moments(c.spec, c.bounds);
    CAPTURE(c.spec.cov);
    CHECK(std::abs(got.prob - prob) < 1e-9);
    CHECK((got.mean - mean).cwiseAbs().maxCoeff() < 1e-7);
    CHECK((got.second - second).cwiseAbs().maxCoeff() < 1e-7);
  }
}

TEST_CASE("truncated moments reject negligible regions") {
  const auto s = spec2(0, 0, 1, 0.3, 1);
  CHECK_THROWS_AS(truncated_mean(s, bounds2(20, inf, -inf, inf)), DegenerateRegion);
}

TEST_CASE("censored mean examples") {
  MvnSpec<double> s{Eigen::VectorXd::Constant(1, 5.0), Eigen::MatrixXd::Identity(1, 1)};
  CHECK(censored_mean(s, CensorBounds<double>::unbounded(1))(0) == doctest::Approx(5.0));
  s.mean(0) = 0.0;
  CHECK(censored_mean(s, CensorBounds<double>::uniform(1, 0.0, inf))(0) ==
        doctest::Approx(oracle::phi(0.0)).epsilon(1e-14));

  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  const auto spec = worked_spec();
  const auto b = worked_bounds();
  oracle::censored_moments(spec.mean, spec.cov, b.lower, b.upper, mean, cov);
  CHECK((censored_mean(spec, b) - mean).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("censored covariance reproduces the published worked example") {
  Eigen::Matrix3d published;
  published << 0.4651, 0.6962, 0.5085, 0.6962, 4.7747, 1.9189, 0.5085, 1.9189, 1.4379;
  const Eigen::MatrixXd got = censored_covariance(worked_spec(), worked_bounds());
  CHECK((got - published).cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("censored covariance trivial cases") {
  const auto spec = worked_spec();
  const Eigen::MatrixXd full = censored_covariance(spec, CensorBounds<double>::unbounded(3));
  CHECK((full - spec.cov).cwiseAbs().maxCoeff() < 1e-9);

  const auto indep = spec2(0, 0, 1, 0, 1);
  const Eigen::MatrixXd diag = censored_covariance(indep, bounds2(-1, 1, -1, 1));
  CHECK(std::abs(diag(0, 1)) < 1e-14);
  CHECK(diag(0, 0) > 0.0);
}

TEST_CASE("censored moments against pairwise quadrature on random instances") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> dim(1, 3);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 40; ++trial) {
    const Eigen::Index n = dim(rng);
    MvnSpec<double> spec;
    spec.mean.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) spec.mean(i) = u(rng);
    spec.cov = oracle::random_cov(rng, n);
    CensorBounds<double> b;
    oracle::random_bounds(rng, spec.mean, spec.cov, b.lower, b.upper);

    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
    oracle::censored_moments(spec.mean, spec.cov, b.lower, b.upper, mean, cov);
    const auto got = censored_moments(spec, b);
    CAPTURE(trial);
    CHECK((got.mean - mean).cwiseAbs().maxCoeff() < 1e-7);
    CHECK((got.cov - cov).cwiseAbs().maxCoeff() < 1e-7);
  }
}

TEST_CASE("censored moment invariants") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> dim(1, 3);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Index n = dim(rng);
    MvnSpec<double> spec;
    spec.mean.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) spec.mean(i) = u(rng);
    spec.cov = oracle::random_cov(rng, n, 1e-3, 10.0);
    CensorBounds<double> b;
    oracle::random_bounds(rng, spec.mean, spec.cov, b.lower, b.upper);
    const auto got = censored_moments(spec, b);

    const auto& p = got.region_probs;
    CHECK(((p.below + p.inside + p.above).array() - 1.0).abs().maxCoeff() < 1e-9);
    CHECK((got.cov - got.cov.transpose()).cwiseAbs().maxCoeff() < 1e-9);
    for (Eigen::Index i = 0; i < n; ++i) {
      CHECK(got.cov(i, i) >= 0.0);
      CHECK(got.cov(i, i) <= spec.cov(i, i) + 1e-9);
      CHECK(got.mean(i) >= b.lower(i));
      CHECK(got.mean(i) <= b.upper(i));
    }

    // Limits pushed far into the tails recover the latent moments.
    const Eigen::VectorXd sd = spec.cov.diagonal().cwiseSqrt();
    const CensorBounds<double> wide{spec.mean - 1e6 * sd, spec.mean + 1e6 * sd};
    const auto far = censored_moments(spec, wide);
    CHECK((far.mean - spec.mean).cwiseAbs().maxCoeff() <= 1e-6 * std::max(1.0, spec.mean.cwiseAbs().maxCoeff()));
    CHECK((far.cov - spec.cov).cwiseAbs().maxCoeff() <= 1e-6 * spec.cov.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("tail-heavy censoring stays finite and ordered") {
  // Latent mean far outside the limits: the inside probability underflows
  // the naive 1 - P_a - P_b form.
  MvnSpec<double> s{Eigen::VectorXd::Constant(1, 12.0), Eigen::MatrixXd::Constant(1, 1, 0.25)};
  const auto m = censored_moments(s, CensorBounds<double>::uniform(1, -0.5, 0.5));
  CHECK(m.region_probs.inside(0) >= 0.0);
  CHECK(m.cov(0, 0) >= 0.0);
  CHECK(m.cov(0, 0) < 1e-100);
  CHECK(m.mean(0) == doctest::Approx(0.5));
  CHECK(std_truncated_variance(30.0, 31.0) > 0.0);
  CHECK(std_truncated_variance(30.0, 31.0) < 1.0 / (30.0 * 30.0));
}

TEST_CASE("monte carlo oracle matches the published sampling covariance") {
  Eigen::Matrix3d published;
  published << 0.4648, 0.6962, 0.5083, 0.6962, 4.7754, 1.9195, 0.5083, 1.9195, 1.4384;
  const auto mc = mc_censored_oracle(worked_spec(), worked_bounds(), 100000, 100, 0);
  // Published values carry four decimals, so half a unit of rounding is added.
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      CHECK(std::abs(mc.moments.cov(i, j) - published(i, j)) <= 3.0 * mc.cov_se(i, j) + 5e-5);
    }
  }
}

TEST_CASE("monte carlo oracle basics") {
  const auto spec = worked_spec();
  const auto a = mc_censored_oracle(spec, worked_bounds(), 2000, 6, 42, 1);
  const auto b = mc_censored_oracle(spec, worked_bounds(), 2000, 6, 42, 3);
  CHECK(a.moments.cov == b.moments.cov);
  CHECK(a.moments.mean == b.moments.mean);

  const auto open = mc_censored_oracle(spec, CensorBounds<double>::unbounded(3), 20000, 10, 5);
  CHECK(((open.moments.cov - spec.cov).cwiseAbs().array() <= 4.0 * open.cov_se.array()).all());
  CHECK_THROWS_AS(mc_censored_oracle(spec, worked_bounds(), 0, 1, 0), InvalidArgument);
}
