#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>

#include "catnet/excursion.hpp"
#include "catnet/special.hpp"

using namespace catnet;

TEST_CASE("excursion measure facts") {
  CHECK(excursion_tail(1.0, 1.0, 0.0) == doctest::Approx(1.0));
  CHECK(excursion_tail(1.0, 1.0, 1.0) == doctest::Approx(std::exp(-1.0)));
  CHECK(excursion_intensity(2.0, 0.5) == doctest::Approx(1.0));
  // intensity times the exponential mean reproduces the unit first moment
  CHECK(excursion_intensity(1.7, 0.9) * (1.7 * 0.9) == doctest::Approx(excursion_first_moment()));
}

TEST_CASE("conditional excursion mean") {
  CHECK(conditional_excursion_mean(1.0, 1.0, 1.0, 0.7) == doctest::Approx(0.7));
  CHECK(conditional_excursion_mean(1.0, 0.5, 1.0, 0.0) == doctest::Approx(0.5));
  CHECK_THROWS(conditional_excursion_mean(1.0, 2.0, 1.0, 0.5));
  // bound e(t) + 2 gamma s on a grid
  for (double s : {0.1, 0.4, 0.9})
    for (double e : {0.0, 0.5, 3.0}) {
      double v = conditional_excursion_mean(0.8, s, 1.0, e);
      CHECK(v <= e + 2.0 * 0.8 * s + 1e-12);
    }
}

TEST_CASE("conditional integral mean: corners, symmetry, kappa oracle") {
  ConditionedIntegralSpec zero(CirParams(1.0, 1.0), 1.0, 0.0, 0.0);
  CHECK(conditional_integral_mean(zero) == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
  ConditionedIntegralSpec a(CirParams(1.3, 0.8), 0.7, 0.9, 2.1);
  ConditionedIntegralSpec b(CirParams(1.3, 0.8), 0.7, 2.1, 0.9);
  CHECK(conditional_integral_mean(a) == doctest::Approx(conditional_integral_mean(b)));
  ConditionedIntegralSpec ones(CirParams(1.0, 1.0), 1.0, 1.0, 1.0);
  CHECK(conditional_integral_mean(ones) ==
        doctest::Approx(kappa_nu(0.0, 2.0) / 6.0 + 2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("endpoint-conditioned transform: closed values and shape") {
  ConditionedIntegralSpec s00(CirParams(2.0, 2.0), 1.0, 0.0, 0.0);
  CHECK(integral_laplace(s00, 0.0) == doctest::Approx(1.0));
  CHECK(integral_laplace(s00, 1.0) == doctest::Approx(1.0 / std::sinh(1.0)).epsilon(1e-12));
  ConditionedIntegralSpec s11(CirParams(1.0, 1.0), 1.0, 1.0, 1.0);
  double prev = 1.0;
  for (double lam : {0.25, 0.5, 1.0, 2.0, 4.0, 8.0}) {
    double v = integral_laplace(s11, lam);
    CHECK(v > 0.0);
    CHECK(v < prev);
    prev = v;
  }
  // symmetric in the endpoints, exactly
  ConditionedIntegralSpec sxy(CirParams(1.0, 1.0), 0.6, 0.4, 1.9);
  ConditionedIntegralSpec syx(CirParams(1.0, 1.0), 0.6, 1.9, 0.4);
  CHECK(integral_laplace(sxy, 1.3) == doctest::Approx(integral_laplace(syx, 1.3)).epsilon(1e-14));
  // transform-implied mean reproduces the kappa formula
  double lam = 1e-4;
  double fd_mean = 2.0 * (1.0 - integral_laplace(s11, lam)) / (lam * lam);
  CHECK(fd_mean == doctest::Approx(conditional_integral_mean(s11)).epsilon(1e-6));
}

TEST_CASE("complex-s transform matches the real one on the real axis") {
  ConditionedIntegralSpec sp(CirParams(1.0, 1.0), 1.0, 1.0, 0.5);
  for (double lam : {0.5, 2.0, 10.0}) {
    double s = 0.5 * lam * lam;
    CHECK(integral_laplace_s(sp, {s, 0.0}).real() ==
          doctest::Approx(integral_laplace(sp, lam)).epsilon(1e-12));
  }
}

TEST_CASE("inverted conditional density: normalization, mean, flags") {
  for (double x : {0.0, 1.0})
    for (double y : {0.0, 1.0}) {
      ConditionedIntegralSpec sp(CirParams(1.0, 1.0), 1.0, x, y);
      auto wd = invert_integral_density(sp, default_integral_grid(sp, 600));
      CHECK(wd.normalization() == doctest::Approx(1.0).epsilon(1e-4));
      CHECK(wd.mean() / wd.normalization() ==
            doctest::Approx(conditional_integral_mean(sp)).epsilon(1e-3));
      CHECK_FALSE(wd.any_unstable());
      for (double v : wd.value) CHECK(v >= 0.0);
    }
  // negative-moment shape: int w^-1 density decreasing in the endpoint sum
  double prev = 1e300;
  for (double x : {0.0, 1.0, 3.0}) {
    ConditionedIntegralSpec sp(CirParams(1.0, 1.0), 1.0, x, x);
    auto wd = invert_integral_density(sp, default_integral_grid(sp, 600));
    double inv_mom = 0.0, pw = 0.0, pf = 0.0;
    for (std::size_t i = 0; i < wd.w.size(); ++i) {
      double f = wd.w[i] > 1e-9 ? wd.value[i] / wd.w[i] : 0.0;
      inv_mom += 0.5 * (pf + f) * (wd.w[i] - pw);
      pw = wd.w[i];
      pf = f;
    }
    CHECK(std::isfinite(inv_mom));
    CHECK(inv_mom < prev);
    prev = inv_mom;
  }
}

TEST_CASE("path-with-integral sampler") {
  CirParams p(1.0, 1.0);
  Rng rng(9, "path", 0);
  SUBCASE("single panel reduces to the trapezoid of the endpoints") {
    for (int i = 0; i < 200; ++i) {
      PathWithIntegral pw = sample_path_with_integral(p, 2.0, 1.5, 1, rng);
      CHECK(pw.integral ==
            doctest::Approx(0.5 * 2.0 * (pw.values.front() + pw.values.back())));
      CHECK(pw.values.front() == doctest::Approx(1.5));
    }
  }
  SUBCASE("integral mean matches x t + b t^2/2 within 4 se") {
    const double t = 1.0, x = 2.0;
    const int n = 100000;
    double s = 0, s2 = 0, endp = 0;
    for (int i = 0; i < n; ++i) {
      IntegralEndpoint ie = sample_integral_endpoint(p, t, x, 16, rng);
      s += ie.integral;
      s2 += ie.integral * ie.integral;
      endp += ie.x_t;
    }
    double mean = s / n;
    double se = std::sqrt((s2 / n - mean * mean) / n);
    CHECK(std::fabs(mean - (x * t + 0.5 * t * t)) < 4.0 * se);
    // endpoint marginal is exact for every substep count
    Moments cm = closed_moments(p, t, x);
    CHECK(std::fabs(endp / n - cm.mean) < 4.0 * std::sqrt(cm.variance / n));
  }
  SUBCASE("binned conditional integral matches the kappa formula") {
    const double t = 1.0, x = 1.0;
    const int n = 60000;
    double lo_sum = 0, lo_cnt = 0, lo_sq = 0;
    for (int i = 0; i < n; ++i) {
      IntegralEndpoint ie = sample_integral_endpoint(p, t, x, 32, rng);
      ConditionedIntegralSpec cs(p, t, x, ie.x_t);
      double d = ie.integral - conditional_integral_mean(cs);
      lo_sum += d;
      lo_sq += d * d;
      lo_cnt += 1;
    }
    double mean = lo_sum / lo_cnt;
    double se = std::sqrt((lo_sq / lo_cnt - mean * mean) / lo_cnt);
    CHECK(std::fabs(mean) < 4.0 * se + 1.0 / 32.0);
  }
}

TEST_CASE("binned transform of the integrated path matches the closed form") {
  CirParams p(1.0, 1.0);
  const double t = 1.0, x = 1.0;
  const int substeps = 32, n = 80000, n_bins = 6;
  Rng rng(41, "binned_transform", 0);
  const double lambdas[3] = {0.5, 1.0, 2.0};
  // quantile bin edges from the closed endpoint law
  std::vector<double> edges;
  for (int i = 1; i < n_bins; ++i)
    edges.push_back(endpoint_quantile(p, t, x, static_cast<double>(i) / n_bins));
  struct Cell {
    double sum = 0, sumsq = 0, target = 0;
    long cnt = 0;
  };
  std::vector<std::array<Cell, 3>> cells(n_bins);
  for (int i = 0; i < n; ++i) {
    IntegralEndpoint ie = sample_integral_endpoint(p, t, x, substeps, rng);
    int b = static_cast<int>(std::upper_bound(edges.begin(), edges.end(), ie.x_t) -
                             edges.begin());
    ConditionedIntegralSpec cs(p, t, x, ie.x_t);
    for (int k = 0; k < 3; ++k) {
      double v = std::exp(-0.5 * lambdas[k] * lambdas[k] * ie.integral);
      double target = integral_laplace(cs, lambdas[k]);
      cells[b][k].sum += v - target;  // centered per draw against the closed form
      cells[b][k].sumsq += (v - target) * (v - target);
      ++cells[b][k].cnt;
    }
  }
  const double allowance = t * t * p.gamma / substeps;  // trapezoid bias scale
  for (int b = 0; b < n_bins; ++b)
    for (int k = 0; k < 3; ++k) {
      const auto& c = cells[b][k];
      REQUIRE(c.cnt > 1000);
      double mean = c.sum / c.cnt;
      double se = std::sqrt((c.sumsq / c.cnt - mean * mean) / c.cnt);
      CHECK(std::fabs(mean) < 4.0 * se + allowance);
    }
}

TEST_CASE("zero-immigration transition") {
  Rng rng(13, "feller0", 0);
  const double g = 1.0, t = 0.5, x = 1.0;
  const int n = 200000;
  double s = 0;
  int zeros = 0;
  for (int i = 0; i < n; ++i) {
    double v = sample_feller_branching(g, t, x, rng);
    s += v;
    if (v == 0.0) ++zeros;
  }
  // mean is conserved; extinction mass is exp(-x/(gamma t))
  CHECK(std::fabs(s / n - x) < 4.0 * std::sqrt(2.0 * g * t * x / n));
  double p0 = std::exp(-x / (g * t));
  CHECK(std::fabs(static_cast<double>(zeros) / n - p0) <
        4.0 * std::sqrt(p0 * (1.0 - p0) / n));
}
