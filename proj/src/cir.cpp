#include "catnet/cir.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "catnet/special.hpp"

namespace catnet {

CirParams::CirParams(double b_, double gamma_) : b(b_), gamma(gamma_) {
  if (!(b > 0.0) || !std::isfinite(b)) throw std::invalid_argument("CirParams: b > 0 required");
  if (!(gamma > 0.0) || !std::isfinite(gamma))
    throw std::invalid_argument("CirParams: gamma > 0 required");
}

namespace {

// d^n/du^n [e^-u u^m] = e^-u sum_k C(n,k) (-1)^(n-k) m!/(m-k)! u^(m-k).
// Adds the signed sub-terms of index m to the accumulator; returns the
// largest sub-term log magnitude.
double add_series_term(SignedLogSum& acc, long m, int n, double log_u, double log_v,
                       double base) {
  static const double binom[4][4] = {
      {1, 0, 0, 0}, {1, 1, 0, 0}, {1, 2, 1, 0}, {1, 3, 3, 1}};
  double top = -std::numeric_limits<double>::infinity();
  double lg_m1 = std::lgamma(m + 1.0);
  for (int k = 0; k <= n && k <= m; ++k) {
    double lmag = base + m * log_v - lg_m1 + (lg_m1 - std::lgamma(m - k + 1.0)) +
                  (m - k) * log_u + std::log(binom[n][k]);
    double sign = ((n - k) % 2 == 0) ? 1.0 : -1.0;
    acc.add(sign, lmag);
    top = std::max(top, lmag);
  }
  return top;
}

}  // namespace

double q_density(const CirParams& p, double t, double x, double y, int deriv_order) {
  if (!(t > 0.0)) throw std::invalid_argument("q_density: t > 0 required");
  if (x < 0.0 || y < 0.0) throw std::invalid_argument("q_density: x, y >= 0 required");
  if (deriv_order < 0 || deriv_order > 3)
    throw std::invalid_argument("q_density: derivative order 0..3");
  const double s = p.shape();
  const double gt = p.gamma * t;
  const double u = x / gt, v = y / gt;
  const int n = deriv_order;

  // Degenerate corners: with u = 0 or v = 0 only finitely many terms remain.
  const double pref = -s * std::log(gt) - u - v - n * std::log(gt);
  SignedLogSum acc;
  if (v == 0.0) {
    // Only m = 0 (density) resp. m <= n (derivatives of the m-th term vanish
    // unless m contributes through u^(m-k) at u... v^m kills m >= 1).
    long m = 0;
    double base = pref - std::lgamma(m + s);
    if (u == 0.0) {
      // d^n/du^n e^-u at u=0 alternates sign.
      acc.add((n % 2 == 0) ? 1.0 : -1.0, base);
    } else {
      add_series_term(acc, 0, n, std::log(u), 0.0, base);
    }
    return acc.value();
  }
  const double log_v = std::log(v);
  if (u == 0.0) {
    // u^(m-k) at u = 0 keeps only k = m <= n; the falling factorial cancels
    // the 1/m! of the series coefficient.
    for (long m = 0; m <= n; ++m) {
      static const double binom[4][4] = {
          {1, 0, 0, 0}, {1, 1, 0, 0}, {1, 2, 1, 0}, {1, 3, 3, 1}};
      double lmag = pref - std::lgamma(m + s) + m * log_v + std::log(binom[n][m]);
      acc.add(((n - m) % 2 == 0) ? 1.0 : -1.0, lmag);
    }
    return acc.value();
  }
  const double log_u = std::log(u);

  // Series over m, started at the index of the largest (order-0) term.
  double disc = (s - 1.0) * (s - 1.0) + 4.0 * u * v;
  long m0 = std::lround(std::max(0.0, 0.5 * (-(s + 1.0) + std::sqrt(disc))));
  auto base_of = [&](long m) { return pref - std::lgamma(m + s); };
  double top0 = add_series_term(acc, m0, n, log_u, log_v, base_of(m0));
  for (long m = m0 + 1; m < m0 + 2000000; ++m) {
    double top = add_series_term(acc, m, n, log_u, log_v, base_of(m));
    if (acc.bigger_than(top) && top < top0) break;
  }
  for (long m = m0 - 1; m >= 0; --m) {
    double top = add_series_term(acc, m, n, log_u, log_v, base_of(m));
    if (acc.bigger_than(top) && top < top0) break;
  }
  return acc.value();
}

double laplace_endpoint(const CirParams& p, double t, double x, double lambda) {
  if (!(t > 0.0)) throw std::invalid_argument("laplace_endpoint: t > 0 required");
  const double gt = p.gamma * t;
  const double denom = 1.0 + lambda * gt;
  if (denom <= 0.0) throw std::invalid_argument("laplace_endpoint: lambda at or below the pole");
  return std::pow(denom, -p.shape()) * std::exp(-x * lambda / denom);
}

EndpointSample sample_endpoint(const CirParams& p, double t, double x, Rng& rng) {
  if (!(t > 0.0)) throw std::invalid_argument("sample_endpoint: t > 0 required");
  if (x < 0.0) throw std::invalid_argument("sample_endpoint: x >= 0 required");
  const double gt = p.gamma * t;
  EndpointSample out;
  out.n0 = (x == 0.0) ? 0 : rng.poisson(x / gt);
  out.x_t = rng.gamma(out.n0 + p.shape(), gt);
  return out;
}

DecompositionSample sample_decomposition(const CirParams& p, double t, double x, double rho,
                                         Rng& rng) {
  if (rho < 0.0 || rho > 1.0) throw std::invalid_argument("sample_decomposition: rho in [0,1]");
  const double gt = p.gamma * t;
  DecompositionSample out;
  EndpointSample imm = sample_endpoint(p, t, rho * x, rng);
  out.x_imm = imm.x_t;
  double intensity = (1.0 - rho) * x / gt;
  out.n_rho = (intensity == 0.0) ? 0 : rng.poisson(intensity);
  out.excursions.resize(out.n_rho);
  double tail = 0.0;
  for (auto& e : out.excursions) {
    e = rng.exponential(gt);
    tail += e;
  }
  out.x_t = out.x_imm + tail;
  out.n0 = imm.n0 + out.n_rho;
  return out;
}

Moments closed_moments(const CirParams& p, double t, double x) {
  if (t < 0.0) throw std::invalid_argument("closed_moments: t >= 0 required");
  return {x + p.b * t, 2.0 * p.gamma * t * x + p.b * p.gamma * t * t};
}

double tail_bound(const CirParams& p, double t, double z, double w, TailSide side) {
  if (!(t > 0.0)) throw std::invalid_argument("tail_bound: t > 0 required");
  if (side == TailSide::Upper && !(w > z && z >= 0.0))
    throw std::invalid_argument("tail_bound: upper side needs w > z >= 0");
  if (side == TailSide::Lower && !(z >= w && w >= 0.0))
    throw std::invalid_argument("tail_bound: lower side needs 0 <= w <= z");
  if (w == z) return 1.0;
  if (side == TailSide::Upper && z == 0.0) return 1.0;  // (w/0)^.. diverges; vacuous
  if (side == TailSide::Lower && w == 0.0) return 0.0;  // X_t > 0 a.s.
  double d = std::sqrt(z) - std::sqrt(w);
  double val = std::exp(0.5 * p.shape() * (std::log(w) - std::log(z)) -
                        d * d / (p.gamma * t));
  return std::min(val, 1.0);
}

double endpoint_mass_cutoff(const CirParams& p, double t, double x) {
  const double gt = p.gamma * t;
  double y = (std::sqrt(x) + std::sqrt(48.0 * gt)) * (std::sqrt(x) + std::sqrt(48.0 * gt));
  return std::max(y, gt * (p.shape() + 40.0));
}

double endpoint_cdf(const CirParams& p, double t, double x, double y) {
  if (y <= 0.0) return 0.0;
  // Poisson mixture of Gamma CDFs; truncate the Poisson weight tail.
  const double gt = p.gamma * t;
  const double mean_n = x / gt;
  const double s = p.shape();
  long n_lo = 0, n_hi = 0;
  if (mean_n > 0.0) {
    double half = 8.0 * std::sqrt(mean_n) + 30.0;
    n_lo = std::max(0L, std::lround(mean_n - half));
    n_hi = std::lround(mean_n + half);
  }
  double cdf = 0.0;
  for (long n = n_lo; n <= n_hi; ++n) {
    double logw = (mean_n > 0.0)
                      ? -mean_n + n * std::log(mean_n) - std::lgamma(n + 1.0)
                      : (n == 0 ? 0.0 : -std::numeric_limits<double>::infinity());
    double w = std::exp(logw);
    if (w < 1e-18 && n > mean_n) break;
    if (w < 1e-18) continue;
    cdf += w * gamma_p(n + s, y / gt);
  }
  return std::min(cdf, 1.0);
}

double endpoint_quantile(const CirParams& p, double t, double x, double prob) {
  if (prob <= 0.0 || prob >= 1.0)
    throw std::invalid_argument("endpoint_quantile: prob in (0,1)");
  double lo = 0.0, hi = endpoint_mass_cutoff(p, t, x);
  while (endpoint_cdf(p, t, x, hi) < prob) hi *= 2.0;
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    if (endpoint_cdf(p, t, x, mid) < prob)
      lo = mid;
    else
      hi = mid;
    if (hi - lo < 1e-12 * (1.0 + hi)) break;
  }
  return 0.5 * (lo + hi);
}

double negative_moment(const CirParams& p, double t, double x, double pow_p) {
  const double s = p.shape();
  if (!(pow_p > 0.0) || !(pow_p < s))
    throw std::invalid_argument("negative_moment: need 0 < p < b/gamma");
  double y_max = endpoint_mass_cutoff(p, t, x);
  auto g = [&](double y) { return q_density(p, t, x, y, 0); };
  // int y^-p q y^(s-1) dy = int q y^((s-p)-1) dy
  return integrate_power_weight(g, s - pow_p, y_max, 1e-11);
}

InequalityReport analytic_inequalities(const CirParams& p, const InequalityGrid& grid) {
  InequalityReport rep;
  const double s = p.shape();

  // Gamma-ratio bounds: c1 m^(s-1) m! <= Gamma(m+s) <= c2 m^(s-1) m!.
  double c1 = std::numeric_limits<double>::infinity(), c2 = 0.0;
  for (long m = 1; m <= grid.m_max; m = (m < 64 ? m + 1 : m + m / 16)) {
    double lr = std::lgamma(m + s) - (s - 1.0) * std::log(static_cast<double>(m)) -
                std::lgamma(m + 1.0);
    double r = std::exp(lr);
    c1 = std::min(c1, r);
    c2 = std::max(c2, r);
  }
  rep.gamma_ratio_c1 = c1;
  rep.gamma_ratio_c2 = c2;

  // Density sup bound against the envelope t^-s + 1_(s<1/2) (x^y)^(1/2-s) t^-1/2.
  double csup = 0.0;
  for (double t : grid.t_values)
    for (double x : grid.x_values)
      for (double y : grid.y_values) {
        double env = std::pow(t, -s);
        if (s < 0.5) env += std::pow(std::min(x, y), 0.5 - s) / std::sqrt(t);
        csup = std::max(csup, q_density(p, t, x, y, 0) / env);
      }
  rep.density_sup_c = csup;

  // Negative endpoint moments: E[X_t^-p] <= c (p/(s-p)+1) (x+t)^-p, p < s.
  double cneg = 0.0;
  for (double frac : grid.p_fractions) {
    double pw = std::min(frac, 0.9) * s;
    if (!(pw > 0.0)) continue;
    for (double t : grid.t_values)
      for (double x : grid.x_values) {
        double lhs = negative_moment(p, t, x, pw);
        double rhs = (pw / (s - pw) + 1.0) * std::pow(x + t, -pw);
        cneg = std::max(cneg, lhs / rhs);
      }
  }
  rep.neg_moment_c = cneg;

  // Kernel moment: sup_y |int_0^inf (x - y) x^s D^2_x q_t(x, y) dx|.
  double ksup = 0.0;
  for (double t : grid.t_values) {
    for (double y : grid.y_values) {
      double x_max = endpoint_mass_cutoff(p, t, y) + y;
      auto integrand = [&](double x) {
        return (x - y) * std::pow(x, s) * q_density(p, t, x, y, 2);
      };
      double val = integrate_adaptive(integrand, 0.0, x_max, 1e-10);
      ksup = std::max(ksup, std::fabs(val));
    }
  }
  rep.kernel_moment_sup = ksup;

  rep.all_finite = std::isfinite(c1) && std::isfinite(c2) && std::isfinite(csup) &&
                   std::isfinite(cneg) && std::isfinite(ksup) && c1 > 0.0;
  return rep;
}

}  // namespace catnet
