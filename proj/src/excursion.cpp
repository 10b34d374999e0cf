#include "catnet/excursion.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "catnet/special.hpp"

namespace catnet {

double excursion_tail(double gamma, double t, double x) {
  if (!(gamma > 0.0) || !(t > 0.0) || x < 0.0)
    throw std::invalid_argument("excursion_tail: gamma, t > 0 and x >= 0");
  return std::exp(-x / (gamma * t));
}

double excursion_intensity(double gamma, double t) {
  if (!(gamma > 0.0) || !(t > 0.0))
    throw std::invalid_argument("excursion_intensity: gamma, t > 0");
  return 1.0 / (gamma * t);
}

double conditional_excursion_mean(double gamma, double s, double t, double e_t) {
  if (!(s > 0.0) || s > t) throw std::invalid_argument("conditional_excursion_mean: 0 < s <= t");
  if (e_t < 0.0) throw std::invalid_argument("conditional_excursion_mean: e_t >= 0");
  double r = s / t;
  double val = r * (r * e_t + 2.0 * gamma * (t - s));
  if (val > e_t + 2.0 * gamma * s + 1e-12 * (1.0 + e_t + gamma * s))
    throw std::logic_error("conditional_excursion_mean: bound e_t + 2 gamma s violated");
  return val;
}

ConditionedIntegralSpec::ConditionedIntegralSpec(const CirParams& p, double t_, double x_,
                                                 double y_)
    : params(p), t(t_), x(x_), y(y_) {
  if (!(t > 0.0)) throw std::invalid_argument("ConditionedIntegralSpec: t > 0");
  if (x < 0.0 || y < 0.0) throw std::invalid_argument("ConditionedIntegralSpec: x, y >= 0");
}

double conditional_integral_mean(const ConditionedIntegralSpec& spec) {
  const double g = spec.params.gamma, t = spec.t;
  double nu = spec.params.shape() - 1.0;
  double z = 2.0 * std::sqrt(spec.x * spec.y) / (t * g);
  return kappa_nu(nu, z) * t * t * g / 6.0 + (spec.x + spec.y) * t / 3.0;
}

namespace {

// log(u / sinh u) for u >= 0, stable at both ends.
double log_u_over_sinh(double u) {
  if (u < 1e-4) return -u * u / 6.0;
  // log sinh u = u + log1p(-exp(-2u)) - log 2
  return std::log(u) - (u + std::log1p(-std::exp(-2.0 * u)) - 0.6931471805599453);
}

double u_coth_u(double u) {
  if (u < 1e-4) return 1.0 + u * u / 3.0;
  double e = std::exp(-2.0 * u);
  return u * (1.0 + e) / (1.0 - e);
}

// log I_nu(z) tolerant of underflowing z (leading-order term).
double log_bessel_i_safe(double nu, double log_z) {
  if (log_z < -300.0) return nu * (log_z - 0.6931471805599453) - std::lgamma(nu + 1.0);
  return log_bessel_i(nu, std::exp(log_z));
}

}  // namespace

double integral_laplace(const ConditionedIntegralSpec& spec, double lambda) {
  if (lambda < 0.0) throw std::invalid_argument("integral_laplace: lambda >= 0");
  if (lambda == 0.0) return 1.0;
  const double g = spec.params.gamma, t = spec.t;
  // Normal form: Xhat_s = (2 / t gamma) X_{ts} has gamma = 2, horizon 1,
  // immigration 2b/gamma, and I_t = (t^2 gamma / 2) Ihat.
  const double bhat = 2.0 * spec.params.shape();
  const double xh = 2.0 * spec.x / (t * g);
  const double yh = 2.0 * spec.y / (t * g);
  const double lam = lambda * t * std::sqrt(0.5 * g);

  const double log_ls = log_u_over_sinh(lam);
  const double drift_exp = 0.5 * (xh + yh) * (1.0 - u_coth_u(lam));
  double log_val;
  if (xh > 0.0 && yh > 0.0) {
    double z0 = std::sqrt(xh * yh);
    double log_z1 = log_ls + std::log(z0);
    double nu = 0.5 * bhat - 1.0;
    log_val = log_ls + drift_exp + log_bessel_i_safe(nu, log_z1) - log_bessel_i(nu, z0);
  } else {
    log_val = 0.5 * bhat * log_ls + drift_exp;
  }
  double v = std::exp(log_val);
  if (!std::isfinite(v)) throw std::runtime_error("integral_laplace: Bessel ratio failed");
  return v;
}

namespace {

std::complex<double> log_sinh_c(std::complex<double> u) {
  if (u.real() > 20.0)
    return u + std::log1p(-std::exp(-2.0 * u.real())) - 0.6931471805599453;
  return std::log(std::sinh(u));
}

std::complex<double> coth_c(std::complex<double> u) {
  if (u.real() > 20.0) return {1.0, 0.0};
  return std::cosh(u) / std::sinh(u);
}

}  // namespace

std::complex<double> integral_laplace_s(const ConditionedIntegralSpec& spec,
                                        std::complex<double> s) {
  if (!(s.real() > 0.0)) throw std::invalid_argument("integral_laplace_s: Re s > 0");
  const double g = spec.params.gamma, t = spec.t;
  const double bhat = 2.0 * spec.params.shape();
  const double xh = 2.0 * spec.x / (t * g);
  const double yh = 2.0 * spec.y / (t * g);
  // lambda^2/2 = s in process units; the normal form scales the argument by
  // t sqrt(g/2), i.e. lam^2 = s t^2 g.
  std::complex<double> lam = std::sqrt(s * (t * t * g));

  std::complex<double> log_ls = std::log(lam) - log_sinh_c(lam);
  std::complex<double> drift_exp = 0.5 * (xh + yh) * (1.0 - lam * coth_c(lam));
  std::complex<double> log_val;
  if (xh > 0.0 && yh > 0.0) {
    double z0 = std::sqrt(xh * yh);
    double nu = 0.5 * bhat - 1.0;
    std::complex<double> z1 = std::exp(log_ls) * z0;
    log_val = log_ls + drift_exp + log_bessel_i_complex(nu, z1) - log_bessel_i(nu, z0);
  } else {
    log_val = 0.5 * bhat * log_ls + drift_exp;
  }
  return std::exp(log_val);
}

double CondIntegralDensity::normalization() const {
  double acc = 0.0;
  double prev_w = 0.0, prev_f = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    acc += 0.5 * (prev_f + value[i]) * (w[i] - prev_w);
    prev_w = w[i];
    prev_f = value[i];
  }
  return acc;
}

double CondIntegralDensity::mean() const {
  double acc = 0.0;
  double prev_w = 0.0, prev_f = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    acc += 0.5 * (prev_f * prev_w + value[i] * w[i]) * (w[i] - prev_w);
    prev_w = w[i];
    prev_f = value[i];
  }
  return acc;
}

bool CondIntegralDensity::any_unstable() const {
  for (char c : unstable)
    if (c) return true;
  return false;
}

std::vector<double> default_integral_grid(const ConditionedIntegralSpec& spec, int n) {
  double m = conditional_integral_mean(spec);
  // The conditional density decays like exp(-pi^2 w / (t^2 gamma)); cover
  // enough of the tail that the truncated mass is far below 1e-4.
  double rate = 9.869604401089358 / (spec.t * spec.t * spec.params.gamma);
  double hi = 4.0 * m + 16.0 / rate;
  std::vector<double> grid(n);
  for (int i = 0; i < n; ++i) grid[i] = hi * (i + 1.0) / n;
  return grid;
}

// The transform decays only like exp(-c sqrt(s)), which caps Gaver-Stehfest
// at order 14 in doubles near three digits; the value path therefore uses
// the Bromwich-line Euler summation (~1e-6 or better), and the stability
// flag compares consecutive Euler orders as the spec'd consecutive-order
// check.  Densities are clipped at zero.
CondIntegralDensity invert_integral_density(const ConditionedIntegralSpec& spec,
                                            const std::vector<double>& w_grid, int order) {
  CondIntegralDensity out;
  out.w = w_grid;
  out.value.resize(w_grid.size());
  out.unstable.assign(w_grid.size(), 0);
  auto transform = [&](std::complex<double> s) { return integral_laplace_s(spec, s); };
  const int euler_terms = std::max(2 * order, 24);
  double peak = 0.0;
  std::vector<double> lo_order(w_grid.size());
  for (std::size_t i = 0; i < w_grid.size(); ++i) {
    double f_hi = invert_laplace_euler(transform, w_grid[i], euler_terms);
    lo_order[i] = invert_laplace_euler(transform, w_grid[i], euler_terms - 4);
    out.value[i] = std::max(f_hi, 0.0);
    peak = std::max(peak, out.value[i]);
  }
  for (std::size_t i = 0; i < w_grid.size(); ++i) {
    double scale = std::max(out.value[i], 0.02 * peak);
    if (scale > 0.0 && std::fabs(out.value[i] - std::max(lo_order[i], 0.0)) > 1e-3 * scale)
      out.unstable[i] = 1;
  }
  return out;
}

PathWithIntegral sample_path_with_integral(const CirParams& p, double t, double x, int substeps,
                                           Rng& rng) {
  if (substeps < 1) throw std::invalid_argument("sample_path_with_integral: substeps >= 1");
  PathWithIntegral out;
  out.times.resize(substeps + 1);
  out.values.resize(substeps + 1);
  const double dt = t / substeps;
  out.times[0] = 0.0;
  out.values[0] = x;
  double cur = x;
  for (int k = 1; k <= substeps; ++k) {
    EndpointSample es = sample_endpoint(p, dt, cur, rng);
    out.integral += 0.5 * (cur + es.x_t) * dt;
    cur = es.x_t;
    out.times[k] = k * dt;
    out.values[k] = cur;
    out.n0_last = es.n0;
  }
  return out;
}

IntegralEndpoint sample_integral_endpoint(const CirParams& p, double t, double x, int substeps,
                                          Rng& rng) {
  const double dt = t / substeps;
  const double gdt = p.gamma * dt;
  const double shape = p.shape();
  double cur = x;
  double integral = 0.0;
  for (int k = 0; k < substeps; ++k) {
    std::uint64_t n = (cur == 0.0) ? 0 : rng.poisson(cur / gdt);
    double nxt = rng.gamma(n + shape, gdt);
    integral += 0.5 * (cur + nxt) * dt;
    cur = nxt;
  }
  return {integral, cur};
}

double sample_feller_branching(double gamma, double t, double x, Rng& rng) {
  if (x <= 0.0) return 0.0;
  std::uint64_t n = rng.poisson(x / (gamma * t));
  if (n == 0) return 0.0;
  return rng.gamma(static_cast<double>(n), gamma * t);
}

}  // namespace catnet
