#include "catnet/special.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace catnet {

namespace {
constexpr double kLogEps = -37.0;  // ~ log(1e-16)
}

void SignedLogSum::add(double sign, double log_mag) {
  if (log_mag == -std::numeric_limits<double>::infinity()) return;
  if (log_mag > scale_) {
    double f = std::exp(scale_ - log_mag);
    pos_ *= f;
    neg_ *= f;
    scale_ = log_mag;
  }
  double v = std::exp(log_mag - scale_);
  if (sign >= 0.0)
    pos_ += v;
  else
    neg_ += v;
}

double SignedLogSum::value() const {
  if (pos_ == 0.0 && neg_ == 0.0) return 0.0;
  return (pos_ - neg_) * std::exp(scale_);
}

double SignedLogSum::log_abs_bound() const {
  if (pos_ + neg_ == 0.0) return -std::numeric_limits<double>::infinity();
  return scale_ + std::log(pos_ + neg_);
}

bool SignedLogSum::bigger_than(double log_mag) const {
  if (pos_ + neg_ == 0.0) return false;
  return log_mag < log_abs_bound() + kLogEps;
}

double log_bessel_i(double nu, double z) {
  if (!(nu > -1.0)) throw std::invalid_argument("log_bessel_i: need nu > -1");
  if (z <= 0.0) throw std::invalid_argument("log_bessel_i: need z > 0");
  const double lh = std::log(0.5 * z);
  // Term ratio (z/2)^2 / ((n+1)(n+nu+1)) crosses 1 near the positive root of
  // n^2 + (nu+2) n + (nu+1) - (z/2)^2.
  double disc = nu * nu + z * z;
  long n0 = std::lround(std::max(0.0, 0.5 * (-(nu + 2.0) + std::sqrt(disc))));
  auto log_term = [&](long n) {
    return (2.0 * n + nu) * lh - std::lgamma(n + 1.0) - std::lgamma(n + nu + 1.0);
  };
  double t0 = log_term(n0);
  double scale = t0;
  double sum = 1.0;
  // Upward from n0+1.
  double lt = t0;
  for (long n = n0 + 1; n < n0 + 2000000; ++n) {
    lt += 2.0 * lh - std::log(static_cast<double>(n)) - std::log(n + nu);
    sum += std::exp(lt - scale);
    if (lt - scale < kLogEps) break;
  }
  // Downward from n0-1.
  lt = t0;
  for (long n = n0; n >= 1; --n) {
    lt -= 2.0 * lh - std::log(static_cast<double>(n)) - std::log(n + nu);
    sum += std::exp(lt - scale);
    if (lt - scale < kLogEps) break;
  }
  return scale + std::log(sum);
}

double bessel_i_ratio(double nu, double z) {
  if (z <= 0.0) return 0.0;
  if (z <= 30.0) return std::exp(log_bessel_i(nu + 1.0, z) - log_bessel_i(nu, z));
  // Modified Lentz for r = I_{nu+1}/I_nu = 1/(2(nu+1)/z + 1/(2(nu+2)/z + ...)).
  const double tiny = 1e-300;
  double f = tiny, c = f, d = 0.0;
  for (int k = 1; k <= 500; ++k) {
    double a = (k == 1) ? 1.0 : 1.0;
    double b = 2.0 * (nu + k) / z;
    d = b + a * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + a / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double delta = c * d;
    f *= delta;
    if (std::fabs(delta - 1.0) < 1e-16) break;
  }
  return f;
}

double kappa_nu(double nu, double z) {
  if (!(nu > -1.0)) throw std::invalid_argument("kappa_nu: need nu > -1");
  if (z < 0.0) throw std::invalid_argument("kappa_nu: need z >= 0");
  if (z == 0.0) return nu + 1.0;
  return z * bessel_i_ratio(nu, z) + nu + 1.0;
}

namespace {

// Lower incomplete gamma by series, x < a + 1.
double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int n = 0; n < 500; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Upper incomplete gamma by continued fraction, x >= a + 1.
double gamma_q_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
    double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < 1e-16) break;
  }
  return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace

double gamma_p(double a, double x) {
  if (a <= 0.0 || x < 0.0) throw std::invalid_argument("gamma_p: bad arguments");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return gamma_p_series(a, x);
  return 1.0 - gamma_q_cf(a, x);
}

double gamma_q(double a, double x) {
  if (a <= 0.0 || x < 0.0) throw std::invalid_argument("gamma_q: bad arguments");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
  return gamma_q_cf(a, x);
}

double chi_square_quantile(double k, double prob) {
  if (prob <= 0.0 || prob >= 1.0) throw std::invalid_argument("chi_square_quantile: prob in (0,1)");
  // Bracket and bisect on the CDF P(k/2, x/2).
  double lo = 0.0, hi = std::max(4.0 * k, 20.0);
  while (gamma_p(0.5 * k, 0.5 * hi) < prob) hi *= 2.0;
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    if (gamma_p(0.5 * k, 0.5 * mid) < prob)
      lo = mid;
    else
      hi = mid;
    if (hi - lo < 1e-10 * (1.0 + hi)) break;
  }
  return 0.5 * (lo + hi);
}

namespace {

double simpson(double a, double fa, double b, double fb, double fm) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive_step(const std::function<double(double)>& f, double a, double fa, double b,
                     double fb, double m, double fm, double whole, double tol, int depth) {
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = simpson(a, fa, m, fm, flm);
  double right = simpson(m, fm, b, fb, frm);
  double delta = left + right - whole;
  if (depth <= 0 || std::fabs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return adaptive_step(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
         adaptive_step(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

}  // namespace

double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double tol, int max_depth) {
  if (a == b) return 0.0;
  double m = 0.5 * (a + b);
  double fa = f(a), fb = f(b), fm = f(m);
  double whole = simpson(a, fa, b, fb, fm);
  return adaptive_step(f, a, fa, b, fb, m, fm, whole, tol, max_depth);
}

double integrate_power_weight(const std::function<double(double)>& g, double alpha,
                              double y_max, double tol) {
  if (alpha <= 0.0) throw std::invalid_argument("integrate_power_weight: alpha > 0");
  double u_max = std::pow(y_max, alpha);
  auto h = [&](double u) {
    double y = std::pow(u, 1.0 / alpha);
    return g(y);
  };
  return integrate_adaptive(h, 0.0, u_max, tol * alpha) / alpha;
}

void gauss_legendre(int n, double a, double b, std::vector<double>& nodes,
                    std::vector<double>& weights) {
  nodes.resize(n);
  weights.resize(n);
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    // Newton iteration from the Chebyshev-angle starting guess.
    double x = std::cos(3.141592653589793 * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (x * p0 - p1) / (x * x - 1.0);
      double dx = p0 / pp;
      x -= dx;
      if (std::fabs(dx) < 1e-15) break;
    }
    nodes[i] = mid - half * x;
    nodes[n - 1 - i] = mid + half * x;
    weights[i] = weights[n - 1 - i] = 2.0 * half / ((1.0 - x * x) * pp * pp);
  }
}

std::vector<double> gaver_stehfest_weights(int order) {
  if (order < 2 || order % 2 != 0) throw std::invalid_argument("gaver_stehfest: even order >= 2");
  int m = order / 2;
  std::vector<double> zeta(order + 1, 0.0);
  double mfact = std::tgamma(m + 1.0);
  auto choose = [](double n, double k) {
    return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0));
  };
  for (int k = 1; k <= order; ++k) {
    double s = 0.0;
    for (int j = (k + 1) / 2; j <= std::min(k, m); ++j) {
      double term = std::pow(static_cast<double>(j), m + 1) / mfact;
      term *= choose(m, j) * choose(2.0 * j, j) * choose(j, k - j);
      s += term;
    }
    zeta[k] = ((m + k) % 2 == 0 ? 1.0 : -1.0) * s;
  }
  return zeta;
}

double gaver_stehfest(const std::function<double(double)>& laplace, double w, int order) {
  static thread_local int cached_order = -1;
  static thread_local std::vector<double> cached;
  if (cached_order != order) {
    cached = gaver_stehfest_weights(order);
    cached_order = order;
  }
  const double ln2_w = 0.6931471805599453 / w;
  double acc = 0.0;
  for (int k = 1; k <= order; ++k) acc += cached[k] * laplace(k * ln2_w);
  return ln2_w * acc;
}

double invert_laplace_euler(const std::function<std::complex<double>(std::complex<double>)>& F,
                            double w, int terms) {
  if (!(w > 0.0)) throw std::invalid_argument("invert_laplace_euler: w > 0");
  const int m = terms;
  const double a = m * 2.302585092994046 / 3.0;  // m ln(10) / 3
  // Tail weights xi: 1/2, 1, ..., 1, then a descending binomial staircase.
  std::vector<double> xi(2 * m + 1, 1.0);
  xi[0] = 0.5;
  xi[2 * m] = std::pow(2.0, -m);
  for (int j = 1; j < m; ++j) {
    double c = std::exp(std::lgamma(m + 1.0) - std::lgamma(j + 1.0) - std::lgamma(m - j + 1.0));
    xi[2 * m - j] = xi[2 * m - j + 1] + std::pow(2.0, -m) * c;
  }
  double acc = 0.0;
  for (int k = 0; k <= 2 * m; ++k) {
    std::complex<double> s(a / w, 3.141592653589793 * k / w);
    double sign = (k % 2 == 0) ? 1.0 : -1.0;
    acc += sign * xi[k] * F(s).real();
  }
  return std::exp(a) / w * acc;
}

std::complex<double> log_bessel_i_complex(double nu, std::complex<double> z) {
  if (!(nu > -1.0)) throw std::invalid_argument("log_bessel_i_complex: nu > -1");
  std::complex<double> q = 0.25 * z * z;
  std::complex<double> term(1.0, 0.0), sum(1.0, 0.0);
  double scale_log = -std::lgamma(nu + 1.0);
  for (int n = 1; n < 4000; ++n) {
    term *= q / (static_cast<double>(n) * (n + nu));
    sum += term;
    if (std::abs(term) < 1e-18 * std::abs(sum) && static_cast<double>(n) > 0.5 * std::abs(z))
      break;
    if (std::abs(sum) > 1e250) {
      sum *= 1e-200;
      term *= 1e-200;
      scale_log += 460.51701859880916;  // log(1e200)
    }
  }
  return nu * std::log(0.5 * z) + scale_log + std::log(sum);
}

}  // namespace catnet
