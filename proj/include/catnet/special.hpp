#ifndef CATNET_SPECIAL_HPP
#define CATNET_SPECIAL_HPP

#include <array>
#include <complex>
#include <cstddef>
#include <functional>
#include <vector>

namespace catnet {

// log I_nu(z) for nu > -1, z > 0, summed in log space around the largest term.
double log_bessel_i(double nu, double z);

// Ratio I_{nu+1}(z) / I_nu(z); shared-scaled series for z <= 30, Lentz
// continued fraction beyond.
double bessel_i_ratio(double nu, double z);

// kappa_nu(z) = z I'_nu(z)/I_nu(z) + 1, with kappa_nu(0) = nu + 1.
double kappa_nu(double nu, double z);

// Regularized lower incomplete gamma P(a, x) and its complement Q(a, x).
double gamma_p(double a, double x);
double gamma_q(double a, double x);

// Quantile of the chi-square distribution with k degrees of freedom.
double chi_square_quantile(double k, double prob);

// Adaptive Simpson on [a, b] to absolute tolerance tol.
double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double tol, int max_depth = 28);

// Weighted integral  int_0^inf g(y) y^(alpha-1) dy  for alpha > 0 and g
// bounded near 0; the substitution u = y^alpha removes the singularity.
// y_max truncates the upper range (g must be negligible beyond it).
double integrate_power_weight(const std::function<double(double)>& g, double alpha,
                              double y_max, double tol);

// Nodes/weights of the n-point Gauss-Legendre rule on [a, b].
void gauss_legendre(int n, double a, double b, std::vector<double>& nodes,
                    std::vector<double>& weights);

// Gaver-Stehfest inversion of a Laplace transform F(s) at w > 0, given the
// even order (number of terms).  Double precision limits usable orders to
// about 14-16, and the achievable accuracy to roughly three digits on
// transforms with sub-exponential tails.
double gaver_stehfest(const std::function<double(double)>& laplace, double w, int order = 14);

// Coefficients of the Gaver-Stehfest rule of the given even order.
std::vector<double> gaver_stehfest_weights(int order);

// Euler-accelerated Bromwich inversion (alternating-series summation on a
// vertical line); needs the transform at complex arguments with positive
// real part.  Discretization error ~ 10^(-terms/3) in double precision.
double invert_laplace_euler(const std::function<std::complex<double>(std::complex<double>)>& F,
                            double w, int terms = 32);

// log I_nu(z) for complex z (principal branch), nu > -1.
std::complex<double> log_bessel_i_complex(double nu, std::complex<double> z);

// Signed accumulator for series with terms  sign * exp(log_mag): keeps
// positive and negative partial sums rescaled by the running max exponent.
class SignedLogSum {
 public:
  void add(double sign, double log_mag);
  double value() const;              // pos - neg, scaled back
  double log_abs_bound() const;      // log of (pos + neg) magnitude
  bool bigger_than(double log_mag) const;  // |partial| dominates exp(log_mag)/eps
 private:
  double scale_ = -1e308;
  double pos_ = 0.0, neg_ = 0.0;
};

}  // namespace catnet

#endif  // CATNET_SPECIAL_HPP
