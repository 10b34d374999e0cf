#ifndef CATNET_EXCURSION_HPP
#define CATNET_EXCURSION_HPP

#include <complex>
#include <cstdint>
#include <vector>

#include "catnet/cir.hpp"
#include "catnet/rng.hpp"

namespace catnet {

// Conditional laws of the integrated process I_t = int_0^t X_s ds for the
// branching diffusion of cir.hpp, given one or both endpoints.

// Canonical excursion measure facts at horizon t: survival probability of the
// normalized excursion endpoint, the intensity of surviving excursions, and
// the first moment of nu_t under the excursion measure (identically 1).
double excursion_tail(double gamma, double t, double x);   // P*_t(nu_t > x) = exp(-x/gamma t)
double excursion_intensity(double gamma, double t);        // N0(nu_t > 0) = 1/(gamma t)
constexpr double excursion_first_moment() { return 1.0; }  // int nu_t dN0 = 1

// E*_t[e(s) | e(t)] = (s/t)((s/t) e_t + 2 gamma (t-s)), s <= t.
double conditional_excursion_mean(double gamma, double s, double t, double e_t);

struct ConditionedIntegralSpec {
  CirParams params;
  double t;  // horizon > 0
  double x;  // start >= 0
  double y;  // endpoint >= 0
  ConditionedIntegralSpec(const CirParams& p, double t_, double x_, double y_);
};

// E[I_t | X_0 = x, X_t = y] via the Bessel-log-derivative coefficient:
//   kappa_nu(2 sqrt(xy)/(t gamma)) t^2 gamma / 6 + (x+y) t / 3,  nu = b/gamma - 1.
double conditional_integral_mean(const ConditionedIntegralSpec& spec);

// E[exp(-lambda^2 I_t / 2) | X_0 = x, X_t = y]; evaluated by rescaling to the
// (gamma = 2, t = 1) normal form and applying the sinh/Bessel closed form.
double integral_laplace(const ConditionedIntegralSpec& spec, double lambda);

// The same transform in the variable s = lambda^2/2 (so E[exp(-s I_t)]),
// continued to complex s with positive real part; used by the inversion.
std::complex<double> integral_laplace_s(const ConditionedIntegralSpec& spec,
                                        std::complex<double> s);

// Numerical inversion of that transform to a density of I_t on a w-grid.
struct CondIntegralDensity {
  std::vector<double> w;
  std::vector<double> value;          // clipped at 0
  std::vector<char> unstable;         // consecutive-order disagreement flag
  double normalization() const;       // trapezoid of value over w (0 prepended)
  double mean() const;                // trapezoid first moment
  bool any_unstable() const;
};

CondIntegralDensity invert_integral_density(const ConditionedIntegralSpec& spec,
                                            const std::vector<double>& w_grid, int order = 14);

// Default grid covering the conditional mass of I_t.
std::vector<double> default_integral_grid(const ConditionedIntegralSpec& spec, int n = 600);

// Exact-endpoint path skeleton: K chained endpoint draws on [0, t] plus the
// trapezoid integral.  Endpoint marginal is exact for every K; the integral
// carries the O(t^2/K) conditional bias of the trapezoid rule.
struct PathWithIntegral {
  std::vector<double> times;
  std::vector<double> values;
  double integral = 0.0;
  std::uint64_t n0_last = 0;  // cluster count of the final substep draw
};

PathWithIntegral sample_path_with_integral(const CirParams& p, double t, double x,
                                           int substeps, Rng& rng);

// Light variant for hot loops; returns only (integral, endpoint).
struct IntegralEndpoint {
  double integral;
  double x_t;
};
IntegralEndpoint sample_integral_endpoint(const CirParams& p, double t, double x, int substeps,
                                          Rng& rng);

// Exact transition draw of the zero-immigration branching diffusion
// (generator gamma x d^2/dx^2): Gamma(N, gamma t) with N ~ Poisson(x/gamma t).
double sample_feller_branching(double gamma, double t, double x, Rng& rng);

}  // namespace catnet

#endif  // CATNET_EXCURSION_HPP
