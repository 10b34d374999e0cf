#ifndef CATNET_CIR_HPP
#define CATNET_CIR_HPP

#include <cstdint>
#include <vector>

#include "catnet/rng.hpp"

namespace catnet {

// One-dimensional branching diffusion with immigration,
//   generator  b d/dx + gamma x d^2/dx^2,   b > 0, gamma > 0.
// Its transition kernel is a Poisson(x/gamma t) mixture of
// Gamma(n + b/gamma, gamma t) laws; all closed forms below come from that
// cluster representation.
struct CirParams {
  double b;      // immigration rate
  double gamma;  // branching rate

  CirParams(double b_, double gamma_);
  double shape() const { return b / gamma; }         // b/gamma
  double mu_exponent() const { return b / gamma - 1.0; }  // weight of y^(..) in mu
};

// One draw of (X_t, N0); N0 counts the initial-mass clusters alive at t.
struct EndpointSample {
  double x_t = 0.0;
  std::uint64_t n0 = 0;
};

// Cluster-decomposition draw at splitting fraction rho: the immigration part
// started from rho*x plus N_rho surviving excursions with exponential
// endpoint values.  n0 = n0_imm + n_rho couples the two cluster counts so
// that n_rho <= n0 holds pathwise.
struct DecompositionSample {
  double x_imm = 0.0;                 // endpoint of the part started at rho*x
  std::uint64_t n_rho = 0;            // excursions of the (1-rho)*x part alive at t
  std::vector<double> excursions;     // their endpoint values e_j(t)
  double x_t = 0.0;                   // total, equal in law to the plain endpoint
  std::uint64_t n0 = 0;               // coupled total cluster count
};

// n-th x-derivative (n = 0..3) of the transition density q_t(x, y) taken with
// respect to the reference measure mu(dy) = y^(b/gamma - 1) dy.  The series
// is summed in log space from the index of the largest term outward.
double q_density(const CirParams& p, double t, double x, double y, int deriv_order = 0);

// E_x[exp(-lambda X_t)] in closed form, lambda > -1/(gamma t).
double laplace_endpoint(const CirParams& p, double t, double x, double lambda);

// Exact endpoint draw: N0 ~ Poisson(x/gamma t), X_t | N0 ~ Gamma(N0 + b/gamma, gamma t).
EndpointSample sample_endpoint(const CirParams& p, double t, double x, Rng& rng);

// Cluster decomposition draw at fraction rho in [0,1] (coupled counts).
DecompositionSample sample_decomposition(const CirParams& p, double t, double x, double rho,
                                         Rng& rng);

// (mean, variance) of X_t: (x + b t, 2 gamma t x + b gamma t^2).
struct Moments {
  double mean;
  double variance;
};
Moments closed_moments(const CirParams& p, double t, double x);

enum class TailSide { Upper, Lower };

// Chernoff bound (w/z)^(b/2gamma) exp(-(sqrt z - sqrt w)^2 / gamma t) on the
// endpoint tail, clamped to 1 where vacuous.
double tail_bound(const CirParams& p, double t, double z, double w, TailSide side);

// Empirically fitted constants for the closed-form inequalities of the
// kernel: the Gamma-ratio bounds, the density sup bound, the negative-moment
// bound and the kernel-moment bound.  A report entry is "unbounded" when no
// finite constant works on the requested grid.
struct InequalityReport {
  double gamma_ratio_c1 = 0.0;   // min over m of Gamma(m+s)/(m^(s-1) m!)
  double gamma_ratio_c2 = 0.0;   // max over m
  double density_sup_c = 0.0;    // sup of q_t / envelope
  double neg_moment_c = 0.0;     // sup of E[X^-p] / ((p/(s-p)+1)(x+t)^-p)
  double kernel_moment_sup = 0.0;  // sup_y |int (x-y) x^s D^2_x q_t dx|
  bool all_finite = true;
};

struct InequalityGrid {
  std::vector<double> t_values{0.1, 1.0, 10.0};
  std::vector<double> x_values{0.0, 0.5, 2.0};
  std::vector<double> y_values{0.0, 0.5, 2.0, 5.0};
  std::vector<double> p_fractions{0.25, 0.5, 0.9};  // as fractions of b/gamma, capped at 0.9
  int m_max = 2000;
};

InequalityReport analytic_inequalities(const CirParams& p, const InequalityGrid& grid);

// E_x[X_t^-p] by quadrature of y^-p against q_t * mu (requires p < b/gamma).
double negative_moment(const CirParams& p, double t, double x, double pow_p);

// int_0^y q_t(x, v) v^(b/gamma - 1) dv, and its inverse; used for
// goodness-of-fit binning.
double endpoint_cdf(const CirParams& p, double t, double x, double y);
double endpoint_quantile(const CirParams& p, double t, double x, double prob);

// Upper truncation point: endpoint mass above it is below ~1e-18.
double endpoint_mass_cutoff(const CirParams& p, double t, double x);

}  // namespace catnet

#endif  // CATNET_CIR_HPP
