#ifndef CATNET_SEMIGROUP_HPP
#define CATNET_SEMIGROUP_HPP

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "catnet/cir.hpp"
#include "catnet/excursion.hpp"
#include "catnet/mc.hpp"
#include "catnet/network.hpp"
#include "catnet/rng.hpp"

namespace catnet {

// Constant-coefficient single-catalyst block: m driven coordinates with
// drifts b0 and diffusivities gamma0 modulated by the integrated catalyst,
// plus the catalyst itself (branching diffusion of cir.hpp) as the last
// coordinate.  State space R^m x R+.
struct MixedModel {
  std::vector<double> b0;
  std::vector<double> gamma0;
  CirParams cat;

  MixedModel(std::vector<double> b0_, std::vector<double> gamma0_, CirParams cat_);
  int m() const { return static_cast<int>(b0.size()); }
};

// One factor (p0 + p1 u + p2 u^2) exp(-a u^2 - c u) of a separable test
// function; closed under Gaussian expectations.
struct GaussPolyFactor {
  double p0 = 1.0, p1 = 0.0, p2 = 0.0, a = 0.0, c = 0.0;

  double value(double u) const;
  double d1(double u) const;
  double d2(double u) const;
  bool is_one() const { return p0 == 1.0 && p1 == 0.0 && p2 == 0.0 && a == 0.0 && c == 0.0; }
  bool plain_affine() const { return p2 == 0.0 && a == 0.0 && c == 0.0; }
  double sup_abs(double domain_lo) const;  // sup |phi| over [domain_lo, inf)
};

// E[phi(Z)] for Z ~ N(mean, var), in closed form; var = 0 collapses to a
// point evaluation.
double gauss_expect(const GaussPolyFactor& phi, double mean, double var);

// Registered test function f(y) = prod_j phi_j(y_j) * psi(y_{m+1}); the
// G-kernel integrates the phi_j exactly.
struct ProductTestFunction {
  std::vector<GaussPolyFactor> coord;  // one per driven coordinate
  enum class CatKind { One, Identity, Poly } cat_kind = CatKind::One;
  GaussPolyFactor cat_poly;            // used when cat_kind == Poly
  std::string name;

  double cat_value(double x) const;
  double value(std::span<const double> y) const;  // y of size m+1
  bool kernel_i_free() const;   // G f does not depend on the integral argument
  double sup_abs() const;       // +inf for the identity catalyst factor
};

// Common registered functions.
ProductTestFunction make_constant_one(int m);
ProductTestFunction make_cat_identity(int m);                       // f(y) = y_{m+1}
ProductTestFunction make_coord_linear(int m, int axis);             // f(y) = y_axis
ProductTestFunction make_gauss_exp(int m);  // exp(-y_1^2 - ... - y_m^2 - y_{m+1})

// Derivative-capable view over a separable product (all coordinates
// polynomial-exponential); for generator and martingale tests.
TestFunctionView as_test_function(std::vector<GaussPolyFactor> factors);

// G_{t,x}(f)(I, X) = E[f(Z_1..Z_m, X)], Z_j ~ N(x_j + b0_j t, 2 gamma0_j I).
double gaussian_kernel_G(const MixedModel& model, double t, std::span<const double> x_m,
                         const ProductTestFunction& f, double I, double X);

// Estimator mode: one Gaussian draw of Z per call, arbitrary integrand.
double gaussian_kernel_estimate(const MixedModel& model, double t, std::span<const double> x_m,
                                const std::function<double(std::span<const double>)>& f,
                                double I, double X, Rng& rng);

// Quadrature mode for unregistered f (tensor Gauss-Legendre).
double gaussian_kernel_quadrature(const MixedModel& model, double t,
                                  std::span<const double> x_m,
                                  const std::function<double(std::span<const double>)>& f,
                                  double I, double X, int nodes_per_axis = 48);

struct PtEstimate {
  McEstimate est;
  double bias_scale = 0.0;  // order of the trapezoid-integral bias, t^2/K
  int substeps = 0;
};

// Monte-Carlo semigroup evaluation: draws (I_t, X_t) from the chained exact
// sampler and applies the closed-form kernel.
PtEstimate evaluate_Pt(const MixedModel& model, double t, std::span<const double> x,
                       const ProductTestFunction& f, std::uint64_t n_draws, int substeps,
                       const StreamId& stream, int workers = -1);

// Transition density of the block w.r.t. mu(dy) = dy^(m) y_{m+1}^(b/g-1) dy_{m+1},
// by quadrature of the Gaussian product against the inverted integral density.
double mixed_density(const MixedModel& model, double t, std::span<const double> x,
                     std::span<const double> y, int w_grid_size = 800);
double mixed_density_given(const MixedModel& model, double t, std::span<const double> x,
                           std::span<const double> y, const CondIntegralDensity& wd);

// D^order w.r.t. x_axis (axis < m, order 1..3) of the density above.
double mixed_density_derivative(const MixedModel& model, double t, std::span<const double> x,
                                std::span<const double> y, int axis, int order,
                                int w_grid_size = 800);
double mixed_density_derivative_given(const MixedModel& model, double t,
                                      std::span<const double> x, std::span<const double> y,
                                      int axis, int order, const CondIntegralDensity& wd);

struct ResolventEstimate {
  McEstimate est;
  double horizon = 0.0;
  double truncation_bound = 0.0;  // tail mass bound e^(-lambda T) ||f|| / lambda
};

// R_lambda f(x) = int_0^inf e^(-lambda t) P_t f(x) dt, by pathwise time
// quadrature up to a horizon putting the tail below tol.
ResolventEstimate resolvent_Rlambda(const MixedModel& model, double lambda,
                                    std::span<const double> x, const ProductTestFunction& f,
                                    double tol, std::uint64_t n_paths, int steps_per_unit,
                                    const StreamId& stream, int workers = -1);

struct IbpEstimate {
  McEstimate main;          // centered-Poisson-weight estimator of D_{x_{m+1}} P_t f
  double bias_bound = 0.0;  // 4 ||f|| t E[1/I_t]; exactly 0 for kernel-I-free f
  double mean_inv_integral = 0.0;
  double acceptance_rate = 1.0;   // endpoint-matching acceptance rate
  double window_halfwidth = 0.0;  // endpoint matching window
};

// Integration-by-parts derivative estimator: exact joint (X_t, N0) draw, the
// integral from an endpoint-matched substep bridge, weight (N0 - z')/z' with
// z' = z_{m+1}/(gamma t).
IbpEstimate ibp_derivative(const MixedModel& model, double t, std::span<const double> z,
                           const ProductTestFunction& f, std::uint64_t n_draws,
                           const StreamId& stream, int workers = -1, int substeps = 16);

// Central finite difference of evaluate_Pt in the catalyst coordinate.
McEstimate fd_Pt_derivative(const MixedModel& model, double t, std::span<const double> z,
                            const ProductTestFunction& f, double h, std::uint64_t n_draws,
                            int substeps, const StreamId& stream, int workers = -1);

// First-order excursion difference of a functional G(I, X).
double difference_operator(const std::function<double(double, double)>& G, double I, double X,
                           double delta_I, double delta_X, int order = 1);

}  // namespace catnet

#endif  // CATNET_SEMIGROUP_HPP
