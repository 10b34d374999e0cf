#include "catnet/semigroup.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "catnet/parallel.hpp"
#include "catnet/special.hpp"

namespace catnet {

MixedModel::MixedModel(std::vector<double> b0_, std::vector<double> gamma0_, CirParams cat_)
    : b0(std::move(b0_)), gamma0(std::move(gamma0_)), cat(cat_) {
  if (b0.size() != gamma0.size())
    throw std::invalid_argument("MixedModel: b0 and gamma0 sizes differ");
  for (double g : gamma0)
    if (!(g > 0.0)) throw std::invalid_argument("MixedModel: gamma0 > 0 required");
}

double GaussPolyFactor::value(double u) const {
  return (p0 + u * (p1 + u * p2)) * std::exp(-a * u * u - c * u);
}

double GaussPolyFactor::d1(double u) const {
  double e = std::exp(-a * u * u - c * u);
  double poly = p0 + u * (p1 + u * p2);
  return (p1 + 2.0 * p2 * u - (2.0 * a * u + c) * poly) * e;
}

double GaussPolyFactor::d2(double u) const {
  double e = std::exp(-a * u * u - c * u);
  double poly = p0 + u * (p1 + u * p2);
  double dpoly = p1 + 2.0 * p2 * u;
  double lin = 2.0 * a * u + c;
  return (2.0 * p2 - 2.0 * a * poly - lin * dpoly - lin * (dpoly - lin * poly)) * e;
}

double GaussPolyFactor::sup_abs(double domain_lo) const {
  if (a == 0.0 && (p1 != 0.0 || p2 != 0.0)) return std::numeric_limits<double>::infinity();
  if (a == 0.0 && c < 0.0) return std::numeric_limits<double>::infinity();
  if (a == 0.0 && c > 0.0 && domain_lo == -std::numeric_limits<double>::infinity())
    return std::numeric_limits<double>::infinity();
  if (a == 0.0 && c == 0.0) return std::fabs(p0);
  double center = (a > 0.0) ? -c / (2.0 * a) : 0.0;
  double span = 40.0 / std::sqrt(1.0 + 2.0 * a);
  double lo = std::max(domain_lo, center - span);
  double hi = center + span;
  if (domain_lo > -std::numeric_limits<double>::infinity()) hi = std::max(hi, domain_lo + 2.0 * span);
  double best = std::max(std::fabs(value(lo)), std::fabs(value(hi)));
  const int n = 4000;
  for (int i = 1; i < n; ++i) best = std::max(best, std::fabs(value(lo + (hi - lo) * i / n)));
  return best;
}

double gauss_expect(const GaussPolyFactor& phi, double mean, double var) {
  if (var < 0.0) throw std::invalid_argument("gauss_expect: var >= 0");
  if (var == 0.0) return phi.value(mean);
  double d = 1.0 + 2.0 * phi.a * var;
  double m = (mean - phi.c * var) / d;
  double s2 = var / d;
  double expo = (phi.c * phi.c * var - 2.0 * phi.c * mean - 2.0 * phi.a * mean * mean) / (2.0 * d);
  double mass = std::exp(expo) / std::sqrt(d);
  return mass * (phi.p0 + phi.p1 * m + phi.p2 * (m * m + s2));
}

double ProductTestFunction::cat_value(double x) const {
  switch (cat_kind) {
    case CatKind::One:
      return 1.0;
    case CatKind::Identity:
      return x;
    case CatKind::Poly:
      return cat_poly.value(x);
  }
  return 1.0;
}

double ProductTestFunction::value(std::span<const double> y) const {
  double v = cat_value(y[coord.size()]);
  for (std::size_t j = 0; j < coord.size(); ++j) v *= coord[j].value(y[j]);
  return v;
}

bool ProductTestFunction::kernel_i_free() const {
  for (const auto& phi : coord)
    if (!phi.plain_affine()) return false;
  return true;
}

double ProductTestFunction::sup_abs() const {
  if (cat_kind == CatKind::Identity) return std::numeric_limits<double>::infinity();
  double s = (cat_kind == CatKind::One) ? 1.0 : cat_poly.sup_abs(0.0);
  for (const auto& phi : coord) s *= phi.sup_abs(-std::numeric_limits<double>::infinity());
  return s;
}

ProductTestFunction make_constant_one(int m) {
  ProductTestFunction f;
  f.coord.assign(m, GaussPolyFactor{});
  f.cat_kind = ProductTestFunction::CatKind::One;
  f.name = "one";
  return f;
}

ProductTestFunction make_cat_identity(int m) {
  ProductTestFunction f;
  f.coord.assign(m, GaussPolyFactor{});
  f.cat_kind = ProductTestFunction::CatKind::Identity;
  f.name = "cat_identity";
  return f;
}

ProductTestFunction make_coord_linear(int m, int axis) {
  ProductTestFunction f;
  f.coord.assign(m, GaussPolyFactor{});
  f.coord[axis] = GaussPolyFactor{0.0, 1.0, 0.0, 0.0, 0.0};
  f.cat_kind = ProductTestFunction::CatKind::One;
  f.name = "coord_" + std::to_string(axis + 1);
  return f;
}

ProductTestFunction make_gauss_exp(int m) {
  ProductTestFunction f;
  f.coord.assign(m, GaussPolyFactor{1.0, 0.0, 0.0, 1.0, 0.0});
  f.cat_kind = ProductTestFunction::CatKind::Poly;
  f.cat_poly = GaussPolyFactor{1.0, 0.0, 0.0, 0.0, 1.0};
  f.name = "gauss_exp";
  return f;
}

TestFunctionView as_test_function(std::vector<GaussPolyFactor> factors) {
  auto prod_except = [factors](int skip, std::span<const double> x) {
    double v = 1.0;
    for (std::size_t k = 0; k < factors.size(); ++k)
      if (static_cast<int>(k) != skip) v *= factors[k].value(x[k]);
    return v;
  };
  TestFunctionView view;
  view.value = [factors](std::span<const double> x) {
    double v = 1.0;
    for (std::size_t k = 0; k < factors.size(); ++k) v *= factors[k].value(x[k]);
    return v;
  };
  view.partial = [factors, prod_except](int i, std::span<const double> x) {
    return factors[i].d1(x[i]) * prod_except(i, x);
  };
  view.partial2 = [factors, prod_except](int i, std::span<const double> x) {
    return factors[i].d2(x[i]) * prod_except(i, x);
  };
  return view;
}

double gaussian_kernel_G(const MixedModel& model, double t, std::span<const double> x_m,
                         const ProductTestFunction& f, double I, double X) {
  if (I < 0.0) throw std::invalid_argument("gaussian_kernel_G: I >= 0");
  if (static_cast<int>(f.coord.size()) != model.m())
    throw std::invalid_argument("gaussian_kernel_G: arity mismatch");
  double v = f.cat_value(X);
  for (int j = 0; j < model.m(); ++j)
    v *= gauss_expect(f.coord[j], x_m[j] + model.b0[j] * t, 2.0 * model.gamma0[j] * I);
  return v;
}

double gaussian_kernel_estimate(const MixedModel& model, double t, std::span<const double> x_m,
                                const std::function<double(std::span<const double>)>& f,
                                double I, double X, Rng& rng) {
  std::vector<double> y(model.m() + 1);
  for (int j = 0; j < model.m(); ++j)
    y[j] = rng.normal(x_m[j] + model.b0[j] * t, std::sqrt(2.0 * model.gamma0[j] * I));
  y[model.m()] = X;
  return f(y);
}

double gaussian_kernel_quadrature(const MixedModel& model, double t,
                                  std::span<const double> x_m,
                                  const std::function<double(std::span<const double>)>& f,
                                  double I, double X, int nodes_per_axis) {
  const int m = model.m();
  std::vector<std::vector<double>> nodes(m), weights(m);
  for (int j = 0; j < m; ++j) {
    double mu = x_m[j] + model.b0[j] * t;
    double sd = std::sqrt(2.0 * model.gamma0[j] * I);
    if (sd == 0.0) {
      nodes[j] = {mu};
      weights[j] = {1.0};
      continue;
    }
    gauss_legendre(nodes_per_axis, mu - 9.0 * sd, mu + 9.0 * sd, nodes[j], weights[j]);
    for (int k = 0; k < nodes_per_axis; ++k) {
      double zn = (nodes[j][k] - mu) / sd;
      weights[j][k] *= std::exp(-0.5 * zn * zn) / (sd * 2.5066282746310005);
    }
  }
  std::vector<double> y(m + 1);
  y[m] = X;
  std::vector<std::size_t> idx(m, 0);
  double acc = 0.0;
  bool done = false;
  while (!done) {
    double w = 1.0;
    for (int j = 0; j < m; ++j) {
      y[j] = nodes[j][idx[j]];
      w *= weights[j][idx[j]];
    }
    acc += w * f(y);
    done = true;
    for (int j = 0; j < m; ++j) {
      if (++idx[j] < nodes[j].size()) {
        done = false;
        break;
      }
      idx[j] = 0;
    }
  }
  return acc;
}

namespace {

constexpr std::uint64_t kBlock = 8192;

std::string stream_label(const StreamId& s) {
  return std::to_string(s.master_seed) + "/" + s.purpose + "/" + std::to_string(s.index);
}

}  // namespace

PtEstimate evaluate_Pt(const MixedModel& model, double t, std::span<const double> x,
                       const ProductTestFunction& f, std::uint64_t n_draws, int substeps,
                       const StreamId& stream, int workers) {
  if (!(t > 0.0)) throw std::invalid_argument("evaluate_Pt: t > 0");
  const int m = model.m();
  std::vector<double> x_m(x.begin(), x.begin() + m);
  const double x_cat = x[m];
  std::uint64_t n_blocks = (n_draws + kBlock - 1) / kBlock;
  std::vector<Accumulator> acc(n_blocks);
  parallel_blocks(
      n_blocks,
      [&](std::uint64_t bi) {
        Rng rng(stream.master_seed, stream.purpose, stream.index + bi);
        std::uint64_t lo = bi * kBlock, hi = std::min(n_draws, lo + kBlock);
        for (std::uint64_t i = lo; i < hi; ++i) {
          IntegralEndpoint ie = sample_integral_endpoint(model.cat, t, x_cat, substeps, rng);
          acc[bi].add(gaussian_kernel_G(model, t, x_m, f, ie.integral, ie.x_t));
        }
      },
      workers);
  Accumulator total;
  for (const auto& a : acc) total.merge(a);
  PtEstimate out;
  out.est = total.estimate(stream_label(stream));
  out.bias_scale = f.kernel_i_free() ? 0.0 : t * t / substeps;
  out.substeps = substeps;
  return out;
}

namespace {

double w_quadrature(const CondIntegralDensity& wd, const std::function<double(double)>& g) {
  double acc = 0.0, prev_w = 0.0, prev_v = 0.0;
  for (std::size_t i = 0; i < wd.w.size(); ++i) {
    double v = wd.value[i] > 0.0 ? wd.value[i] * g(wd.w[i]) : 0.0;
    acc += 0.5 * (prev_v + v) * (wd.w[i] - prev_w);
    prev_w = wd.w[i];
    prev_v = v;
  }
  return acc;
}

double gauss_prod(const MixedModel& model, double t, std::span<const double> x,
                  std::span<const double> y, double w) {
  double v = 1.0;
  for (int j = 0; j < model.m(); ++j) {
    double var = 2.0 * model.gamma0[j] * w;
    double d = y[j] - x[j] - model.b0[j] * t;
    v *= std::exp(-0.5 * d * d / var) / std::sqrt(6.283185307179586 * var);
  }
  return v;
}

}  // namespace

double mixed_density_given(const MixedModel& model, double t, std::span<const double> x,
                           std::span<const double> y, const CondIntegralDensity& wd) {
  const int m = model.m();
  if (x[m] < 0.0 || y[m] < 0.0) throw std::invalid_argument("mixed_density: catalyst >= 0");
  double q = q_density(model.cat, t, x[m], y[m], 0);
  double norm = wd.normalization();
  if (!(norm > 0.0)) throw std::runtime_error("mixed_density: inverted density degenerate");
  double integral =
      w_quadrature(wd, [&](double w) { return gauss_prod(model, t, x, y, w); });
  return q * integral / norm;
}

double mixed_density(const MixedModel& model, double t, std::span<const double> x,
                     std::span<const double> y, int w_grid_size) {
  ConditionedIntegralSpec spec(model.cat, t, x[model.m()], y[model.m()]);
  auto wd = invert_integral_density(spec, default_integral_grid(spec, w_grid_size));
  if (wd.any_unstable())
    throw std::runtime_error("mixed_density: transform inversion unstable on the grid");
  return mixed_density_given(model, t, x, y, wd);
}

double mixed_density_derivative_given(const MixedModel& model, double t,
                                      std::span<const double> x, std::span<const double> y,
                                      int axis, int order, const CondIntegralDensity& wd) {
  const int m = model.m();
  if (axis < 0 || axis >= m) throw std::invalid_argument("mixed_density_derivative: axis < m");
  if (order < 1 || order > 3) throw std::invalid_argument("mixed_density_derivative: order 1..3");
  double q = q_density(model.cat, t, x[m], y[m], 0);
  double norm = wd.normalization();
  if (!(norm > 0.0)) throw std::runtime_error("mixed_density_derivative: degenerate density");
  const double d = y[axis] - x[axis] - model.b0[axis] * t;
  const double g2 = 2.0 * model.gamma0[axis];
  auto integrand = [&](double w) {
    double base = gauss_prod(model, t, x, y, w);
    double gw = g2 * w;
    switch (order) {
      case 1:
        return d / gw * base;
      case 2:
        return (d * d / gw - 1.0) / gw * base;
      default:
        return (d * d * d / gw - 3.0 * d) / (gw * gw) * base;
    }
  };
  return q * w_quadrature(wd, integrand) / norm;
}

double mixed_density_derivative(const MixedModel& model, double t, std::span<const double> x,
                                std::span<const double> y, int axis, int order,
                                int w_grid_size) {
  ConditionedIntegralSpec spec(model.cat, t, x[model.m()], y[model.m()]);
  auto wd = invert_integral_density(spec, default_integral_grid(spec, w_grid_size));
  if (wd.any_unstable())
    throw std::runtime_error("mixed_density_derivative: transform inversion unstable");
  return mixed_density_derivative_given(model, t, x, y, axis, order, wd);
}

ResolventEstimate resolvent_Rlambda(const MixedModel& model, double lambda,
                                    std::span<const double> x, const ProductTestFunction& f,
                                    double tol, std::uint64_t n_paths, int steps_per_unit,
                                    const StreamId& stream, int workers) {
  if (!(lambda >= 1.0)) throw std::invalid_argument("resolvent_Rlambda: lambda >= 1");
  if (!(tol > 0.0)) throw std::invalid_argument("resolvent_Rlambda: tol > 0");
  double sup_f = f.sup_abs();
  if (!std::isfinite(sup_f))
    throw std::invalid_argument("resolvent_Rlambda: f must be bounded");
  double horizon = std::max(1.0, std::log(std::max(sup_f, 1e-12) / (lambda * tol)) / lambda);
  const int m = model.m();
  std::vector<double> x_m(x.begin(), x.begin() + m);
  const double x_cat = x[m];
  const std::uint64_t steps = static_cast<std::uint64_t>(std::ceil(horizon * steps_per_unit));
  const double dt = horizon / static_cast<double>(steps);

  std::uint64_t block = 256;
  std::uint64_t n_blocks = (n_paths + block - 1) / block;
  std::vector<Accumulator> acc(n_blocks);
  parallel_blocks(
      n_blocks,
      [&](std::uint64_t bi) {
        Rng rng(stream.master_seed, stream.purpose, stream.index + bi);
        std::uint64_t lo = bi * block, hi = std::min(n_paths, lo + block);
        for (std::uint64_t i = lo; i < hi; ++i) {
          double cur = x_cat, integral = 0.0;
          double path_val = 0.5 * gaussian_kernel_G(model, 0.0, x_m, f, 0.0, cur);
          for (std::uint64_t k = 1; k <= steps; ++k) {
            EndpointSample es = sample_endpoint(model.cat, dt, cur, rng);
            integral += 0.5 * (cur + es.x_t) * dt;
            cur = es.x_t;
            double g = gaussian_kernel_G(model, k * dt, x_m, f, integral, cur);
            double wgt = (k == steps) ? 0.5 : 1.0;
            path_val += wgt * std::exp(-lambda * k * dt) * g;
          }
          acc[bi].add(path_val * dt);
        }
      },
      workers);
  Accumulator total;
  for (const auto& a : acc) total.merge(a);
  ResolventEstimate out;
  out.est = total.estimate(stream_label(stream));
  out.horizon = horizon;
  out.truncation_bound = std::exp(-lambda * horizon) * sup_f / lambda;
  return out;
}

IbpEstimate ibp_derivative(const MixedModel& model, double t, std::span<const double> z,
                           const ProductTestFunction& f, std::uint64_t n_draws,
                           const StreamId& stream, int workers, int substeps) {
  const int m = model.m();
  if (!(z[m] > 0.0)) throw std::invalid_argument("ibp_derivative: z_{m+1} > 0 required");
  if (!(t > 0.0)) throw std::invalid_argument("ibp_derivative: t > 0");
  std::vector<double> z_m(z.begin(), z.begin() + m);
  const double z_cat = z[m];
  const double gt = model.cat.gamma * t;
  const double z_prime = z_cat / gt;

  // Endpoint-matching window: 2% of the central quantile spread of X_t.
  double q01 = endpoint_quantile(model.cat, t, z_cat, 0.01);
  double q99 = endpoint_quantile(model.cat, t, z_cat, 0.99);
  const double half_width = 0.01 * (q99 - q01);
  const int max_tries = 600;

  std::uint64_t block = 2048;
  std::uint64_t n_blocks = (n_draws + block - 1) / block;
  std::vector<Accumulator> acc_main(n_blocks), acc_inv(n_blocks), acc_tries(n_blocks),
      acc_accept(n_blocks);
  parallel_blocks(
      n_blocks,
      [&](std::uint64_t bi) {
        Rng rng(stream.master_seed, stream.purpose, stream.index + bi);
        std::uint64_t lo = bi * block, hi = std::min(n_draws, lo + block);
        for (std::uint64_t i = lo; i < hi; ++i) {
          EndpointSample es = sample_endpoint(model.cat, t, z_cat, rng);
          double best_gap = std::numeric_limits<double>::infinity();
          double integral = 0.0;
          int tries = 0;
          bool accepted = false;
          while (tries < max_tries) {
            ++tries;
            IntegralEndpoint ie = sample_integral_endpoint(model.cat, t, z_cat, substeps, rng);
            double gap = std::fabs(ie.x_t - es.x_t);
            if (gap < best_gap) {
              best_gap = gap;
              integral = ie.integral;
            }
            if (gap <= half_width) {
              accepted = true;
              break;
            }
          }
          double weight = (static_cast<double>(es.n0) - z_prime) / z_prime;
          double g = gaussian_kernel_G(model, t, z_m, f, integral, es.x_t);
          acc_main[bi].add(weight * g / gt);
          acc_inv[bi].add(1.0 / integral);
          acc_tries[bi].add(static_cast<double>(tries));
          acc_accept[bi].add(accepted ? 1.0 : 0.0);
        }
      },
      workers);
  Accumulator main, inv, tries, accepts;
  for (std::uint64_t bi = 0; bi < n_blocks; ++bi) {
    main.merge(acc_main[bi]);
    inv.merge(acc_inv[bi]);
    tries.merge(acc_tries[bi]);
    accepts.merge(acc_accept[bi]);
  }
  IbpEstimate out;
  out.main = main.estimate(stream_label(stream));
  out.mean_inv_integral = inv.mean();
  out.bias_bound =
      f.kernel_i_free() ? 0.0 : 4.0 * f.sup_abs() * t * inv.mean();
  out.acceptance_rate = accepts.mean();
  out.window_halfwidth = half_width;
  return out;
}

McEstimate fd_Pt_derivative(const MixedModel& model, double t, std::span<const double> z,
                            const ProductTestFunction& f, double h, std::uint64_t n_draws,
                            int substeps, const StreamId& stream, int workers) {
  const int m = model.m();
  if (z[m] - h < 0.0) throw std::invalid_argument("fd_Pt_derivative: z_{m+1} - h < 0");
  std::vector<double> zp(z.begin(), z.end()), zm(z.begin(), z.end());
  zp[m] += h;
  zm[m] -= h;
  StreamId sp = stream, sm = stream;
  sp.purpose += "/fd+";
  sm.purpose += "/fd-";
  PtEstimate up = evaluate_Pt(model, t, zp, f, n_draws, substeps, sp, workers);
  PtEstimate dn = evaluate_Pt(model, t, zm, f, n_draws, substeps, sm, workers);
  McEstimate out;
  out.value = (up.est.value - dn.est.value) / (2.0 * h);
  out.std_error = std::sqrt(up.est.std_error * up.est.std_error +
                            dn.est.std_error * dn.est.std_error) /
                  (2.0 * h);
  out.n = n_draws;
  out.stream = stream_label(stream);
  return out;
}

double difference_operator(const std::function<double(double, double)>& G, double I, double X,
                           double delta_I, double delta_X, int order) {
  if (order != 1)
    throw std::invalid_argument("difference_operator: only first order is implemented");
  return G(I + delta_I, X + delta_X) - G(I, X);
}

}  // namespace catnet
