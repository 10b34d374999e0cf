#include "catnet/network.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace catnet {

void BranchingNetwork::finalize() {
  if (d < 1) throw std::invalid_argument("BranchingNetwork: d >= 1 required");
  if (static_cast<int>(gamma.size()) != d || static_cast<int>(b.size()) != d)
    throw std::invalid_argument("BranchingNetwork: need d gamma and b fields");
  catalyst_of.assign(d, -1);
  reactants.assign(d, {});
  is_catalyst.assign(d, 0);
  is_reactant.assign(d, 0);
  for (auto [i, j] : edges) {
    if (i < 0 || i >= d || j < 0 || j >= d)
      throw std::invalid_argument("BranchingNetwork: edge index out of range");
    is_catalyst[i] = 1;
    // A doubly-catalyzed vertex fails validate_network; keep the first edge
    // so the structure stays usable for reporting.
    if (catalyst_of[j] < 0) {
      catalyst_of[j] = i;
      is_reactant[j] = 1;
      reactants[i].push_back(j);
    }
  }
}

ValidationReport validate_network(const BranchingNetwork& net) {
  ValidationReport rep;
  std::vector<int> in_degree(net.d, 0);
  for (auto [i, j] : net.edges) {
    if (i == j)
      rep.violations.push_back({"no self-catalysis", "edge (" + std::to_string(i + 1) + "," +
                                                         std::to_string(j + 1) + ")"});
    if (j >= 0 && j < net.d) ++in_degree[j];
  }
  for (int j = 0; j < net.d; ++j) {
    if (in_degree[j] > 1)
      rep.violations.push_back({"vertex catalyzed by more than one edge",
                                "vertex " + std::to_string(j + 1) + " has " +
                                    std::to_string(in_degree[j]) + " catalysts"});
  }
  std::sort(rep.violations.begin(), rep.violations.end(),
            [](const Violation& a, const Violation& b) {
              return std::tie(a.clause, a.detail) < std::tie(b.clause, b.detail);
            });
  return rep;
}

ValidationReport check_coefficients(const BranchingNetwork& net,
                                    std::span<const std::vector<double>> grid) {
  if (grid.empty()) throw std::invalid_argument("check_coefficients: no samples");
  ValidationReport rep;
  // Fit the linear-growth constant, then test the sign clauses pointwise.
  double c_fit = 0.0;
  for (const auto& x : grid) {
    double nrm = 0.0;
    for (double v : x) nrm += v * v;
    nrm = std::sqrt(nrm);
    for (int i = 0; i < net.d; ++i)
      c_fit = std::max(c_fit, std::fabs(net.b[i](x)) / (1.0 + nrm));
  }
  if (!std::isfinite(c_fit))
    rep.violations.push_back({"drift growth unbounded", "no finite c with |b| <= c(1+|x|)"});
  for (const auto& x : grid) {
    for (int i = 0; i < net.d; ++i) {
      double g = net.gamma[i](x);
      if (!(g > 0.0)) {
        rep.violations.push_back({"gamma not strictly positive",
                                  "gamma_" + std::to_string(i + 1) + " = " + std::to_string(g) +
                                      " at grid point"});
      }
      if (x[i] == 0.0 && !(net.b[i](x) > 0.0)) {
        rep.violations.push_back({"drift not inward on the boundary",
                                  "b_" + std::to_string(i + 1) + " = " +
                                      std::to_string(net.b[i](x)) + " with x_" +
                                      std::to_string(i + 1) + " = 0"});
      }
    }
  }
  return rep;
}

bool in_state_space(const BranchingNetwork& net, std::span<const double> x) {
  for (auto [i, j] : net.edges)
    if (x[i] + x[j] <= 0.0) return false;
  return true;
}

namespace {

double fd_partial_of(const TestFunctionView& f, int i, std::span<const double> x, int order) {
  double nrm = 0.0;
  for (double v : x) nrm += v * v;
  // Second differences need a larger step than first ones before round-off
  // (4 eps |f| / h^2) drowns the quotient.
  double h = (order == 1 ? 1e-5 : 2e-4) * (1.0 + std::sqrt(nrm));
  std::vector<double> a(x.begin(), x.end()), b(x.begin(), x.end());
  a[i] += h;
  b[i] -= h;
  if (order == 1) return (f.value(a) - f.value(b)) / (2.0 * h);
  return (f.value(a) - 2.0 * f.value(x) + f.value(b)) / (h * h);
}

}  // namespace

double apply_generator(const BranchingNetwork& net, const TestFunctionView& f,
                       std::span<const double> x) {
  for (double v : x)
    if (v < 0.0) throw std::invalid_argument("apply_generator: x outside the orthant");
  double acc = 0.0;
  for (int j = 0; j < net.d; ++j) {
    double fjj = f.partial2 ? f.partial2(j, x) : fd_partial_of(f, j, x, 2);
    double fj = f.partial ? f.partial(j, x) : fd_partial_of(f, j, x, 1);
    double diff = net.gamma[j](x) * x[j];
    if (net.is_reactant[j]) diff *= x[net.catalyst_of[j]];
    acc += diff * fjj + net.b[j](x) * fj;
  }
  return acc;
}

double effective_gamma(const BranchingNetwork& net, int j, std::span<const double> x,
                       const std::set<int>& n1) {
  double g = net.gamma[j](x);
  if (n1.count(j)) return x[j] * g;
  if (net.is_reactant[j]) return x[net.catalyst_of[j]] * g;
  return g;
}

LocalModel localize(const BranchingNetwork& net, std::span<const double> x0) {
  if (!in_state_space(net, x0)) throw std::invalid_argument("localize: x0 not in the state space");
  LocalModel m;
  m.d = net.d;
  m.x0.assign(x0.begin(), x0.end());
  m.catalyst_of = net.catalyst_of;
  for (int i = 0; i < net.d; ++i)
    if (x0[i] == 0.0) m.zero_set.insert(i);
  for (int i : m.zero_set)
    if (net.is_catalyst[i])
      for (int j : net.reactants[i]) m.n1.insert(j);
  for (int j = 0; j < net.d; ++j) {
    bool zc = m.zero_set.count(j) && net.is_catalyst[j];
    if (!m.n1.count(j) && !zc) m.n2.insert(j);
  }

  m.gamma0.resize(net.d);
  for (int j = 0; j < net.d; ++j) {
    m.gamma0[j] = effective_gamma(net, j, x0, m.n1);
    if (!(m.gamma0[j] > 0.0))
      throw std::logic_error("localize: frozen gamma vanished although x0 lies in S");
  }

  double delta;
  if (!m.zero_set.empty()) {
    delta = std::numeric_limits<double>::infinity();
    for (int i : m.zero_set) delta = std::min(delta, net.b[i](x0));
    if (!(delta > 0.0))
      throw std::invalid_argument("localize: boundary drift not inward at x0");
  } else {
    // No vanishing coordinate: the floor scale is not pinned down by the
    // construction; unit scale keeps b0 positive off N1.
    delta = 1.0;
  }
  m.b0.resize(net.d);
  for (int j = 0; j < net.d; ++j) {
    double bj = net.b[j](x0);
    m.b0[j] = m.n1.count(j) ? bj : std::max(bj, 0.5 * delta);
  }

  m.m0 = 1.0;
  for (int j = 0; j < net.d; ++j) {
    m.m0 = std::max({m.m0, m.gamma0[j], 1.0 / m.gamma0[j], std::fabs(m.b0[j])});
    if (!m.n1.count(j)) m.m0 = std::max(m.m0, 1.0 / m.b0[j]);
  }

  m.constrained.resize(net.d);
  m.mu_exponents.resize(net.d);
  for (int j = 0; j < net.d; ++j) {
    bool on_n1 = m.n1.count(j) > 0;
    m.constrained[j] = on_n1 ? 0 : 1;
    m.mu_exponents[j] = on_n1 ? 0.0 : m.b0[j] / m.gamma0[j] - 1.0;
  }
  return m;
}

namespace {

// Deterministic low-discrepancy points in the unit ball, via a Kronecker
// sequence on (radius, direction) coordinates.
std::vector<std::vector<double>> ball_points(int dim, int count) {
  // Generalized golden-ratio sequence.
  double g = 2.0;
  for (int it = 0; it < 64; ++it) g = std::pow(1.0 + g, 1.0 / (dim + 1.0));
  std::vector<double> alpha(dim + 1);
  for (int k = 0; k <= dim; ++k) alpha[k] = std::fmod(std::pow(1.0 / g, k + 1.0), 1.0);
  std::vector<std::vector<double>> pts(count, std::vector<double>(dim));
  std::vector<double> u(dim + 1);
  for (int n = 0; n < count; ++n) {
    for (int k = 0; k <= dim; ++k) u[k] = std::fmod(0.5 + alpha[k] * (n + 1), 1.0);
    // Radius with volume-uniform law, direction from independent normals via
    // inverse-free Box-Muller on paired uniforms.
    double r = std::pow(u[0], 1.0 / dim);
    std::vector<double> dir(dim);
    double nrm = 0.0;
    for (int k = 0; k < dim; ++k) {
      double a = 6.283185307179586 * u[(k % dim) + 1];
      double rr = std::sqrt(-2.0 * std::log(std::max(1e-12, std::fmod(u[((k + 1) % dim) + 1] + 0.37 * (k + 1), 1.0))));
      dir[k] = (k % 2 == 0) ? rr * std::cos(a) : rr * std::sin(a);
      nrm += dir[k] * dir[k];
    }
    nrm = std::sqrt(std::max(nrm, 1e-12));
    for (int k = 0; k < dim; ++k) pts[n][k] = r * dir[k] / nrm;
  }
  return pts;
}

}  // namespace

OscillationReport oscillation_scan(const BranchingNetwork& net, std::span<const double> box_lo,
                                   std::span<const double> box_hi, int grid_per_axis,
                                   double radius, double eps0, int ball_points_n) {
  if (!(radius > 0.0)) throw std::invalid_argument("oscillation_scan: radius > 0");
  for (int k = 0; k < net.d; ++k)
    if (!(box_hi[k] > box_lo[k])) throw std::invalid_argument("oscillation_scan: degenerate region");
  auto offsets = ball_points(net.d, ball_points_n);

  OscillationReport rep;
  std::vector<int> idx(net.d, 0);
  std::vector<double> x(net.d), probe(net.d);
  bool done = false;
  while (!done) {
    for (int k = 0; k < net.d; ++k)
      x[k] = box_lo[k] + (box_hi[k] - box_lo[k]) * idx[k] / std::max(1, grid_per_axis - 1);
    double worst = 0.0;
    for (int i = 0; i < net.d; ++i) {
      double lo = std::numeric_limits<double>::infinity();
      double hi = -lo;
      auto probe_at = [&](std::span<const double> p) {
        double v = net.gamma[i](p);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      };
      probe_at(x);
      for (const auto& off : offsets) {
        for (int k = 0; k < net.d; ++k) probe[k] = std::max(0.0, x[k] + radius * off[k]);
        probe_at(probe);
      }
      worst = std::max(worst, hi - lo);
    }
    OscillationReport::Entry e;
    e.point = x;
    e.oscillation = worst;
    e.flagged = worst >= eps0;
    rep.max_oscillation = std::max(rep.max_oscillation, worst);
    if (e.flagged) rep.all_below_threshold = false;
    rep.entries.push_back(std::move(e));

    done = true;
    for (int k = 0; k < net.d; ++k) {
      if (++idx[k] < grid_per_axis) {
        done = false;
        break;
      }
      idx[k] = 0;
    }
  }
  return rep;
}

}  // namespace catnet
