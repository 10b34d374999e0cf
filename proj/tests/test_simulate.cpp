#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>

#include "catnet/cir.hpp"
#include "catnet/mc.hpp"
#include "catnet/network.hpp"
#include "catnet/semigroup.hpp"
#include "catnet/simulate.hpp"

using namespace catnet;

namespace {

BranchingNetwork one_dim_cir(double b, double g) {
  BranchingNetwork net;
  net.d = 1;
  net.gamma = {ScalarField::constant(g)};
  net.b = {ScalarField::constant(b)};
  net.finalize();
  return net;
}

SimConfig base_cfg(std::vector<double> x0, Scheme scheme, int n, double horizon = 1.0) {
  SimConfig cfg;
  cfg.scheme = scheme;
  cfg.n = n;
  cfg.horizon = horizon;
  cfg.x0 = std::move(x0);
  cfg.seed = 2024;
  return cfg;
}

}  // namespace

TEST_CASE("euler: degenerate start stays put without drift or diffusion") {
  BranchingNetwork net = one_dim_cir(1.0, 1.0);
  net.b[0] = ScalarField::constant(0.0);  // equilibrium of the drift at 0
  TrajectoryBatch batch = simulate_euler(net, base_cfg({0.0}, Scheme::Euler, 32), 16);
  for (const auto& path : batch.paths)
    for (double v : path) CHECK(v == doctest::Approx(0.0));
}

TEST_CASE("euler: branching-with-immigration mean at unit time") {
  BranchingNetwork net = one_dim_cir(1.0, 1.0);
  TrajectoryBatch batch = simulate_euler(net, base_cfg({0.0}, Scheme::Euler, 256), 20000);
  Accumulator acc;
  std::size_t last = batch.times.size() - 1;
  for (const auto& path : batch.paths) acc.add(path[last]);
  // drift is constant so the discrete mean recursion is exact
  CHECK(std::fabs(acc.mean() - 1.0) < 4.0 * acc.std_error_of_mean());
}

TEST_CASE("euler: affine-drift mean follows the discrete recursion") {
  std::vector<double> theta{1.0, 1.0}, gam{1.0, 1.0};
  BranchingNetwork net = hypercyclic_preset(2, theta, std::span<const double>(gam));
  const int n = 128;
  TrajectoryBatch batch = simulate_euler(net, base_cfg({0.25, 1.0}, Scheme::Euler, n), 20000);
  Accumulator acc;
  std::size_t last = batch.times.size() - 1;
  for (const auto& path : batch.paths) acc.add(path[2 * last]);
  // exact mean recursion of the scheme: m <- m (1 - dt) + theta dt
  double m_disc = 0.25;
  for (int k = 0; k < n; ++k) m_disc = m_disc * (1.0 - 1.0 / n) + 1.0 / n;
  CHECK(std::fabs(acc.mean() - m_disc) < 4.0 * acc.std_error_of_mean());
  // and the continuous limit is within the O(1/n) bias of that recursion
  double m_cont = 1.0 - (1.0 - 0.25) * std::exp(-1.0);
  CHECK(std::fabs(m_disc - m_cont) < 2.0 / n);
}

TEST_CASE("frozen scheme: constant-coefficient endpoint law is exact") {
  BranchingNetwork net = one_dim_cir(1.0, 1.0);
  const double x0 = 1.5, horizon = 1.0;
  TrajectoryBatch batch = simulate_frozen(net, base_cfg({x0}, Scheme::Frozen, 8), 200000);
  CirParams p(1.0, 1.0);
  std::size_t last = batch.times.size() - 1;
  Accumulator mean_acc;
  std::array<Accumulator, 2> lap;
  const double lambdas[2] = {0.5, 2.0};
  for (const auto& path : batch.paths) {
    double v = path[last];
    mean_acc.add(v);
    for (int k = 0; k < 2; ++k) lap[k].add(std::exp(-lambdas[k] * v));
  }
  Moments cm = closed_moments(p, horizon, x0);
  CHECK(std::fabs(mean_acc.mean() - cm.mean) < 4.0 * mean_acc.std_error_of_mean());
  for (int k = 0; k < 2; ++k) {
    double target = laplace_endpoint(p, horizon, x0, lambdas[k]);
    CHECK(std::fabs(lap[k].mean() - target) < 4.0 * lap[k].std_error_of_mean());
  }
}

TEST_CASE("frozen scheme: catalyzed coordinate keeps its drift mean") {
  // edge (2,1) with constant coefficients: coordinate 1 is driven by the
  // integrated catalyst but its mean is x1 + b1 t exactly
  BranchingNetwork net;
  net.d = 2;
  net.edges = {{1, 0}};
  net.gamma = {ScalarField::constant(1.0), ScalarField::constant(1.0)};
  net.b = {ScalarField::constant(0.7), ScalarField::constant(1.0)};
  net.finalize();
  // start with the catalyst at zero so the Gaussian branch is exercised
  TrajectoryBatch batch = simulate_frozen(net, base_cfg({0.5, 0.0}, Scheme::Frozen, 64), 40000);
  std::size_t last = batch.times.size() - 1;
  Accumulator acc;
  for (const auto& path : batch.paths) acc.add(path[2 * last]);
  CHECK(std::fabs(acc.mean() - (0.5 + 0.7 * 1.0)) < 4.0 * acc.std_error_of_mean());
}

TEST_CASE("nonnegativity of constrained coordinates under both schemes") {
  std::vector<double> theta{1.0, 1.0}, gam{1.0, 1.0};
  BranchingNetwork net = hypercyclic_preset(2, theta, std::span<const double>(gam));
  for (Scheme scheme : {Scheme::Euler, Scheme::Frozen}) {
    TrajectoryBatch batch =
        scheme == Scheme::Euler ? simulate_euler(net, base_cfg({0.0, 1.0}, scheme, 64), 500)
                                : simulate_frozen(net, base_cfg({0.0, 1.0}, scheme, 64), 500);
    for (const auto& path : batch.paths)
      for (double v : path) CHECK(v >= 0.0);
  }
}

TEST_CASE("determinism: same seed and config give bitwise-identical batches") {
  std::vector<double> theta{1.0, 1.0}, gam{1.0, 1.0};
  BranchingNetwork net = hypercyclic_preset(2, theta, std::span<const double>(gam));
  SimConfig cfg = base_cfg({0.5, 1.0}, Scheme::Frozen, 32);
  TrajectoryBatch a = simulate_frozen(net, cfg, 64, 1);
  TrajectoryBatch b = simulate_frozen(net, cfg, 64, 4);
  REQUIRE(a.paths.size() == b.paths.size());
  for (std::size_t p = 0; p < a.paths.size(); ++p) {
    REQUIRE(a.paths[p].size() == b.paths[p].size());
    for (std::size_t i = 0; i < a.paths[p].size(); ++i) CHECK(a.paths[p][i] == b.paths[p][i]);
  }
}

TEST_CASE("pathwise resolvent: constant function and scheme agreement") {
  std::vector<double> theta{1.0, 1.0}, gam{1.0, 1.0};
  BranchingNetwork net = hypercyclic_preset(2, theta, std::span<const double>(gam));
  BoundedFunction one{[](std::span<const double>) { return 1.0; }, 1.0, "one"};
  SimConfig cfg = base_cfg({0.5, 1.0}, Scheme::Frozen, 64);
  McEstimate s = resolvent_S_lambda(net, cfg, 2.0, one, 1e-3, 4000);
  CHECK(std::fabs(s.value - 0.5) < 1e-3 + 4.0 * s.std_error);
}

TEST_CASE("frozen local model agrees with the kernel-route resolvent") {
  // localize the hypercyclic net at a boundary point; the local model is the
  // mixed single-catalyst block, so the pathwise resolvent must match the
  // kernel-based one
  std::vector<double> theta{1.0, 1.0}, gam{1.0, 1.0};
  BranchingNetwork net = hypercyclic_preset(2, theta, std::span<const double>(gam));
  std::vector<double> x0{0.0, 1.0};
  LocalModel local = localize(net, x0);
  REQUIRE(local.n1 == std::set<int>{1});

  // mixed model: driven coordinate = net coordinate 1, catalyst = 0
  MixedModel mixed({local.b0[1]}, {local.gamma0[1]}, CirParams(local.b0[0], local.gamma0[0]));
  const double lambda = 1.5;
  ProductTestFunction f;
  f.coord = {GaussPolyFactor{1.0, 0.0, 0.0, 1.0, 0.0}};
  f.cat_kind = ProductTestFunction::CatKind::Poly;
  f.cat_poly = GaussPolyFactor{1.0, 0.0, 0.0, 0.0, 1.0};
  f.name = "exp(-y1^2 - cat)";
  std::vector<double> mixed_x{x0[1], x0[0]};
  StreamId si{91, "local_vs_kernel", 0};
  ResolventEstimate kernel = resolvent_Rlambda(mixed, lambda, mixed_x, f, 1e-3, 60000, 64, si);

  BoundedFunction f_net{[&](std::span<const double> x) {
                          std::vector<double> y{x[1], x[0]};
                          return f.value(y);
                        },
                        1.0, "permuted"};
  SimConfig cfg = base_cfg(x0, Scheme::Frozen, 128);
  McEstimate pathwise = resolvent_S_lambda(local, cfg, lambda, f_net, 1e-3, 60000);
  double se = std::sqrt(kernel.est.std_error * kernel.est.std_error +
                        pathwise.std_error * pathwise.std_error);
  CHECK(std::fabs(kernel.est.value - pathwise.value) < 4.0 * se + 2e-3);
}

TEST_CASE("freezing error shrinks as the window count doubles") {
  // Lemma-style Cauchy proxy: integrate the same Brownian increments on a
  // fine grid while freezing the coefficients at resolution n vs 2n; the
  // sup distance between the two integrations shrinks stochastically in n.
  std::vector<double> theta{1.0, 1.0}, gam{1.0, 1.0};
  BranchingNetwork net = hypercyclic_preset(2, theta, std::span<const double>(gam));
  const int fine = 1024;
  const double horizon = 1.0;
  auto run_pair = [&](int n_freeze, Rng& rng, double& sup_gap) {
    const int d = net.d;
    std::vector<double> xa{0.5, 1.0}, xb{0.5, 1.0};
    std::vector<double> fa{0.5, 1.0}, fb{0.5, 1.0};  // frozen states (lagged)
    std::vector<double> fa_prev = fa, fb_prev = fb;
    sup_gap = 0.0;
    const double dt = horizon / fine;
    for (int k = 0; k < fine; ++k) {
      double time = k * dt;
      // refresh freeze points at the coarse window boundaries (lagged one window)
      int wa = static_cast<int>(time * n_freeze);
      int wb = static_cast<int>(time * 2 * n_freeze);
      (void)wa;
      (void)wb;
      if (k % (fine / n_freeze) == 0) {
        fa = fa_prev;
        fa_prev = xa;
      }
      if (k % (fine / (2 * n_freeze)) == 0) {
        fb = fb_prev;
        fb_prev = xb;
      }
      for (int j = 0; j < d; ++j) {
        double z = rng.normal();
        int cj = net.catalyst_of[j];
        double ra = net.gamma[j](fa) * std::max(fa[cj], 0.0) * std::max(xa[j], 0.0);
        double rb = net.gamma[j](fb) * std::max(fb[cj], 0.0) * std::max(xb[j], 0.0);
        xa[j] += net.b[j](fa) * dt + std::sqrt(2.0 * ra * dt) * z;
        xb[j] += net.b[j](fb) * dt + std::sqrt(2.0 * rb * dt) * z;
        xa[j] = std::max(xa[j], 0.0);
        xb[j] = std::max(xb[j], 0.0);
        sup_gap = std::max(sup_gap, std::fabs(xa[j] - xb[j]));
      }
    }
  };
  const int n_paths = 400;
  std::vector<double> medians;
  for (int n_freeze : {8, 16, 32}) {
    std::vector<double> gaps(n_paths);
    for (int p = 0; p < n_paths; ++p) {
      Rng rng(555, "cauchy" + std::to_string(n_freeze), p);
      run_pair(n_freeze, rng, gaps[p]);
    }
    std::nth_element(gaps.begin(), gaps.begin() + n_paths / 2, gaps.end());
    medians.push_back(gaps[n_paths / 2]);
  }
  CHECK(medians[1] < medians[0]);
  CHECK(medians[2] < medians[1]);
}

TEST_CASE("hypercyclic preset structure and validation") {
  std::vector<double> theta{1.0, 0.5, 2.0}, gam{1.0, 1.0, 1.0};
  BranchingNetwork net = hypercyclic_preset(3, theta, std::span<const double>(gam));
  CHECK(validate_network(net).valid());
  // coordinate i is catalyzed by i+1 cyclically
  CHECK(net.catalyst_of[0] == 1);
  CHECK(net.catalyst_of[1] == 2);
  CHECK(net.catalyst_of[2] == 0);
  std::vector<double> theta2{1.0, 1.0}, gam2{1.0, 1.0};
  BranchingNetwork d2 = hypercyclic_preset(2, theta2, std::span<const double>(gam2));
  CHECK(d2.edges.size() == 2);
  CHECK(d2.catalyst_of[0] == 1);
  CHECK(d2.catalyst_of[1] == 0);
  std::vector<double> bad_theta{1.0, 0.0};
  CHECK_THROWS(hypercyclic_preset(2, bad_theta, std::span<const double>(gam2)));
  std::vector<double> th1{1.0};
  std::vector<double> g1{1.0};
  CHECK_THROWS(hypercyclic_preset(1, th1, std::span<const double>(g1)));
}
