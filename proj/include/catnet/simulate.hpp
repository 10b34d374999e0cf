#ifndef CATNET_SIMULATE_HPP
#define CATNET_SIMULATE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "catnet/mc.hpp"
#include "catnet/network.hpp"
#include "catnet/parallel.hpp"
#include "catnet/rng.hpp"

namespace catnet {

enum class Scheme { Euler, Frozen };

struct SimConfig {
  Scheme scheme = Scheme::Frozen;
  int n = 64;                 // windows per unit time
  int substeps = 16;          // catalyst integral resolution inside a window
  double horizon = 1.0;
  std::vector<double> x0;
  std::uint64_t seed = 1;

  void validate(int d) const;
};

struct TrajectoryBatch {
  std::vector<double> times;              // shared grid
  int d = 0;
  std::vector<std::vector<double>> paths; // per path, row-major [time][coord]
  std::string scheme;
  std::uint64_t seed = 0;
  std::string stream_purpose;
};

// Coefficient view consumed by the Euler driver: drift and the full factor
// c_j(x) under the square root (dX_j = b_j dt + sqrt(2 c_j(x)) dB_j).
struct EulerView {
  int d = 0;
  std::function<void(std::span<const double>, std::span<double>)> drift;
  std::function<void(std::span<const double>, std::span<double>)> rate;
  std::vector<char> constrained;
};

EulerView make_euler_view(const BranchingNetwork& net);
EulerView make_euler_view(const LocalModel& model);

// Frozen-scheme view: per-window classification and frozen coefficients.
// For a network the split into exactly-sampled and catalyst-driven-Gaussian
// coordinates is recomputed from the zero set of the freeze point; for a
// local model it is fixed by the model.
struct FrozenView {
  int d = 0;
  std::vector<int> catalyst_of;  // graph structure (-1 when not a reactant)
  std::vector<char> constrained;
  // gamma_tilde(j, freeze_state, n1_member): frozen diffusion coefficient
  std::function<double(int, std::span<const double>, bool)> gamma_tilde;
  std::function<double(int, std::span<const double>)> drift;
  bool reclassify = true;        // recompute the zero-set split per window
  std::vector<char> fixed_n1;    // used when reclassify == false
};

FrozenView make_frozen_view(const BranchingNetwork& net);
FrozenView make_frozen_view(const LocalModel& model);

// Exact one-window transition of the scalar branching diffusion with
// constant drift b and rate g.  Nonnegative drift uses the Poisson-Gamma
// sampler; negative drift is handled by a symmetric drift split around the
// exact zero-immigration branching transition.
double branching_window(double x, double b, double g, double h, Rng& rng);

// --- drivers (templated visitors; visit(step_index, time, state)) ---

template <typename Visit>
void euler_path(const EulerView& view, const SimConfig& cfg, std::span<double> state, Rng& rng,
                Visit&& visit) {
  const int d = view.d;
  const double dt = 1.0 / cfg.n;
  const std::uint64_t steps = static_cast<std::uint64_t>(std::llround(cfg.horizon * cfg.n));
  std::vector<double> b(d), c(d);
  visit(0, 0.0, std::span<const double>(state.data(), d));
  for (std::uint64_t k = 1; k <= steps; ++k) {
    view.drift(state, b);
    view.rate(state, c);
    for (int j = 0; j < d; ++j) {
      double diff = c[j] > 0.0 ? std::sqrt(2.0 * c[j] * dt) : 0.0;
      state[j] += b[j] * dt + diff * rng.normal();
    }
    for (int j = 0; j < d; ++j)
      if (view.constrained[j] && state[j] < 0.0) state[j] = 0.0;
    visit(k, k * dt, std::span<const double>(state.data(), d));
  }
}

template <typename Visit>
void frozen_path(const FrozenView& view, const SimConfig& cfg, std::span<double> state,
                 Rng& rng, Visit&& visit) {
  const int d = view.d;
  const double h = 1.0 / cfg.n;
  const std::uint64_t windows = static_cast<std::uint64_t>(std::llround(cfg.horizon * cfg.n));
  std::vector<double> freeze(state.begin(), state.begin() + d);  // X_{[s]_n}; X_0 before time 0
  std::vector<double> prev(d), g_tilde(d), b_frozen(d), cat_integral(d, 0.0);
  std::vector<char> in_n1(d, 0);
  visit(0, 0.0, std::span<const double>(state.data(), d));
  for (std::uint64_t k = 0; k < windows; ++k) {
    // Classify at the freeze point and pin coefficients there.
    if (view.reclassify) {
      std::fill(in_n1.begin(), in_n1.end(), 0);
      for (int j = 0; j < d; ++j) {
        int c = view.catalyst_of[j];
        if (c >= 0 && freeze[c] <= 0.0) in_n1[j] = 1;
      }
    } else {
      in_n1.assign(view.fixed_n1.begin(), view.fixed_n1.end());
    }
    for (int j = 0; j < d; ++j) {
      g_tilde[j] = view.gamma_tilde(j, freeze, in_n1[j] != 0);
      b_frozen[j] = view.drift(j, freeze);
    }
    // Catalyst coordinates that drive a Gaussian update advance on substeps
    // so their trapezoid integral is available; every other coordinate gets
    // a single exact window transition.
    std::vector<char> needs_integral(d, 0);
    for (int j = 0; j < d; ++j)
      if (in_n1[j]) needs_integral[view.catalyst_of[j]] = 1;
    for (int j = 0; j < d; ++j) prev[j] = state[j];
    for (int j = 0; j < d; ++j) {
      if (in_n1[j]) continue;
      if (needs_integral[j]) {
        const double sub_h = h / cfg.substeps;
        double cur = state[j], integral = 0.0;
        for (int s = 0; s < cfg.substeps; ++s) {
          double nxt = branching_window(cur, b_frozen[j], g_tilde[j], sub_h, rng);
          integral += 0.5 * (cur + nxt) * sub_h;
          cur = nxt;
        }
        state[j] = cur;
        cat_integral[j] = integral;
      } else {
        state[j] = branching_window(state[j], b_frozen[j], g_tilde[j], h, rng);
      }
    }
    for (int j = 0; j < d; ++j) {
      if (!in_n1[j]) continue;
      double var = 2.0 * g_tilde[j] * cat_integral[view.catalyst_of[j]];
      state[j] = prev[j] + b_frozen[j] * h + (var > 0.0 ? std::sqrt(var) * rng.normal() : 0.0);
      if (view.constrained[j] && state[j] < 0.0) state[j] = 0.0;
    }
    freeze.assign(prev.begin(), prev.end());
    visit(k + 1, (k + 1) * h, std::span<const double>(state.data(), d));
  }
}

// Runs fn(path_index, rng) with one stream per path, merged deterministically.
template <typename Fn>
void for_each_path(std::uint64_t n_paths, const StreamId& stream, int workers, Fn&& fn) {
  const std::uint64_t block = 64;
  std::uint64_t n_blocks = (n_paths + block - 1) / block;
  parallel_blocks(
      n_blocks,
      [&](std::uint64_t bi) {
        std::uint64_t lo = bi * block, hi = std::min(n_paths, lo + block);
        for (std::uint64_t p = lo; p < hi; ++p) {
          Rng rng(stream.master_seed, stream.purpose, stream.index + p);
          fn(p, rng);
        }
      },
      workers);
}

// --- batch front ends ---

TrajectoryBatch simulate_euler(const BranchingNetwork& net, const SimConfig& cfg,
                               std::uint64_t n_paths, int workers = -1);
TrajectoryBatch simulate_euler(const LocalModel& model, const SimConfig& cfg,
                               std::uint64_t n_paths, int workers = -1);
TrajectoryBatch simulate_frozen(const BranchingNetwork& net, const SimConfig& cfg,
                                std::uint64_t n_paths, int workers = -1);
TrajectoryBatch simulate_frozen(const LocalModel& model, const SimConfig& cfg,
                                std::uint64_t n_paths, int workers = -1);

// Bounded path functional f(state); S_lambda f = E int_0^inf e^(-lambda t) f(X_t) dt.
struct BoundedFunction {
  std::function<double(std::span<const double>)> value;
  double sup_abs = 1.0;
  std::string name;
};

McEstimate resolvent_S_lambda(const BranchingNetwork& net, const SimConfig& cfg, double lambda,
                              const BoundedFunction& f, double tol, std::uint64_t n_paths,
                              int workers = -1);
McEstimate resolvent_S_lambda(const LocalModel& model, const SimConfig& cfg, double lambda,
                              const BoundedFunction& f, double tol, std::uint64_t n_paths,
                              int workers = -1);

// Cyclic catalytic network: coordinate i is catalyzed by i+1 (mod d), with
// drift theta_i - x_i and the given branching fields.
BranchingNetwork hypercyclic_preset(int d, std::span<const double> theta,
                                    std::span<const ScalarField> gamma_fields);
BranchingNetwork hypercyclic_preset(int d, std::span<const double> theta,
                                    std::span<const double> gamma_values);

}  // namespace catnet

#endif  // CATNET_SIMULATE_HPP
