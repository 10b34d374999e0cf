#include "catnet/simulate.hpp"

#include <stdexcept>

#include "catnet/cir.hpp"
#include "catnet/excursion.hpp"

namespace catnet {

void SimConfig::validate(int d) const {
  if (n < 1) throw std::invalid_argument("SimConfig: n >= 1");
  if (substeps < 1) throw std::invalid_argument("SimConfig: substeps >= 1");
  if (!(horizon > 0.0)) throw std::invalid_argument("SimConfig: horizon > 0");
  if (static_cast<int>(x0.size()) != d)
    throw std::invalid_argument("SimConfig: x0 dimension mismatch");
  double steps = horizon * n;
  if (std::fabs(steps - std::llround(steps)) > 1e-9)
    throw std::invalid_argument("SimConfig: horizon must be a multiple of 1/n");
}

EulerView make_euler_view(const BranchingNetwork& net) {
  EulerView v;
  v.d = net.d;
  v.constrained.assign(net.d, 1);
  v.drift = [&net](std::span<const double> x, std::span<double> out) {
    for (int j = 0; j < net.d; ++j) out[j] = net.b[j](x);
  };
  v.rate = [&net](std::span<const double> x, std::span<double> out) {
    for (int j = 0; j < net.d; ++j) {
      double r = net.gamma[j](x) * std::max(x[j], 0.0);
      if (net.is_reactant[j]) r *= std::max(x[net.catalyst_of[j]], 0.0);
      out[j] = r;
    }
  };
  return v;
}

EulerView make_euler_view(const LocalModel& model) {
  EulerView v;
  v.d = model.d;
  v.constrained = model.constrained;
  v.drift = [&model](std::span<const double>, std::span<double> out) {
    for (int j = 0; j < model.d; ++j) out[j] = model.b0[j];
  };
  v.rate = [&model](std::span<const double> x, std::span<double> out) {
    for (int j = 0; j < model.d; ++j) {
      if (model.n1.count(j))
        out[j] = model.gamma0[j] * std::max(x[model.catalyst_of[j]], 0.0);
      else
        out[j] = model.gamma0[j] * std::max(x[j], 0.0);
    }
  };
  return v;
}

FrozenView make_frozen_view(const BranchingNetwork& net) {
  FrozenView v;
  v.d = net.d;
  v.catalyst_of = net.catalyst_of;
  v.constrained.assign(net.d, 1);
  v.reclassify = true;
  v.gamma_tilde = [&net](int j, std::span<const double> z, bool in_n1) {
    double g = net.gamma[j](z);
    if (in_n1) return std::max(z[j], 0.0) * g;
    if (net.is_reactant[j]) return std::max(z[net.catalyst_of[j]], 0.0) * g;
    return g;
  };
  v.drift = [&net](int j, std::span<const double> z) { return net.b[j](z); };
  return v;
}

FrozenView make_frozen_view(const LocalModel& model) {
  FrozenView v;
  v.d = model.d;
  v.catalyst_of = model.catalyst_of;
  v.constrained = model.constrained;
  v.reclassify = false;
  v.fixed_n1.assign(model.d, 0);
  for (int j : model.n1) v.fixed_n1[j] = 1;
  v.gamma_tilde = [&model](int j, std::span<const double>, bool) { return model.gamma0[j]; };
  v.drift = [&model](int j, std::span<const double>) { return model.b0[j]; };
  return v;
}

double branching_window(double x, double b, double g, double h, Rng& rng) {
  if (x < 0.0) x = 0.0;
  if (g <= 1e-14) return std::max(x + b * h, 0.0);
  if (b > 0.0) {
    const double gh = g * h;
    std::uint64_t n = (x == 0.0) ? 0 : rng.poisson(x / gh);
    return rng.gamma(n + b / g, gh);
  }
  if (b == 0.0) return sample_feller_branching(g, h, x, rng);
  double y = std::max(x + 0.5 * b * h, 0.0);
  y = sample_feller_branching(g, h, y, rng);
  return std::max(y + 0.5 * b * h, 0.0);
}

namespace {

template <typename PathFn>
TrajectoryBatch collect_batch(int d, const SimConfig& cfg, std::uint64_t n_paths,
                              const char* scheme_name, const char* purpose, int workers,
                              PathFn&& run_one) {
  cfg.validate(d);
  TrajectoryBatch batch;
  batch.d = d;
  batch.scheme = scheme_name;
  batch.seed = cfg.seed;
  batch.stream_purpose = purpose;
  const std::uint64_t steps = static_cast<std::uint64_t>(std::llround(cfg.horizon * cfg.n));
  batch.times.resize(steps + 1);
  for (std::uint64_t k = 0; k <= steps; ++k) batch.times[k] = static_cast<double>(k) / cfg.n;
  batch.paths.assign(n_paths, {});
  StreamId stream{cfg.seed, purpose, 0};
  for_each_path(n_paths, stream, workers, [&](std::uint64_t p, Rng& rng) {
    auto& row = batch.paths[p];
    row.reserve((steps + 1) * d);
    std::vector<double> state(cfg.x0.begin(), cfg.x0.end());
    run_one(state, rng, [&](std::uint64_t, double, std::span<const double> s) {
      row.insert(row.end(), s.begin(), s.end());
    });
  });
  return batch;
}

template <typename RunPath>
McEstimate resolvent_impl(int d, const SimConfig& cfg, double lambda, const BoundedFunction& f,
                          double tol, std::uint64_t n_paths, int workers, RunPath&& run_path) {
  if (!(lambda >= 1.0)) throw std::invalid_argument("resolvent_S_lambda: lambda >= 1");
  if (!(tol > 0.0)) throw std::invalid_argument("resolvent_S_lambda: tol > 0");
  double horizon = std::max(1.0, std::log(std::max(f.sup_abs, 1e-12) / (lambda * tol)) / lambda);
  SimConfig run = cfg;
  run.horizon = std::ceil(horizon * cfg.n) / cfg.n;
  run.validate(d);
  const double dt = 1.0 / cfg.n;
  const std::uint64_t steps = static_cast<std::uint64_t>(std::llround(run.horizon * cfg.n));

  const std::uint64_t block = 64;
  std::uint64_t n_blocks = (n_paths + block - 1) / block;
  std::vector<Accumulator> acc(n_blocks);
  StreamId stream{cfg.seed, "resolvent", 0};
  parallel_blocks(
      n_blocks,
      [&](std::uint64_t bi) {
        std::uint64_t lo = bi * block, hi = std::min(n_paths, lo + block);
        for (std::uint64_t p = lo; p < hi; ++p) {
          Rng rng(stream.master_seed, stream.purpose, p);
          std::vector<double> state(run.x0.begin(), run.x0.end());
          double total = 0.0;
          auto visit = [&](std::uint64_t k, double tm, std::span<const double> s) {
            double w = (k == 0 || k == steps) ? 0.5 : 1.0;
            total += w * std::exp(-lambda * tm) * f.value(s) * dt;
          };
          run_path(run, state, rng, visit);
          acc[bi].add(total);
        }
      },
      workers);
  Accumulator total;
  for (const auto& a : acc) total.merge(a);
  return total.estimate(std::to_string(cfg.seed) + "/resolvent/0");
}

}  // namespace

TrajectoryBatch simulate_euler(const BranchingNetwork& net, const SimConfig& cfg,
                               std::uint64_t n_paths, int workers) {
  EulerView v = make_euler_view(net);
  return collect_batch(net.d, cfg, n_paths, "euler", "euler", workers,
                       [&](std::vector<double>& s, Rng& rng, auto&& visit) {
                         euler_path(v, cfg, s, rng, visit);
                       });
}

TrajectoryBatch simulate_euler(const LocalModel& model, const SimConfig& cfg,
                               std::uint64_t n_paths, int workers) {
  EulerView v = make_euler_view(model);
  return collect_batch(model.d, cfg, n_paths, "euler", "euler", workers,
                       [&](std::vector<double>& s, Rng& rng, auto&& visit) {
                         euler_path(v, cfg, s, rng, visit);
                       });
}

TrajectoryBatch simulate_frozen(const BranchingNetwork& net, const SimConfig& cfg,
                                std::uint64_t n_paths, int workers) {
  FrozenView v = make_frozen_view(net);
  return collect_batch(net.d, cfg, n_paths, "frozen", "frozen", workers,
                       [&](std::vector<double>& s, Rng& rng, auto&& visit) {
                         frozen_path(v, cfg, s, rng, visit);
                       });
}

TrajectoryBatch simulate_frozen(const LocalModel& model, const SimConfig& cfg,
                                std::uint64_t n_paths, int workers) {
  FrozenView v = make_frozen_view(model);
  return collect_batch(model.d, cfg, n_paths, "frozen", "frozen", workers,
                       [&](std::vector<double>& s, Rng& rng, auto&& visit) {
                         frozen_path(v, cfg, s, rng, visit);
                       });
}

McEstimate resolvent_S_lambda(const BranchingNetwork& net, const SimConfig& cfg, double lambda,
                              const BoundedFunction& f, double tol, std::uint64_t n_paths,
                              int workers) {
  if (cfg.scheme == Scheme::Euler) {
    EulerView v = make_euler_view(net);
    return resolvent_impl(net.d, cfg, lambda, f, tol, n_paths, workers,
                          [&](const SimConfig& run, std::vector<double>& s, Rng& rng,
                              auto&& visit) { euler_path(v, run, s, rng, visit); });
  }
  FrozenView v = make_frozen_view(net);
  return resolvent_impl(net.d, cfg, lambda, f, tol, n_paths, workers,
                        [&](const SimConfig& run, std::vector<double>& s, Rng& rng,
                            auto&& visit) { frozen_path(v, run, s, rng, visit); });
}

McEstimate resolvent_S_lambda(const LocalModel& model, const SimConfig& cfg, double lambda,
                              const BoundedFunction& f, double tol, std::uint64_t n_paths,
                              int workers) {
  if (cfg.scheme == Scheme::Euler) {
    EulerView v = make_euler_view(model);
    return resolvent_impl(model.d, cfg, lambda, f, tol, n_paths, workers,
                          [&](const SimConfig& run, std::vector<double>& s, Rng& rng,
                              auto&& visit) { euler_path(v, run, s, rng, visit); });
  }
  FrozenView v = make_frozen_view(model);
  return resolvent_impl(model.d, cfg, lambda, f, tol, n_paths, workers,
                        [&](const SimConfig& run, std::vector<double>& s, Rng& rng,
                            auto&& visit) { frozen_path(v, run, s, rng, visit); });
}

BranchingNetwork hypercyclic_preset(int d, std::span<const double> theta,
                                    std::span<const ScalarField> gamma_fields) {
  if (d < 2) throw std::invalid_argument("hypercyclic_preset: d >= 2 required");
  if (static_cast<int>(theta.size()) != d || static_cast<int>(gamma_fields.size()) != d)
    throw std::invalid_argument("hypercyclic_preset: need d theta and gamma entries");
  for (double th : theta)
    if (!(th > 0.0)) throw std::invalid_argument("hypercyclic_preset: theta > 0 required");
  BranchingNetwork net;
  net.d = d;
  for (int i = 0; i < d; ++i) net.edges.emplace_back((i + 1) % d, i);
  net.gamma.assign(gamma_fields.begin(), gamma_fields.end());
  for (int i = 0; i < d; ++i) net.b.push_back(ScalarField::affine(theta[i], i));
  net.finalize();
  return net;
}

BranchingNetwork hypercyclic_preset(int d, std::span<const double> theta,
                                    std::span<const double> gamma_values) {
  std::vector<ScalarField> fields;
  fields.reserve(gamma_values.size());
  for (double g : gamma_values) {
    if (!(g > 0.0)) throw std::invalid_argument("hypercyclic_preset: gamma > 0 required");
    fields.push_back(ScalarField::constant(g));
  }
  return hypercyclic_preset(d, theta, fields);
}

}  // namespace catnet
