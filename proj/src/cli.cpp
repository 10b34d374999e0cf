#include "catnet/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "catnet/config.hpp"
#include "catnet/excursion.hpp"
#include "catnet/io.hpp"
#include "catnet/parallel.hpp"
#include "catnet/semigroup.hpp"
#include "catnet/simulate.hpp"

namespace catnet {

namespace {

struct GlobalOptions {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out_dir = ".";
  int workers = 0;
  std::string format = "csv";
};

struct GridAxis {
  double lo = 0.0, hi = 0.0;
  int count = 1;
};

// Grid DSL: "t=1,x=0..4:9,y=0..4:9" -> one axis per variable.
std::map<std::string, GridAxis> parse_grid(const std::string& text) {
  std::map<std::string, GridAxis> axes;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t comma = text.find(',', pos);
    std::string item = text.substr(pos, comma == std::string::npos ? comma : comma - pos);
    pos = comma == std::string::npos ? text.size() : comma + 1;
    std::size_t eq = item.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("grid item needs '=': " + item);
    std::string name = item.substr(0, eq);
    std::string val = item.substr(eq + 1);
    GridAxis axis;
    std::size_t dots = val.find("..");
    if (dots == std::string::npos) {
      axis.lo = axis.hi = std::stod(val);
      axis.count = 1;
    } else {
      axis.lo = std::stod(val.substr(0, dots));
      std::string rest = val.substr(dots + 2);
      std::size_t colon = rest.find(':');
      if (colon == std::string::npos)
        throw std::invalid_argument("grid range needs ':count': " + item);
      axis.hi = std::stod(rest.substr(0, colon));
      axis.count = std::stoi(rest.substr(colon + 1));
      if (axis.count < 1) throw std::invalid_argument("grid count >= 1: " + item);
    }
    axes[name] = axis;
  }
  return axes;
}

std::vector<double> axis_values(const GridAxis& a) {
  std::vector<double> v(a.count);
  for (int i = 0; i < a.count; ++i)
    v[i] = a.count == 1 ? a.lo : a.lo + (a.hi - a.lo) * i / (a.count - 1.0);
  return v;
}

std::string out_path(const GlobalOptions& g, const std::string& name) {
  std::filesystem::create_directories(g.out_dir);
  return (std::filesystem::path(g.out_dir) / name).string();
}

void finish_manifest(const GlobalOptions& g, RunManifest& manifest) {
  manifest.finished_utc = iso8601_utc_now();
  std::string path = out_path(g, "manifest.json");
  manifest.outputs.push_back(path);
  write_text_file(path, canonical_json(manifest_to_json(manifest)));
  std::printf("wrote %s\n", path.c_str());
}

AppConfig require_config(const GlobalOptions& g) {
  if (g.config_path.empty())
    throw ConfigError("/", "this command needs --config");
  AppConfig cfg = load_config(g.config_path);
  if (g.seed_set) {
    cfg.seed = g.seed;
    cfg.sim.seed = g.seed;
  }
  return cfg;
}

int cmd_simulate(const GlobalOptions& g, std::uint64_t paths_override) {
  AppConfig cfg = require_config(g);
  if (!cfg.network) throw ConfigError("/network", "simulate needs a network section");
  std::uint64_t n_paths = paths_override ? paths_override : cfg.paths;
  RunManifest manifest{"simulate", config_hash(cfg.raw), kToolVersion, cfg.seed,
                       iso8601_utc_now(), "", {}};
  TrajectoryBatch batch = cfg.sim.scheme == Scheme::Euler
                              ? simulate_euler(*cfg.network, cfg.sim, n_paths, g.workers)
                              : simulate_frozen(*cfg.network, cfg.sim, n_paths, g.workers);
  if (g.format == "json") {
    std::string path = out_path(g, "trajectories.json");
    write_text_file(path, canonical_json(trajectories_to_json(batch)));
    manifest.outputs.push_back(path);
  } else {
    std::string path = out_path(g, "trajectories.csv");
    write_text_file(path, trajectories_to_csv(batch));
    manifest.outputs.push_back(path);
  }
  finish_manifest(g, manifest);
  return 0;
}

int cmd_density(const GlobalOptions& g, const std::string& grid_text, int deriv, bool plot) {
  AppConfig cfg = require_config(g);
  if (!cfg.cir) throw ConfigError("/cir", "density needs a cir section {b, gamma}");
  CirParams p = *cfg.cir;
  auto axes = parse_grid(grid_text);
  if (!axes.count("t") || !axes.count("x") || !axes.count("y"))
    throw std::invalid_argument("density grid needs t, x and y axes");
  RunManifest manifest{"density", config_hash(cfg.raw), kToolVersion, cfg.seed,
                       iso8601_utc_now(), "", {}};
  std::string csv = "t,x,y,q";
  if (deriv > 0) csv += ",d" + std::to_string(deriv) + "q_dx";
  csv += "\n";
  for (double t : axis_values(axes["t"]))
    for (double x : axis_values(axes["x"]))
      for (double y : axis_values(axes["y"])) {
        csv += format_double(t) + "," + format_double(x) + "," + format_double(y) + "," +
               format_double(q_density(p, t, x, y, 0));
        if (deriv > 0) csv += "," + format_double(q_density(p, t, x, y, deriv));
        csv += "\n";
      }
  std::string path = out_path(g, "density.csv");
  write_text_file(path, csv);
  manifest.outputs.push_back(path);
  if (plot) {
    double t = axis_values(axes["t"]).front();
    double x = axis_values(axes["x"]).front();
    PlotSeries analytic{"density * mu weight", {}};
    PlotSeries sampled{"sampler histogram", {}};
    double hi = endpoint_quantile(p, t, x, 0.999);
    const int nb = 60;
    std::vector<double> counts(nb, 0.0);
    Rng rng(cfg.seed, "density_plot", 0);
    const int n_draws = 20000;
    for (int i = 0; i < n_draws; ++i) {
      double v = sample_endpoint(p, t, x, rng).x_t;
      int b = static_cast<int>(v / hi * nb);
      if (b >= 0 && b < nb) counts[b] += 1.0;
    }
    for (int b = 0; b < nb; ++b) {
      double y = (b + 0.5) * hi / nb;
      analytic.points.emplace_back(
          y, q_density(p, t, x, y, 0) * std::pow(y, p.mu_exponent()));
      sampled.points.emplace_back(y, counts[b] * nb / (hi * n_draws));
    }
    std::string svg_path = out_path(g, "density_overlay.svg");
    write_text_file(svg_path, svg_line_plot("endpoint density overlay", {analytic, sampled}));
    manifest.outputs.push_back(svg_path);
  }
  finish_manifest(g, manifest);
  return 0;
}

int cmd_resolvent(const GlobalOptions& g, double lambda, double tol,
                  std::uint64_t paths_override) {
  AppConfig cfg = require_config(g);
  if (!cfg.network) throw ConfigError("/network", "resolvent needs a network section");
  std::uint64_t n_paths = paths_override ? paths_override : cfg.paths;
  RunManifest manifest{"resolvent", config_hash(cfg.raw), kToolVersion, cfg.seed,
                       iso8601_utc_now(), "", {}};
  BoundedFunction f{[](std::span<const double> x) {
                      double s = 0.0;
                      for (double v : x) s += v;
                      return std::exp(-s);
                    },
                    1.0, "exp(-sum x)"};
  SimConfig frozen_cfg = cfg.sim;
  frozen_cfg.scheme = Scheme::Frozen;
  SimConfig euler_cfg = cfg.sim;
  euler_cfg.scheme = Scheme::Euler;
  McEstimate s_frozen = resolvent_S_lambda(*cfg.network, frozen_cfg, lambda, f, tol, n_paths,
                                           g.workers);
  McEstimate s_euler =
      resolvent_S_lambda(*cfg.network, euler_cfg, lambda, f, tol, n_paths, g.workers);
  nlohmann::json j;
  j["lambda"] = lambda;
  j["test_function"] = f.name;
  j["frozen"] = {{"value", s_frozen.value}, {"std_error", s_frozen.std_error}};
  j["euler"] = {{"value", s_euler.value}, {"std_error", s_euler.std_error}};
  j["difference"] = s_frozen.value - s_euler.value;
  j["combined_std_error"] = std::sqrt(s_frozen.std_error * s_frozen.std_error +
                                      s_euler.std_error * s_euler.std_error);
  std::string path = out_path(g, "resolvent.json");
  write_text_file(path, canonical_json(j));
  manifest.outputs.push_back(path);
  std::printf("S_lambda frozen=%.6f+-%.6f euler=%.6f+-%.6f\n", s_frozen.value,
              s_frozen.std_error, s_euler.value, s_euler.std_error);
  finish_manifest(g, manifest);
  return 0;
}

int cmd_derivative(const GlobalOptions& g, std::uint64_t n_draws) {
  AppConfig cfg = require_config(g);
  if (!cfg.cir) throw ConfigError("/cir", "derivative needs a cir section {b, gamma}");
  MixedModel model({0.3}, {0.8}, *cfg.cir);
  RunManifest manifest{"derivative", config_hash(cfg.raw), kToolVersion, cfg.seed,
                       iso8601_utc_now(), "", {}};
  std::vector<ProductTestFunction> fs{make_cat_identity(1), make_gauss_exp(1)};
  std::string csv = "f,t,z2,ibp_main,ibp_se,bias_bound,fd,fd_se\n";
  for (const auto& f : fs)
    for (double t : {0.5, 1.0})
      for (double z2 : {0.5, 2.0}) {
        std::vector<double> z{0.4, z2};
        StreamId si{cfg.seed, "cli_ibp_" + f.name, 0};
        IbpEstimate ibp = ibp_derivative(model, t, z, f, n_draws, si, g.workers);
        double fd_val = 0.0, fd_se = 0.0;
        if (f.cat_kind != ProductTestFunction::CatKind::Identity) {
          McEstimate fd = fd_Pt_derivative(model, t, z, f, 0.2 * std::min(z2, t), n_draws * 4,
                                           16, si, g.workers);
          fd_val = fd.value;
          fd_se = fd.std_error;
        } else {
          fd_val = 1.0;  // P_t y_(m+1) is linear with unit slope
        }
        csv += f.name + "," + format_double(t) + "," + format_double(z2) + "," +
               format_double(ibp.main.value) + "," + format_double(ibp.main.std_error) + "," +
               format_double(ibp.bias_bound) + "," + format_double(fd_val) + "," +
               format_double(fd_se) + "\n";
      }
  std::string path = out_path(g, "derivative.csv");
  write_text_file(path, csv);
  manifest.outputs.push_back(path);
  finish_manifest(g, manifest);
  return 0;
}

int cmd_verify(const GlobalOptions& g, bool plots) {
  AppConfig cfg = require_config(g);
  RunManifest manifest{"verify", config_hash(cfg.raw), kToolVersion, cfg.seed,
                       iso8601_utc_now(), "", {}};
  std::vector<CheckSpec> specs;
  if (cfg.checks.ids.empty()) {
    specs = default_suite(cfg.seed, cfg.checks.scale);
  } else {
    for (const auto& id : cfg.checks.ids)
      specs.push_back(CheckSpec::with_id(id, cfg.seed, cfg.checks.scale));
  }
  for (auto& s : specs) s.workers = g.workers;
  SuiteSummary summary = run_suite(specs, cfg.checks.parallelism);
  std::string table = suite_summary_table(summary);
  std::fputs(table.c_str(), stdout);
  std::string path = out_path(g, "verify_summary.json");
  write_text_file(path, canonical_json(suite_summary_to_json(summary)));
  manifest.outputs.push_back(path);
  std::string table_path = out_path(g, "verify_summary.txt");
  write_text_file(table_path, table);
  manifest.outputs.push_back(table_path);
  if (plots) {
    for (const auto& rep : summary.reports) {
      if (rep.check_id != "resolvent_uniqueness") continue;
      PlotSeries gap{"max |S_euler(n) - S_frozen(512)| over cases", {}};
      for (const auto& [k, v] : rep.statistics)
        if (k.rfind("euler_gap_n", 0) == 0) gap.points.emplace_back(std::stod(k.substr(11)), v);
      if (!gap.points.empty()) {
        std::string svg_path = out_path(g, "resolvent_convergence.svg");
        write_text_file(svg_path,
                        svg_line_plot("scheme agreement vs. Euler resolution", {gap}));
        manifest.outputs.push_back(svg_path);
      }
    }
  }
  finish_manifest(g, manifest);
  return summary.all_pass() ? 0 : 1;
}

int cmd_list_checks(const GlobalOptions& g) {
  (void)g;
  for (const auto& info : list_checks())
    std::printf("%-26s %s\n", info.id.c_str(), info.target.c_str());
  return 0;
}

}  // namespace

int cli_main(const std::vector<std::string>& args) {
  CLI::App app{"simulation and statistical verification for catalytic branching networks"};
  app.require_subcommand(1);
  app.fallthrough(true);
  GlobalOptions g;
  if (const char* env = std::getenv("CATNET_SEED")) {
    g.seed = std::strtoull(env, nullptr, 10);
    g.seed_set = true;
  }
  app.add_option("--config", g.config_path, "JSON configuration file");
  auto* seed_opt = app.add_option("--seed", g.seed, "master seed (default: CATNET_SEED or config)");
  app.add_option("--out-dir", g.out_dir, "output directory");
  app.add_option("--workers", g.workers, "worker threads (0 = hardware)");
  app.add_option("--format", g.format, "output format: csv or json")
      ->check(CLI::IsMember({"csv", "json"}));

  std::uint64_t paths_override = 0;
  auto* sim = app.add_subcommand("simulate", "emit trajectories");
  sim->add_option("--paths", paths_override, "number of paths");

  std::string grid_text = "t=1,x=0..4:9,y=0..4:9";
  int deriv = 0;
  bool plot = false;
  auto* den = app.add_subcommand("density", "tabulate the transition density over a grid");
  den->add_option("--grid", grid_text, "grid spec, e.g. t=1,x=0..4:9,y=0..4:9");
  den->add_option("--deriv", deriv, "also tabulate this x-derivative order (1..3)")
      ->check(CLI::Range(0, 3));
  den->add_flag("--plot", plot, "emit a density overlay SVG");

  double lambda = 1.0, tol = 1e-3;
  auto* res = app.add_subcommand("resolvent", "estimate the pathwise resolvent, both schemes");
  res->add_option("--lambda", lambda, "resolvent parameter (>= 1)");
  res->add_option("--tol", tol, "time-truncation tolerance");
  res->add_option("--paths", paths_override, "number of paths");

  std::uint64_t deriv_draws = 20000;
  auto* der = app.add_subcommand("derivative", "integration-by-parts vs finite-difference table");
  der->add_option("--draws", deriv_draws, "Monte Carlo draws for the weight estimator");

  bool plots = false;
  auto* ver = app.add_subcommand("verify", "run the statistical check suite");
  ver->add_flag("--plots", plots, "emit SVG plots for supported checks");

  app.add_subcommand("list-checks", "print the check catalog");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    if (!msg.empty()) std::fprintf(stderr, "%s\n", msg.c_str());
    std::fprintf(stderr, "%s\n", app.help().c_str());
    return 2;
  }
  if (seed_opt->count() > 0) g.seed_set = true;
  if (g.workers > 0) set_default_workers(g.workers);

  try {
    if (app.got_subcommand("simulate")) return cmd_simulate(g, paths_override);
    if (app.got_subcommand("density")) return cmd_density(g, grid_text, deriv, plot);
    if (app.got_subcommand("resolvent")) return cmd_resolvent(g, lambda, tol, paths_override);
    if (app.got_subcommand("derivative")) return cmd_derivative(g, deriv_draws);
    if (app.got_subcommand("verify")) return cmd_verify(g, plots);
    if (app.got_subcommand("list-checks")) return cmd_list_checks(g);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "configuration error at %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}

}  // namespace catnet
