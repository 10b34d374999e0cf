#include "catnet/config.hpp"

#include <fstream>
#include <set>

namespace catnet {

namespace {

using nlohmann::json;

void expect_keys(const json& j, const std::string& path, const std::set<std::string>& allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key()))
      throw ConfigError(path + "/" + it.key(), "unknown field");
  }
}

double require_number(const json& j, const std::string& path, const char* key) {
  if (!j.contains(key)) throw ConfigError(path, std::string("missing field '") + key + "'");
  if (!j[key].is_number()) throw ConfigError(path + "/" + key, "expected a number");
  return j[key].get<double>();
}

ScalarField parse_field(const json& j, const std::string& path, int dim, int coord) {
  if (!j.is_object()) throw ConfigError(path, "field spec must be an object");
  if (!j.contains("kind")) throw ConfigError(path, "missing field 'kind'");
  std::string kind = j["kind"].get<std::string>();
  if (kind == "const") {
    expect_keys(j, path, {"kind", "value"});
    return ScalarField::constant(require_number(j, path, "value"));
  }
  if (kind == "affine") {
    expect_keys(j, path, {"kind", "theta"});
    return ScalarField::affine(require_number(j, path, "theta"), coord);
  }
  if (kind == "expr") {
    expect_keys(j, path, {"kind", "text"});
    if (!j.contains("text") || !j["text"].is_string())
      throw ConfigError(path, "expr spec needs a 'text' string");
    try {
      return ScalarField::expression(j["text"].get<std::string>(), dim);
    } catch (const std::exception& e) {
      throw ConfigError(path + "/text", e.what());
    }
  }
  throw ConfigError(path + "/kind", "unknown field kind '" + kind + "'");
}

BranchingNetwork parse_network(const json& j, const std::string& path) {
  expect_keys(j, path, {"d", "edges", "gamma", "b"});
  if (!j.contains("d")) throw ConfigError(path, "missing field 'd'");
  int d = j["d"].get<int>();
  if (d < 1) throw ConfigError(path + "/d", "need d >= 1");
  BranchingNetwork net;
  net.d = d;
  if (!j.contains("edges") || !j["edges"].is_array())
    throw ConfigError(path, "missing array field 'edges'");
  int e_idx = 0;
  for (const auto& e : j["edges"]) {
    std::string epath = path + "/edges/" + std::to_string(e_idx++);
    if (!e.is_array() || e.size() != 2) throw ConfigError(epath, "edge must be a pair [i, j]");
    int i = e[0].get<int>(), jj = e[1].get<int>();
    if (i < 1 || i > d || jj < 1 || jj > d)
      throw ConfigError(epath, "vertex index out of range (1-based)");
    net.edges.emplace_back(i - 1, jj - 1);
  }
  for (const char* key : {"gamma", "b"}) {
    if (!j.contains(key))
      throw ConfigError(path, std::string("missing field '") + key + "'");
    if (!j[key].is_array() || static_cast<int>(j[key].size()) != d)
      throw ConfigError(path + "/" + key, "expected an array of d field specs");
  }
  for (int i = 0; i < d; ++i)
    net.gamma.push_back(parse_field(j["gamma"][i], path + "/gamma/" + std::to_string(i), d, i));
  for (int i = 0; i < d; ++i)
    net.b.push_back(parse_field(j["b"][i], path + "/b/" + std::to_string(i), d, i));
  net.finalize();

  ValidationReport structure = validate_network(net);
  if (!structure.valid()) {
    std::string msg = "structural hypothesis violated:";
    for (const auto& v : structure.violations) msg += " [" + v.clause + ": " + v.detail + "]";
    throw ConfigError(path + "/edges", msg);
  }
  ValidationReport coeffs = check_coefficients(net, hypothesis_grid(d, 2.0));
  if (!coeffs.valid()) {
    std::string msg = "coefficient hypothesis violated:";
    for (const auto& v : coeffs.violations) {
      msg += " [" + v.clause + ": " + v.detail + "]";
      if (msg.size() > 400) break;
    }
    throw ConfigError(path + "/gamma", msg);
  }
  return net;
}

Scheme parse_scheme(const json& j, const std::string& path) {
  std::string s = j.get<std::string>();
  if (s == "euler") return Scheme::Euler;
  if (s == "frozen") return Scheme::Frozen;
  throw ConfigError(path, "scheme must be 'euler' or 'frozen'");
}

}  // namespace

std::vector<std::vector<double>> hypothesis_grid(int d, double hi) {
  std::vector<std::vector<double>> grid;
  // Boundary faces (each coordinate pinned at zero) plus interior points.
  std::vector<double> interior(d, 0.5 * hi), mid(d, 0.25 * hi), far(d, hi);
  grid.push_back(interior);
  grid.push_back(mid);
  grid.push_back(far);
  for (int i = 0; i < d; ++i) {
    std::vector<double> p(d, 0.5 * hi);
    p[i] = 0.0;
    grid.push_back(p);
    std::vector<double> q(d, hi);
    q[i] = 0.0;
    grid.push_back(q);
  }
  std::vector<double> origin(d, 0.0);
  grid.push_back(origin);
  return grid;
}

AppConfig parse_config(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("/", "top-level document must be an object");
  expect_keys(doc, "", {"network", "cir", "sim", "checks", "seed", "paths"});
  AppConfig cfg;
  cfg.raw = doc;
  if (doc.contains("seed")) cfg.seed = doc["seed"].get<std::uint64_t>();
  if (doc.contains("paths")) cfg.paths = doc["paths"].get<std::uint64_t>();
  if (doc.contains("network")) cfg.network = parse_network(doc["network"], "/network");
  if (doc.contains("cir")) {
    const auto& j = doc["cir"];
    expect_keys(j, "/cir", {"b", "gamma"});
    double b = require_number(j, "/cir", "b");
    double g = require_number(j, "/cir", "gamma");
    try {
      cfg.cir = CirParams(b, g);
    } catch (const std::exception& e) {
      throw ConfigError("/cir", e.what());
    }
  }
  cfg.sim.seed = cfg.seed;
  if (doc.contains("sim")) {
    const auto& j = doc["sim"];
    expect_keys(j, "/sim", {"scheme", "n", "substeps", "horizon", "x0"});
    if (j.contains("scheme")) cfg.sim.scheme = parse_scheme(j["scheme"], "/sim/scheme");
    if (j.contains("n")) cfg.sim.n = j["n"].get<int>();
    if (j.contains("substeps")) cfg.sim.substeps = j["substeps"].get<int>();
    if (j.contains("horizon")) cfg.sim.horizon = j["horizon"].get<double>();
    if (j.contains("x0")) {
      if (!j["x0"].is_array()) throw ConfigError("/sim/x0", "expected an array");
      cfg.sim.x0.clear();
      for (const auto& v : j["x0"]) cfg.sim.x0.push_back(v.get<double>());
    }
    if (cfg.network) {
      try {
        cfg.sim.validate(cfg.network->d);
      } catch (const std::exception& e) {
        throw ConfigError("/sim", e.what());
      }
      if (!in_state_space(*cfg.network, cfg.sim.x0))
        throw ConfigError("/sim/x0", "start point lies outside the state space");
    }
  }
  if (doc.contains("checks")) {
    const auto& j = doc["checks"];
    expect_keys(j, "/checks", {"ids", "scale", "parallelism"});
    if (j.contains("ids")) {
      if (!j["ids"].is_array()) throw ConfigError("/checks/ids", "expected an array of ids");
      auto known = list_checks();
      for (const auto& v : j["ids"]) {
        std::string id = v.get<std::string>();
        if (id == "all") {
          cfg.checks.ids.clear();
          break;
        }
        bool found = false;
        for (const auto& info : known) found = found || info.id == id;
        if (!found) throw ConfigError("/checks/ids", "unknown check id '" + id + "'");
        cfg.checks.ids.push_back(id);
      }
    }
    if (j.contains("scale")) cfg.checks.scale = j["scale"].get<double>();
    if (j.contains("parallelism")) cfg.checks.parallelism = j["parallelism"].get<int>();
  }
  return cfg;
}

AppConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("/", "cannot open config file '" + path + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const std::exception& e) {
    throw ConfigError("/", std::string("JSON parse error: ") + e.what());
  }
  return parse_config(doc);
}

}  // namespace catnet
