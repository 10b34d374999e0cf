#ifndef CATNET_CONFIG_HPP
#define CATNET_CONFIG_HPP

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "catnet/checks.hpp"
#include "catnet/cir.hpp"
#include "catnet/network.hpp"
#include "catnet/simulate.hpp"

namespace catnet {

// Configuration errors carry the JSON path of the offending element.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& message)
      : std::runtime_error(path + ": " + message), json_path_(std::move(path)) {}
  const std::string& json_path() const { return json_path_; }

 private:
  std::string json_path_;
};

struct ChecksConfig {
  std::vector<std::string> ids;  // empty = whole catalog
  double scale = 1.0;
  int parallelism = 1;
};

struct AppConfig {
  std::optional<BranchingNetwork> network;
  std::optional<CirParams> cir;
  SimConfig sim;
  std::uint64_t paths = 1000;
  ChecksConfig checks;
  std::uint64_t seed = 1;
  nlohmann::json raw;  // canonical source for hashing
};

// Parses and schema-validates a config document.  Unknown fields are
// rejected; structural-hypothesis violations of the network are errors and
// reference the JSON path of the edges element.
AppConfig load_config(const std::string& path);
AppConfig parse_config(const nlohmann::json& doc);

// Sample grid used for the coefficient-hypothesis check at load time.
std::vector<std::vector<double>> hypothesis_grid(int d, double hi);

}  // namespace catnet

#endif  // CATNET_CONFIG_HPP
