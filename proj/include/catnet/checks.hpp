#ifndef CATNET_CHECKS_HPP
#define CATNET_CHECKS_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace catnet {

// A catalog of statistical and numerical checks, each comparing an empirical
// quantity from the samplers/simulators with a closed-form target.  Pass
// decisions are pure functions of (statistics, thresholds); those are both
// part of the report.

struct CheckSpec {
  std::string check_id;
  std::uint64_t seed = 1;
  double scale = 1.0;  // multiplies the default sample sizes (CI mode < 1)
  int workers = -1;

  static CheckSpec with_id(const std::string& id, std::uint64_t seed = 1, double scale = 1.0) {
    CheckSpec s;
    s.check_id = id;
    s.seed = seed;
    s.scale = scale;
    return s;
  }
};

struct CheckReport {
  std::string check_id;
  std::string target;  // the analytic fact being tested
  std::vector<std::pair<std::string, double>> statistics;
  std::vector<std::pair<std::string, double>> thresholds;
  bool pass = false;
  double runtime_seconds = 0.0;  // volatile; excluded from canonical output
  std::uint64_t seed = 0;
  double scale = 1.0;
  std::vector<std::string> notes;

  void stat(const std::string& k, double v) { statistics.emplace_back(k, v); }
  void threshold(const std::string& k, double v) { thresholds.emplace_back(k, v); }
};

struct CheckInfo {
  std::string id;
  std::string target;
};

std::vector<CheckInfo> list_checks();

CheckReport run_check(const CheckSpec& spec);

struct SuiteSummary {
  std::vector<CheckReport> reports;
  int n_pass = 0;
  int n_fail = 0;
  bool all_pass() const { return n_fail == 0; }
};

// Runs the given checks (all catalog checks when specs is empty is NOT
// implied; pass an explicit list).  parallelism > 1 runs whole checks
// concurrently; reports are returned in input order.
SuiteSummary run_suite(const std::vector<CheckSpec>& specs, int parallelism = 1);

// Convenience: one spec per catalog entry with a shared seed/scale.
std::vector<CheckSpec> default_suite(std::uint64_t seed = 1, double scale = 1.0);

}  // namespace catnet

#endif  // CATNET_CHECKS_HPP
