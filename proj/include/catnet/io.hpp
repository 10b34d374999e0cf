#ifndef CATNET_IO_HPP
#define CATNET_IO_HPP

#include <string>
#include <vector>

#include <json.hpp>

#include "catnet/checks.hpp"
#include "catnet/simulate.hpp"

namespace catnet {

inline constexpr const char* kToolVersion = "0.1.0";

// Shortest round-trip decimal formatting, locale independent.
std::string format_double(double v);

// FNV-1a over the canonical (sorted-key) serialization; stable under key
// reordering of the source document.
std::string config_hash(const nlohmann::json& doc);

std::string iso8601_utc_now();

struct RunManifest {
  std::string command;
  std::string config_hash;
  std::string version = kToolVersion;
  std::uint64_t seed = 0;
  std::string started_utc;
  std::string finished_utc;
  std::vector<std::string> outputs;
};

nlohmann::json manifest_to_json(const RunManifest& m);

// Trajectory round trip: CSV columns path,t,x1..xd; '.' decimal, '\n' line
// endings, UTF-8.
std::string trajectories_to_csv(const TrajectoryBatch& batch);
TrajectoryBatch trajectories_from_csv(const std::string& text);
nlohmann::json trajectories_to_json(const TrajectoryBatch& batch);

// include_volatile=false drops timing, leaving the deterministic content.
nlohmann::json check_report_to_json(const CheckReport& rep, bool include_volatile = true);
nlohmann::json suite_summary_to_json(const SuiteSummary& s, bool include_volatile = true);
std::string suite_summary_table(const SuiteSummary& s);

// Canonical serialization: sorted keys, '\n' terminated.
std::string canonical_json(const nlohmann::json& j);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

// Minimal SVG polyline plot; one series per (label, points) pair.
struct PlotSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;
};
std::string svg_line_plot(const std::string& title, const std::vector<PlotSeries>& series,
                          int width = 720, int height = 480);

}  // namespace catnet

#endif  // CATNET_IO_HPP
