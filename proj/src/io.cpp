#include "catnet/io.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace catnet {

std::string format_double(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string config_hash(const nlohmann::json& doc) {
  std::string canon = doc.dump();  // nlohmann objects are key-sorted
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : canon) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string iso8601_utc_now() {
  auto now = std::chrono::system_clock::now();
  std::time_t tt = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

nlohmann::json manifest_to_json(const RunManifest& m) {
  nlohmann::json j;
  j["command"] = m.command;
  j["config_hash"] = m.config_hash;
  j["version"] = m.version;
  j["seed"] = m.seed;
  j["started_utc"] = m.started_utc;
  j["finished_utc"] = m.finished_utc;
  j["outputs"] = m.outputs;
  return j;
}

std::string trajectories_to_csv(const TrajectoryBatch& batch) {
  std::string out = "path,t";
  for (int k = 1; k <= batch.d; ++k) out += ",x" + std::to_string(k);
  out += "\n";
  for (std::size_t p = 0; p < batch.paths.size(); ++p) {
    const auto& row = batch.paths[p];
    for (std::size_t ti = 0; ti < batch.times.size(); ++ti) {
      out += std::to_string(p);
      out += ',';
      out += format_double(batch.times[ti]);
      for (int k = 0; k < batch.d; ++k) {
        out += ',';
        out += format_double(row[ti * batch.d + k]);
      }
      out += '\n';
    }
  }
  return out;
}

TrajectoryBatch trajectories_from_csv(const std::string& text) {
  TrajectoryBatch batch;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("trajectories_from_csv: empty input");
  int cols = 0;
  for (char c : line)
    if (c == ',') ++cols;
  batch.d = cols - 1;
  std::size_t cur_path = static_cast<std::size_t>(-1);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string tok;
    std::getline(row, tok, ',');
    std::size_t p = std::stoull(tok);
    std::getline(row, tok, ',');
    double t = std::stod(tok);
    if (p != cur_path) {
      batch.paths.emplace_back();
      cur_path = p;
    }
    if (p == 0) batch.times.push_back(t);
    while (std::getline(row, tok, ',')) batch.paths.back().push_back(std::stod(tok));
  }
  return batch;
}

nlohmann::json trajectories_to_json(const TrajectoryBatch& batch) {
  nlohmann::json j;
  j["d"] = batch.d;
  j["scheme"] = batch.scheme;
  j["seed"] = batch.seed;
  j["times"] = batch.times;
  j["paths"] = batch.paths;
  return j;
}

nlohmann::json check_report_to_json(const CheckReport& rep, bool include_volatile) {
  nlohmann::json j;
  j["check_id"] = rep.check_id;
  j["target"] = rep.target;
  j["pass"] = rep.pass;
  j["seed"] = rep.seed;
  j["scale"] = rep.scale;
  nlohmann::json stats;
  for (const auto& [k, v] : rep.statistics) stats[k] = v;
  j["statistics"] = stats;
  nlohmann::json thr;
  for (const auto& [k, v] : rep.thresholds) thr[k] = v;
  j["thresholds"] = thr;
  if (!rep.notes.empty()) j["notes"] = rep.notes;
  if (include_volatile) j["volatile"] = {{"runtime_seconds", rep.runtime_seconds}};
  return j;
}

nlohmann::json suite_summary_to_json(const SuiteSummary& s, bool include_volatile) {
  nlohmann::json j;
  j["n_pass"] = s.n_pass;
  j["n_fail"] = s.n_fail;
  j["all_pass"] = s.all_pass();
  nlohmann::json reports = nlohmann::json::array();
  for (const auto& r : s.reports) reports.push_back(check_report_to_json(r, include_volatile));
  j["reports"] = reports;
  return j;
}

std::string suite_summary_table(const SuiteSummary& s) {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof(line), "%-28s %-6s %10s\n", "check", "pass", "runtime[s]");
  out += line;
  out += std::string(46, '-') + "\n";
  for (const auto& r : s.reports) {
    std::snprintf(line, sizeof(line), "%-28s %-6s %10.2f\n", r.check_id.c_str(),
                  r.pass ? "PASS" : "FAIL", r.runtime_seconds);
    out += line;
  }
  std::snprintf(line, sizeof(line), "total: %d passed, %d failed\n", s.n_pass, s.n_fail);
  out += line;
  return out;
}

std::string canonical_json(const nlohmann::json& j) { return j.dump(2) + "\n"; }

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string svg_line_plot(const std::string& title, const std::vector<PlotSeries>& series,
                          int width, int height) {
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& s : series)
    for (auto [x, y] : s.points) {
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  if (xmin > xmax) {
    xmin = 0;
    xmax = 1;
    ymin = 0;
    ymax = 1;
  }
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + 1;
  const double ml = 60, mr = 20, mt = 40, mb = 40;
  auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (width - ml - mr); };
  auto py = [&](double y) { return height - mb - (y - ymin) / (ymax - ymin) * (height - mt - mb); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
                    std::to_string(width) + "\" height=\"" + std::to_string(height) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"" + std::to_string(width / 2) + "\" y=\"24\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"15\">" + title + "</text>\n";
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n", ml,
                height - mb, static_cast<double>(width - mr), height - mb);
  svg += buf;
  std::snprintf(buf, sizeof(buf),
                "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n", ml, mt, ml,
                height - mb);
  svg += buf;
  for (double frac : {0.0, 0.5, 1.0}) {
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%g\" y=\"%g\" font-family=\"sans-serif\" font-size=\"11\" "
                  "text-anchor=\"middle\">%s</text>\n",
                  px(xmin + frac * (xmax - xmin)), height - mb + 16.0,
                  format_double(xmin + frac * (xmax - xmin)).c_str());
    svg += buf;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%g\" y=\"%g\" font-family=\"sans-serif\" font-size=\"11\" "
                  "text-anchor=\"end\">%s</text>\n",
                  ml - 6.0, py(ymin + frac * (ymax - ymin)) + 4.0,
                  format_double(ymin + frac * (ymax - ymin)).c_str());
    svg += buf;
  }
  int ci = 0;
  for (const auto& s : series) {
    std::string pts;
    for (auto [x, y] : s.points)
      pts += format_double(px(x)) + "," + format_double(py(y)) + " ";
    svg += "<polyline fill=\"none\" stroke=\"" + std::string(colors[ci % 5]) +
           "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%g\" y=\"%g\" font-family=\"sans-serif\" font-size=\"12\" "
                  "fill=\"%s\">%s</text>\n",
                  ml + 10.0, mt + 16.0 * (ci + 1), colors[ci % 5], s.label.c_str());
    svg += buf;
    ++ci;
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace catnet
