#include "cbo/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace cbo {

Gate make_gate(const std::string& name, double measured, const std::string& op,
               double threshold) {
  Gate g;
  g.name = name;
  g.measured = measured;
  g.threshold = threshold;
  g.op = op;
  if (op == "<=") {
    g.pass = measured <= threshold;
  } else if (op == ">=") {
    g.pass = measured >= threshold;
  } else if (op == "finite") {
    g.pass = std::isfinite(measured);
  } else {
    throw std::invalid_argument("make_gate: unknown op '" + op + "'");
  }
  return g;
}

bool ExperimentReport::all_pass() const {
  for (const auto& g : verdicts) {
    if (!g.pass) return false;
  }
  return true;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string report_to_json(const ExperimentReport& report) {
  nlohmann::ordered_json j;
  j["name"] = report.name;
  j["config"] = report.config_text;
  j["seed_count"] = report.seed_count;
  for (const auto& [key, values] : report.series) j["series"][key] = values;
  for (const auto& [key, rows] : report.per_seed) j["per_seed"][key] = rows;
  for (const auto& f : report.fits) {
    j["fits"].push_back({{"name", f.name},
                         {"slope", f.fit.slope},
                         {"intercept", f.fit.intercept},
                         {"r_squared", f.fit.r_squared}});
  }
  for (const auto& g : report.verdicts) {
    j["verdicts"].push_back({{"name", g.name},
                             {"measured", g.measured},
                             {"op", g.op},
                             {"threshold", g.threshold},
                             {"pass", g.pass}});
  }
  j["all_pass"] = report.all_pass();
  j["wall_time_s"] = report.wall_time_s;
  return j.dump(2) + "\n";
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << contents;
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string csv_table(const std::vector<std::string>& headers,
                      const std::vector<std::vector<double>>& columns) {
  if (headers.size() != columns.size())
    throw std::invalid_argument("csv_table: header/column count mismatch");
  std::string out;
  for (std::size_t c = 0; c < headers.size(); ++c) {
    if (c) out += ",";
    out += headers[c];
  }
  out += "\n";
  const std::size_t rows = columns.empty() ? 0 : columns[0].size();
  for (const auto& col : columns) {
    if (col.size() != rows) throw std::invalid_argument("csv_table: ragged columns");
  }
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < columns.size(); ++c) {
      if (c) out += ",";
      out += format_double(columns[c][r]);
    }
    out += "\n";
  }
  return out;
}

}  // namespace cbo
