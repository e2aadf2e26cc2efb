#pragma once

#include <map>
#include <string>
#include <vector>

#include "cbo/metrics.hpp"

namespace cbo {

// One named pass/fail gate with the quantity it was checked against.
// op is "<=", ">=" or "finite" (threshold ignored for the latter).
struct Gate {
  std::string name;
  double measured = 0.0;
  double threshold = 0.0;
  std::string op = "<=";
  bool pass = false;
};

Gate make_gate(const std::string& name, double measured, const std::string& op,
               double threshold);

struct NamedFit {
  std::string name;
  FitResult fit;
};

// Everything an experiment produced: the config it ran under, raw per-seed
// series, aggregated series, fits and verdicts. Verdicts are recomputable
// from the recorded series alone.
struct ExperimentReport {
  std::string name;
  std::string config_text;  // canonical key = value rendering, reparseable
  int seed_count = 0;
  std::map<std::string, std::vector<double>> series;
  std::map<std::string, std::vector<std::vector<double>>> per_seed;
  std::vector<NamedFit> fits;
  std::vector<Gate> verdicts;
  double wall_time_s = 0.0;

  bool all_pass() const;
};

// Serialization used by the CLI: full round-trip decimal precision.
std::string format_double(double v);
std::string report_to_json(const ExperimentReport& report);
void write_file(const std::string& path, const std::string& contents);

// Flat CSV emission; columns are written exactly in the given order.
std::string csv_table(const std::vector<std::string>& headers,
                      const std::vector<std::vector<double>>& columns);

}  // namespace cbo
