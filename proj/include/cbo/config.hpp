#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cbo/dynamics.hpp"

namespace cbo {

// Fully resolved run configuration. Every field has a default; the config
// file and command-line flags override it key by key.
struct RunConfig {
  // experiment
  std::string experiment = "variance-decay";
  double p = 2.0;
  int trials = 200;
  double moment_bound = 10.0;  // R of the stability probe
  // game
  std::string game_name = "decoupled-quadratic";
  int players = 2;
  int dim = 2;
  double coupling = 0.0;
  // params
  CboParams params;
  // particles
  int n_particles = 200;
  std::vector<int> n_list = {16, 32, 64, 128, 256};
  int n_ref = 4096;
  // seeds
  std::uint64_t base_seed = 1;
  int seed_count = 8;
  // output
  std::string out_dir = ".";
  bool out_csv = true;
  bool out_json = true;
  int record_every = 1;

  bool operator==(const RunConfig&) const = default;

  std::vector<std::uint64_t> seeds() const;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// All recognized keys with their defaults and one-line help.
struct ConfigKey {
  std::string key;
  std::string default_value;
  std::string help;
};
const std::vector<ConfigKey>& config_keys();

// Parses "key = value" lines with optional [section] headers (a section
// prefixes the keys inside it). '#' starts a comment. Unknown keys are hard
// errors that name the nearest valid key. Later assignments win; overrides
// are applied after the text.
RunConfig parse_config_text(const std::string& text,
                            const std::vector<std::pair<std::string, std::string>>& overrides = {});
RunConfig parse_config_file(const std::string& path,
                            const std::vector<std::pair<std::string, std::string>>& overrides = {});

// Canonical rendering; parse_config_text(render_config(c)) == c.
std::string render_config(const RunConfig& config);

// Structural validation shared by every subcommand. Throws ConfigError
// naming the violated invariant.
void validate_config(const RunConfig& config);

}  // namespace cbo
