#include "cbo/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "cbo/report.hpp"

namespace cbo {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

int levenshtein(const std::string& a, const std::string& b) {
  std::vector<int> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = static_cast<int>(i);
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const int sub = prev[j - 1] + (a[i - 1] != b[j - 1]);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument("");
    return v;
  } catch (...) {
    throw ConfigError("invalid numeric value for '" + key + "': " + value);
  }
}

long long parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(value, &used);
    if (used != value.size()) throw std::invalid_argument("");
    return v;
  } catch (...) {
    throw ConfigError("invalid integer value for '" + key + "': " + value);
  }
}

std::vector<int> parse_int_list(const std::string& key, const std::string& value) {
  std::vector<int> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    out.push_back(static_cast<int>(parse_int(key, item)));
  }
  if (out.empty()) throw ConfigError("empty list for '" + key + "'");
  return out;
}

void apply(RunConfig& c, const std::string& key, const std::string& value) {
  if (key == "experiment.name") {
    c.experiment = value;
  } else if (key == "experiment.p") {
    c.p = parse_double(key, value);
  } else if (key == "experiment.trials") {
    c.trials = static_cast<int>(parse_int(key, value));
  } else if (key == "experiment.R") {
    c.moment_bound = parse_double(key, value);
  } else if (key == "game.name") {
    c.game_name = value;
  } else if (key == "game.M") {
    c.players = static_cast<int>(parse_int(key, value));
  } else if (key == "game.d") {
    c.dim = static_cast<int>(parse_int(key, value));
  } else if (key == "game.coupling") {
    c.coupling = parse_double(key, value);
  } else if (key == "params.lambda") {
    c.params.lambda = parse_double(key, value);
  } else if (key == "params.sigma") {
    c.params.sigma = parse_double(key, value);
  } else if (key == "params.alpha") {
    c.params.alpha = parse_double(key, value);
  } else if (key == "params.xi") {
    c.params.xi = parse_double(key, value);
  } else if (key == "params.dt") {
    c.params.dt = parse_double(key, value);
  } else if (key == "params.t_end") {
    c.params.t_end = parse_double(key, value);
  } else if (key == "params.diffusion") {
    if (value == "isotropic") {
      c.params.diffusion = DiffusionKind::isotropic;
    } else if (value == "anisotropic") {
      c.params.diffusion = DiffusionKind::anisotropic;
    } else {
      throw ConfigError("params.diffusion must be 'isotropic' or 'anisotropic', got '" + value +
                        "'");
    }
  } else if (key == "particles.N") {
    c.n_particles = static_cast<int>(parse_int(key, value));
  } else if (key == "particles.n_list") {
    c.n_list = parse_int_list(key, value);
  } else if (key == "particles.n_ref") {
    c.n_ref = static_cast<int>(parse_int(key, value));
  } else if (key == "seeds.base_seed") {
    c.base_seed = static_cast<std::uint64_t>(parse_int(key, value));
  } else if (key == "seeds.count") {
    c.seed_count = static_cast<int>(parse_int(key, value));
  } else if (key == "output.directory") {
    c.out_dir = value;
  } else if (key == "output.formats") {
    c.out_csv = c.out_json = false;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (item == "csv") {
        c.out_csv = true;
      } else if (item == "json") {
        c.out_json = true;
      } else if (!item.empty()) {
        throw ConfigError("output.formats entries must be csv or json, got '" + item + "'");
      }
    }
  } else if (key == "record_every") {
    c.record_every = static_cast<int>(parse_int(key, value));
  } else {
    // Unknown key: hard error with the nearest valid key.
    std::string best;
    int best_dist = 1 << 20;
    for (const auto& k : config_keys()) {
      const int d = levenshtein(key, k.key);
      if (d < best_dist) {
        best_dist = d;
        best = k.key;
      }
    }
    throw ConfigError("unknown key '" + key + "' (did you mean '" + best + "'?)");
  }
}

std::string canonical_key(const std::string& section, std::string key) {
  // Accept bare aliases for the two top-level spellings.
  if (section.empty()) {
    if (key == "experiment") return "experiment.name";
    if (key == "record_every") return key;
    if (key.find('.') != std::string::npos) return key;
    return key;  // will be rejected with a suggestion
  }
  if (section == "experiment" && key == "name") return "experiment.name";
  return section + "." + key;
}

std::string int_list_to_string(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(v[i]);
  }
  return out;
}

}  // namespace

std::vector<std::uint64_t> RunConfig::seeds() const {
  std::vector<std::uint64_t> out;
  out.reserve(seed_count);
  for (int s = 0; s < seed_count; ++s) out.push_back(base_seed + static_cast<std::uint64_t>(s));
  return out;
}

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = {
      {"experiment.name", "variance-decay",
       "one of: simulate, variance-decay, mf-rate, iid-consensus, stability-probe, moment-monitor"},
      {"experiment.p", "2", "moment/Wasserstein order used by rate experiments"},
      {"experiment.trials", "200", "trial count for iid-consensus and stability-probe"},
      {"experiment.R", "10", "p-moment bound for the stability probe"},
      {"game.name", "decoupled-quadratic",
       "decoupled-quadratic | coupled-quadratic | rastrigin-coupled"},
      {"game.M", "2", "player count (>= 2)"},
      {"game.d", "2", "strategy dimension per player (>= 1)"},
      {"game.coupling", "0", "coupling strength (|coupling| < 1 for coupled-quadratic)"},
      {"params.lambda", "1", "drift rate (>= 0)"},
      {"params.sigma", "0.5", "diffusion scale (>= 0)"},
      {"params.alpha", "40", "weight sharpness (> 0)"},
      {"params.xi", "1", "consensus relaxation factor in [0, 1]"},
      {"params.dt", "0.01", "step size (> 0, <= t_end)"},
      {"params.t_end", "10", "horizon (> 0)"},
      {"params.diffusion", "anisotropic", "isotropic | anisotropic"},
      {"particles.N", "200", "particles per player"},
      {"particles.n_list", "16,32,64,128,256", "system sizes for rate experiments"},
      {"particles.n_ref", "4096", "reference ensemble size for mf-rate"},
      {"seeds.base_seed", "1", "first seed; runs use base_seed .. base_seed+count-1"},
      {"seeds.count", "8", "number of independent seeds"},
      {"output.directory", ".", "where report.json and CSV files are written"},
      {"output.formats", "csv,json", "subset of {csv, json}"},
      {"record_every", "1", "trajectory thinning stride (>= 1)"},
  };
  return keys;
}

RunConfig parse_config_text(const std::string& text,
                            const std::vector<std::pair<std::string, std::string>>& overrides) {
  RunConfig c;
  std::stringstream ss(text);
  std::string line, section;
  int line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("line " + std::to_string(line_no) + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = canonical_key(section, trim(line.substr(0, eq)));
    const std::string value = trim(line.substr(eq + 1));
    try {
      apply(c, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  for (const auto& [key, value] : overrides) {
    apply(c, canonical_key("", key), value);
  }
  return c;
}

RunConfig parse_config_file(const std::string& path,
                            const std::vector<std::pair<std::string, std::string>>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), overrides);
}

std::string render_config(const RunConfig& c) {
  std::ostringstream out;
  out << "record_every = " << c.record_every << "\n";
  out << "[experiment]\n";
  out << "name = " << c.experiment << "\n";
  out << "p = " << format_double(c.p) << "\n";
  out << "trials = " << c.trials << "\n";
  out << "R = " << format_double(c.moment_bound) << "\n";
  out << "[game]\n";
  out << "name = " << c.game_name << "\n";
  out << "M = " << c.players << "\n";
  out << "d = " << c.dim << "\n";
  out << "coupling = " << format_double(c.coupling) << "\n";
  out << "[params]\n";
  out << "lambda = " << format_double(c.params.lambda) << "\n";
  out << "sigma = " << format_double(c.params.sigma) << "\n";
  out << "alpha = " << format_double(c.params.alpha) << "\n";
  out << "xi = " << format_double(c.params.xi) << "\n";
  out << "dt = " << format_double(c.params.dt) << "\n";
  out << "t_end = " << format_double(c.params.t_end) << "\n";
  out << "diffusion = "
      << (c.params.diffusion == DiffusionKind::isotropic ? "isotropic" : "anisotropic") << "\n";
  out << "[particles]\n";
  out << "N = " << c.n_particles << "\n";
  out << "n_list = " << int_list_to_string(c.n_list) << "\n";
  out << "n_ref = " << c.n_ref << "\n";
  out << "[seeds]\n";
  out << "base_seed = " << c.base_seed << "\n";
  out << "count = " << c.seed_count << "\n";
  out << "[output]\n";
  out << "directory = " << c.out_dir << "\n";
  std::string formats;
  if (c.out_csv) formats = "csv";
  if (c.out_json) formats += (formats.empty() ? "json" : ",json");
  out << "formats = " << formats << "\n";
  return out.str();
}

void validate_config(const RunConfig& c) {
  static const std::vector<std::string> experiments = {
      "simulate", "variance-decay", "mf-rate", "iid-consensus", "stability-probe",
      "moment-monitor"};
  if (std::find(experiments.begin(), experiments.end(), c.experiment) == experiments.end())
    throw ConfigError("unknown experiment '" + c.experiment + "'");
  static const std::vector<std::string> games = {"decoupled-quadratic", "coupled-quadratic",
                                                 "rastrigin-coupled"};
  if (std::find(games.begin(), games.end(), c.game_name) == games.end())
    throw ConfigError("unknown game '" + c.game_name + "'");
  if (c.players < 2) throw ConfigError("game.M must be >= 2");
  if (c.dim < 1) throw ConfigError("game.d must be >= 1");
  if (c.game_name == "coupled-quadratic" && !(std::abs(c.coupling) < 1.0))
    throw ConfigError("game.coupling must satisfy |coupling| < 1 for coupled-quadratic");
  try {
    c.params.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (c.experiment == "variance-decay" &&
      !(2.0 * c.params.lambda > c.params.sigma * c.params.sigma))
    throw ConfigError("decay regime violated (2lambda > sigma^2 required)");
  if (c.n_particles < 1) throw ConfigError("particles.N must be >= 1");
  if (c.n_ref < 1) throw ConfigError("particles.n_ref must be >= 1");
  for (int n : c.n_list) {
    if (n < 1) throw ConfigError("particles.n_list entries must be >= 1");
  }
  if (c.experiment == "mf-rate") {
    for (int n : c.n_list) {
      if (n > c.n_ref / 4)
        throw ConfigError("mf-rate requires max(n_list) <= n_ref / 4 (surrogate bias)");
    }
  }
  if (c.seed_count < 1) throw ConfigError("seeds.count must be >= 1");
  if (c.trials < 1) throw ConfigError("experiment.trials must be >= 1");
  if (!(c.moment_bound > 0)) throw ConfigError("experiment.R must be > 0");
  if (!(c.p >= 1.0)) throw ConfigError("experiment.p must be >= 1");
  if (c.record_every < 1) throw ConfigError("record_every must be >= 1");
  if (!c.out_csv && !c.out_json) throw ConfigError("output.formats must include csv or json");
}

}  // namespace cbo
