// Command-line front end: parses a run configuration, dispatches the
// requested experiment, writes report.json plus plot-ready CSV files, and
// exits 0 only when every gate in the produced report passed (2 on gate
// failure, 1 on error).

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <numeric>
#include <string>
#include <vector>

#include "cbo/config.hpp"
#include "cbo/consensus.hpp"
#include "cbo/dynamics.hpp"
#include "cbo/exact_sum.hpp"
#include "cbo/experiments.hpp"
#include "cbo/game.hpp"
#include "cbo/metrics.hpp"
#include "cbo/noise.hpp"
#include "cbo/parallel.hpp"
#include "cbo/report.hpp"

namespace fs = std::filesystem;
using namespace cbo;

namespace {

constexpr const char* kUsage = R"(usage: cbo-games <subcommand> [options]

subcommands:
  simulate         integrate one particle run and report its terminal state
  variance-decay   seed-averaged V(t) decay fit against the rate floor
  mf-rate          finite-N gap against a common-noise reference ensemble
  iid-consensus    weighted-mean convergence rate over i.i.d. samples
  stability-probe  consensus stability ratio over random measure pairs
  moment-monitor   running p-moment supremum across xi in {0, 0.5, 1}
  gamma            print the mean-field rate exponent: gamma --q Q --p P --pm PF
  selftest         run the built-in invariant suite

options (for experiment subcommands):
  --config PATH    read key = value configuration (sections allowed)
  --KEY VALUE      override any config key, e.g. --params.sigma 0.25
  --help           this text

Initial particle positions are drawn uniformly from [-3, 3]^d.
Worker threads are capped by the CBO_GAMES_THREADS environment variable
(0 or unset = hardware concurrency). Reports echo the full configuration;
identical configurations reproduce byte-identical outputs.

configuration keys (defaults in parentheses):
)";

void print_help() {
  std::cout << kUsage;
  for (const auto& k : config_keys()) {
    std::cout << "  " << k.key << " (" << k.default_value << ")  " << k.help << "\n";
  }
}

int fail(const std::string& message) {
  std::cerr << "error: " << message << "\n";
  return 1;
}

void write_report(const RunConfig& cfg, const ExperimentReport& report) {
  fs::create_directories(cfg.out_dir);
  if (cfg.out_json) {
    write_file((fs::path(cfg.out_dir) / "report.json").string(), report_to_json(report));
  }
}

void write_csv(const RunConfig& cfg, const std::string& name,
               const std::vector<std::string>& headers,
               const std::vector<std::vector<double>>& columns) {
  if (!cfg.out_csv) return;
  fs::create_directories(cfg.out_dir);
  write_file((fs::path(cfg.out_dir) / name).string(), csv_table(headers, columns));
}

void emit_v_trace(const RunConfig& cfg, const ExperimentReport& report, int players) {
  std::vector<std::string> headers = {"time"};
  std::vector<std::vector<double>> cols = {report.series.at("time")};
  for (int m = 1; m <= players; ++m) {
    headers.push_back("V_" + std::to_string(m));
    cols.push_back(report.series.at("V_" + std::to_string(m)));
  }
  headers.push_back("V_total");
  cols.push_back(report.series.at("V_total"));
  write_csv(cfg, "v_trace.csv", headers, cols);
}

int finish(const RunConfig& cfg, const ExperimentReport& report) {
  for (const auto& g : report.verdicts) {
    std::cout << (g.pass ? "PASS " : "FAIL ") << g.name << ": measured "
              << format_double(g.measured) << " " << g.op << " " << format_double(g.threshold)
              << "\n";
  }
  std::cout << (report.all_pass() ? "all gates passed" : "gate failure") << " ("
            << format_double(report.wall_time_s) << " s)\n";
  write_report(cfg, report);
  return report.all_pass() ? 0 : 2;
}

int cmd_simulate(const RunConfig& cfg) {
  const auto game = builtin_game(cfg.game_name, cfg.players, cfg.dim, cfg.coupling);
  const NoiseStream stream(cfg.base_seed);
  const auto init = make_uniform_ensemble(cfg.players, cfg.n_particles, cfg.dim, {}, stream);
  const auto traj = simulate(game, init, cfg.params, stream, cfg.record_every);

  ExperimentReport report;
  report.name = "simulate";
  report.config_text = render_config(cfg);
  report.seed_count = 1;

  const auto& final_consensus = traj.consensus_path.back();
  Strategy joint(cfg.players, cfg.dim);
  for (int m = 0; m < cfg.players; ++m) {
    const auto pt = final_consensus.point(m);
    std::copy(pt.begin(), pt.end(), joint.block(m).begin());
    report.series["consensus_" + std::to_string(m + 1)] =
        std::vector<double>(pt.begin(), pt.end());
  }
  const double residual = nash_residual(game, joint, 10000, 3.0, cfg.base_seed ^ 0x9E37u);
  report.series["nash_residual"] = {residual};

  if (game.known_nash) {
    const auto vt = variance_trace(traj, *game.known_nash);
    report.series["time"] = vt.times;
    for (int m = 0; m < cfg.players; ++m)
      report.series["V_" + std::to_string(m + 1)] = vt.per_player[m];
    report.series["V_total"] = vt.total;
    emit_v_trace(cfg, report, cfg.players);
  }

  std::cout << "terminal consensus:";
  for (int m = 0; m < cfg.players; ++m) {
    std::cout << " player" << (m + 1) << " = (";
    const auto pt = final_consensus.point(m);
    for (int c = 0; c < cfg.dim; ++c) std::cout << (c ? ", " : "") << format_double(pt[c]);
    std::cout << ")";
  }
  std::cout << "\nsampled nash residual: " << format_double(residual) << "\n";
  return finish(cfg, report);
}

int cmd_variance_decay(const RunConfig& cfg) {
  const auto game = builtin_game(cfg.game_name, cfg.players, cfg.dim, cfg.coupling);
  const auto seeds = cfg.seeds();
  auto report =
      run_variance_decay(game, cfg.params, cfg.n_particles, seeds, {}, cfg.record_every);
  report.config_text = render_config(cfg);
  emit_v_trace(cfg, report, cfg.players);
  return finish(cfg, report);
}

int cmd_mf_rate(const RunConfig& cfg) {
  const auto game = builtin_game(cfg.game_name, cfg.players, cfg.dim, cfg.coupling);
  const auto seeds = cfg.seeds();
  auto report = run_mf_rate(game, cfg.params, cfg.n_list, cfg.n_ref, cfg.p, seeds);
  report.config_text = render_config(cfg);
  write_csv(cfg, "mf_rate.csv", {"N", "gap", "gap_stderr"},
            {report.series.at("N"), report.series.at("gap"), report.series.at("gap_stderr")});
  return finish(cfg, report);
}

int cmd_iid_consensus(const RunConfig& cfg) {
  const auto sampler = gaussian_sampler(cfg.dim);
  const FrozenCost bounded = [](std::span<const double> x, std::span<const double>) {
    double s = 0;
    for (double v : x) s += v * v;
    return 1.0 / (1.0 + s);
  };
  const std::vector<double> frozen_y(static_cast<std::size_t>(cfg.players - 1) * cfg.dim, 0.0);
  auto report = run_iid_consensus(sampler, bounded, frozen_y, cfg.params.alpha, cfg.n_list,
                                  cfg.trials, cfg.p, cfg.base_seed);
  report.config_text = render_config(cfg);
  write_csv(cfg, "iid.csv", {"N", "err", "err_stderr"},
            {report.series.at("N"), report.series.at("err"), report.series.at("err_stderr")});
  return finish(cfg, report);
}

int cmd_stability_probe(const RunConfig& cfg) {
  const auto game = builtin_game(cfg.game_name, cfg.players, cfg.dim, cfg.coupling);
  auto report = run_stability_probe(game, cfg.moment_bound, cfg.p, cfg.trials, cfg.base_seed,
                                    cfg.params.alpha);
  report.config_text = render_config(cfg);
  write_csv(cfg, "stability.csv", {"trial", "ratio"},
            {report.series.at("trial"), report.series.at("ratio")});
  return finish(cfg, report);
}

int cmd_moment_monitor(const RunConfig& cfg) {
  const auto game = builtin_game(cfg.game_name, cfg.players, cfg.dim, cfg.coupling);
  const auto seeds = cfg.seeds();
  auto report = run_moment_monitor(game, cfg.params, cfg.n_particles, cfg.p, seeds);
  report.config_text = render_config(cfg);
  write_csv(cfg, "moment_monitor.csv", {"xi", "kappa_hat", "sup_moment", "c_mon"},
            {report.series.at("xi"), report.series.at("kappa_hat"),
             report.series.at("sup_moment"), report.series.at("c_mon")});
  return finish(cfg, report);
}

int cmd_gamma(const std::vector<std::string>& args) {
  double q = 0, p = 0, pm = 0;
  bool have_q = false, have_p = false, have_pm = false;
  for (std::size_t i = 0; i + 1 < args.size(); i += 2) {
    const std::string& key = args[i];
    const double v = std::strtod(args[i + 1].c_str(), nullptr);
    if (key == "--q") {
      q = v;
      have_q = true;
    } else if (key == "--p") {
      p = v;
      have_p = true;
    } else if (key == "--pm") {
      pm = v;
      have_pm = true;
    } else {
      return fail("gamma: unknown flag '" + key + "'");
    }
  }
  if (!have_q || !have_p || !have_pm) return fail("gamma requires --q, --p and --pm");
  std::cout << format_double(gamma_exponent(q, p, pm)) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// Built-in invariant suite.

int g_selftest_failures = 0;

void check(bool ok, const std::string& name) {
  std::cout << (ok ? "PASS " : "FAIL ") << name << "\n";
  if (!ok) ++g_selftest_failures;
}

void selftest_consensus() {
  const NoiseStream stream(7001);
  const auto game = builtin_game("decoupled-quadratic", 2, 2, 0.0);
  bool normalized = true, sublinear = true, mean_ok = true, argmin_ok = true, perm_ok = true,
       finite_ok = true;
  for (int rep = 0; rep < 1000; ++rep) {
    const int n = 1 + static_cast<int>(stream.uniform(StreamDomain::scratch, 0, rep, 0, 0) * 48);
    std::vector<double> costs(n);
    for (int i = 0; i < n; ++i) {
      costs[i] =
          (stream.uniform(StreamDomain::scratch, 1, rep, i, 0) - 0.5) * 2e6;
    }
    const double alpha =
        std::pow(10.0, stream.uniform(StreamDomain::scratch, 2, rep, 0, 0) * 6.0);
    const auto w = softmin_weights(costs, alpha);
    double total = 0;
    for (double v : w) {
      total += v;
      if (!std::isfinite(v)) finite_ok = false;
    }
    if (std::abs(total - 1.0) > 1e-12) normalized = false;

    Ensemble ens(2, n, 2);
    for (auto& v : ens.x) {
      static std::uint64_t ctr = 0;
      v = (stream.uniform(StreamDomain::scratch, 3, rep, ctr++, 0) - 0.5) * 8.0;
    }
    const auto cs = consensus_all(game, ens, alpha);
    for (int m = 0; m < 2; ++m) {
      double cn = 0, best = 0;
      for (double v : cs.point(m)) cn += v * v;
      for (int i = 0; i < n; ++i) {
        double s = 0;
        for (double v : ens.at(m, i)) s += v * v;
        best = std::max(best, s);
      }
      if (std::sqrt(cn) > std::sqrt(best)) sublinear = false;
    }

    if (rep % 50 == 0) {
      // alpha = 0 mean reduction.
      const auto w0 = softmin_weights(costs, 0.0);
      const auto mean_pt = weighted_point(
          std::span<const double>(ens.x.data(), static_cast<std::size_t>(n) * 2), 2, w0);
      ExactSum sx, sy;
      for (int i = 0; i < n; ++i) {
        sx.add(ens.at(0, i)[0]);
        sy.add(ens.at(0, i)[1]);
      }
      if (std::abs(mean_pt[0] - sx.value() / n) > 1e-12 ||
          std::abs(mean_pt[1] - sy.value() / n) > 1e-12) {
        mean_ok = false;
      }
      // alpha -> inf argmin reduction.
      int best_i = 0;
      for (int i = 1; i < n; ++i) {
        if (costs[i] < costs[best_i]) best_i = i;
      }
      const auto w_inf = softmin_weights(costs, 1e6);
      const auto pt = weighted_point(
          std::span<const double>(ens.x.data(), static_cast<std::size_t>(n) * 2), 2, w_inf);
      const double gap = std::abs(costs[best_i] - costs[best_i == 0 ? (n > 1 ? 1 : 0) : 0]);
      if (n > 1 && gap > 1e-3) {
        for (int c = 0; c < 2; ++c) {
          if (std::abs(pt[c] - ens.at(0, best_i)[c]) > 1e-9) argmin_ok = false;
        }
      }
      // Permutation invariance, bitwise.
      std::vector<int> idx(n);
      std::iota(idx.begin(), idx.end(), 0);
      for (int i = n - 1; i > 0; --i) {
        const int j = static_cast<int>(stream.uniform(StreamDomain::scratch, 4, rep, i, 0) *
                                       (i + 1));
        std::swap(idx[i], idx[std::min(j, i)]);
      }
      Ensemble perm(2, n, 2);
      for (int m = 0; m < 2; ++m) {
        for (int i = 0; i < n; ++i) {
          const auto src = ens.at(m, idx[i]);
          std::copy(src.begin(), src.end(), perm.at(m, i).begin());
        }
      }
      if (consensus_all(game, perm, alpha).pts != cs.pts) perm_ok = false;
    }
  }
  check(normalized, "softmin weights normalized within 1e-12");
  check(finite_ok, "softmin weights finite across alpha in [1, 1e6], costs in [-1e6, 1e6]");
  check(sublinear, "consensus norm bounded by max particle norm");
  check(mean_ok, "alpha = 0 reduces to the arithmetic mean");
  check(argmin_ok, "alpha = 1e6 selects the argmin particle");
  check(perm_ok, "consensus invariant under particle permutations (bitwise)");
}

void selftest_wasserstein() {
  const NoiseStream stream(7002);
  bool match = true, mean_bound = true;
  for (int rep = 0; rep < 100; ++rep) {
    const int n = 2 + static_cast<int>(stream.uniform(StreamDomain::scratch, 10, rep, 0, 0) * 5);
    std::vector<double> atoms_a(static_cast<std::size_t>(n) * 2),
        atoms_b(static_cast<std::size_t>(n) * 2);
    for (std::size_t j = 0; j < atoms_a.size(); ++j) {
      atoms_a[j] = (stream.uniform(StreamDomain::scratch, 11, rep, j, 0) - 0.5) * 6;
      atoms_b[j] = (stream.uniform(StreamDomain::scratch, 12, rep, j, 0) - 0.5) * 6;
    }
    const EmpiricalMeasure a{2, atoms_a}, b{2, atoms_b};
    const double w2 = wasserstein_p(a, b, 2.0);
    // Brute force over permutations.
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double best = 1e300;
    do {
      double s = 0;
      for (int i = 0; i < n; ++i) {
        double d2 = 0;
        for (int c = 0; c < 2; ++c) {
          const double d = a.atom(i)[c] - b.atom(perm[i])[c];
          d2 += d * d;
        }
        s += d2;
      }
      best = std::min(best, s);
    } while (std::next_permutation(perm.begin(), perm.end()));
    if (std::abs(w2 - std::sqrt(best / n)) > 1e-9) match = false;
    const auto ma = a.mean();
    const auto mb = b.mean();
    double dm = 0;
    for (int c = 0; c < 2; ++c) dm += (ma[c] - mb[c]) * (ma[c] - mb[c]);
    if (std::sqrt(dm) > w2 + 1e-9) mean_bound = false;
  }
  check(match, "assignment W_p matches the brute-force permutation oracle");
  check(mean_bound, "mean difference bounded by W_p");
}

void selftest_gamma() {
  bool ok = true;
  const NoiseStream stream(7003);
  for (int rep = 0; rep < 50; ++rep) {
    const double pm = 1.0 + stream.uniform(StreamDomain::scratch, 20, rep, 0, 0) * 2.0;
    const double pf = std::max(2.0, pm);
    const double q = std::max(4.0, 2.0 * pm) +
                     stream.uniform(StreamDomain::scratch, 21, rep, 0, 0) * 8.0;
    const double p = 0.5 + stream.uniform(StreamDomain::scratch, 22, rep, 0, 0) * (q / 2 - 0.5);
    // Independent three-term evaluation.
    double expect = 0.5;
    if ((q - p) / (2 * p * p) < expect) expect = (q - p) / (2 * p * p);
    if ((q - pf) / (2 * pf * pf) < expect) expect = (q - pf) / (2 * pf * pf);
    if (gamma_exponent(q, p, pm) != expect) ok = false;
  }
  check(ok, "rate exponent matches an independent three-term evaluation");
  check(gamma_exponent(6, 2, 1) == 0.5, "Monte-Carlo threshold case yields exactly 1/2");
}

void selftest_determinism() {
  const auto game = builtin_game("coupled-quadratic", 2, 2, 0.4);
  CboParams p;
  p.t_end = 0.3;
  const auto init = make_uniform_ensemble(2, 600, 2, {}, NoiseStream(7004));
  set_worker_count(1);
  const auto a = simulate(game, init, p, 7004, 10);
  set_worker_count(2);
  const auto b = simulate(game, init, p, 7004, 10);
  set_worker_count(0);
  check(a.terminal.x == b.terminal.x, "trajectories bit-identical across worker counts");
  const auto run = simulate_coupled(game, {}, p, 5, 5, 7004, 100);
  bool zero = true;
  for (double gp : run.sup_gap) zero = zero && gp == 0.0;
  check(zero, "self-coupled systems agree exactly");
}

int cmd_selftest() {
  g_selftest_failures = 0;
  selftest_consensus();
  selftest_wasserstein();
  selftest_gamma();
  selftest_determinism();
  std::cout << (g_selftest_failures == 0 ? "selftest passed" : "selftest FAILED") << "\n";
  return g_selftest_failures == 0 ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  if (args.empty() || args[0] == "--help" || args[0] == "-h") {
    print_help();
    return args.empty() ? 1 : 0;
  }
  const std::string sub = args[0];
  args.erase(args.begin());

  if (const char* env = std::getenv("CBO_GAMES_THREADS")) {
    set_worker_count(static_cast<unsigned>(std::strtoul(env, nullptr, 10)));
  }

  try {
    if (sub == "gamma") return cmd_gamma(args);
    if (sub == "selftest") return cmd_selftest();

    static const std::vector<std::string> experiments = {
        "simulate",        "variance-decay", "mf-rate",
        "iid-consensus",   "stability-probe", "moment-monitor"};
    if (std::find(experiments.begin(), experiments.end(), sub) == experiments.end()) {
      return fail("unknown subcommand '" + sub + "' (see --help)");
    }

    std::string config_path;
    std::vector<std::pair<std::string, std::string>> overrides;
    for (std::size_t i = 0; i < args.size(); ++i) {
      if (args[i] == "--help") {
        print_help();
        return 0;
      }
      if (args[i].rfind("--", 0) != 0) return fail("expected a flag, got '" + args[i] + "'");
      if (i + 1 >= args.size()) return fail("flag " + args[i] + " needs a value");
      const std::string key = args[i].substr(2);
      const std::string& value = args[++i];
      if (key == "config") {
        config_path = value;
      } else {
        overrides.emplace_back(key, value);
      }
    }
    RunConfig cfg = config_path.empty() ? parse_config_text("", overrides)
                                        : parse_config_file(config_path, overrides);
    cfg.experiment = sub;
    validate_config(cfg);

    if (sub == "simulate") return cmd_simulate(cfg);
    if (sub == "variance-decay") return cmd_variance_decay(cfg);
    if (sub == "mf-rate") return cmd_mf_rate(cfg);
    if (sub == "iid-consensus") return cmd_iid_consensus(cfg);
    if (sub == "stability-probe") return cmd_stability_probe(cfg);
    if (sub == "moment-monitor") return cmd_moment_monitor(cfg);
    return fail("unreachable subcommand");
  } catch (const std::exception& e) {
    return fail(e.what());
  }
}
