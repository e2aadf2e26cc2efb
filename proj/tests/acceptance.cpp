// Acceptance suite: every criterion runs at its stated tolerance and prints
// one pass/fail line. Exit code is the number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <string>
#include <vector>

#include "cbo/consensus.hpp"
#include "cbo/dynamics.hpp"
#include "cbo/exact_sum.hpp"
#include "cbo/experiments.hpp"
#include "cbo/game.hpp"
#include "cbo/metrics.hpp"
#include "cbo/noise.hpp"
#include "cbo/parallel.hpp"

using namespace cbo;

namespace {

int g_failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail,
            double seconds) {
  std::printf("criterion %d [%s] %s (%s) [%.1fs]\n", id, name.c_str(),
              pass ? "PASS" : "FAIL", detail.c_str(), seconds);
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

std::vector<std::uint64_t> seed_range(int count) {
  std::vector<std::uint64_t> seeds(count);
  std::iota(seeds.begin(), seeds.end(), 1);
  return seeds;
}

double fit_value(const ExperimentReport& r, const std::string& name, bool slope) {
  for (const auto& f : r.fits) {
    if (f.name == name) return slope ? f.fit.slope : f.fit.r_squared;
  }
  return std::nan("");
}

// 1. Seed-averaged variance decay at the pinned configuration.
void criterion_variance_decay() {
  const double t0 = now_seconds();
  const auto game = builtin_game("decoupled-quadratic", 2, 2, 0.0);
  CboParams p;
  p.lambda = 1.0;
  p.sigma = 0.5;
  p.alpha = 40.0;
  p.dt = 0.01;
  p.t_end = 10.0;
  p.diffusion = DiffusionKind::anisotropic;
  const auto r = run_variance_decay(game, p, 200, seed_range(8));
  const double slope = fit_value(r, "decay", true);
  const double r2 = fit_value(r, "decay", false);
  const auto& v = r.series.at("V_total");
  const double ratio = v.back() / v.front();
  const double secs = now_seconds() - t0;
  const bool pass = slope <= -0.575 && r2 >= 0.9 && ratio <= 1e-3 && secs <= 60.0;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "slope=%.4f r2=%.4f V(T)/V(0)=%.3e", slope, r2, ratio);
  report(1, "variance decay", pass, buf, secs);
}

// 2. Mean-field limit rate via common-noise coupling.
void criterion_mf_rate() {
  const double t0 = now_seconds();
  const auto game = builtin_game("decoupled-quadratic", 2, 2, 0.0);
  CboParams p;
  p.lambda = 1.0;
  p.sigma = 0.5;
  p.alpha = 40.0;
  p.dt = 0.01;
  p.t_end = 10.0;
  p.diffusion = DiffusionKind::anisotropic;
  const std::vector<int> n_list = {16, 32, 64, 128, 256};
  const auto r = run_mf_rate(game, p, n_list, 4096, 2.0, seed_range(16));
  const double slope = fit_value(r, "rate", true);
  const double r2 = fit_value(r, "rate", false);
  const double secs = now_seconds() - t0;
  const bool pass = slope >= -0.75 && slope <= -0.30 && r2 >= 0.9 && secs <= 600.0;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "slope=%.4f r2=%.4f", slope, r2);
  report(2, "mean-field rate", pass, buf, secs);
}

// 3. Monte-Carlo rate of the weighted mean for i.i.d. samples.
void criterion_iid_rate() {
  const double t0 = now_seconds();
  const auto mu = gaussian_sampler(2);
  const FrozenCost bounded = [](std::span<const double> x, std::span<const double>) {
    double s = 0;
    for (double v : x) s += v * v;
    return 1.0 / (1.0 + s);
  };
  const std::vector<double> frozen_y(2, 0.0);
  const std::vector<int> n_list = {100, 1000, 10000, 100000};
  const auto r =
      run_iid_consensus(mu, bounded, frozen_y, 1.0, n_list, 200, 2.0, 1, 10000000);
  const double slope = fit_value(r, "rate", true);
  const double agreement = r.series.at("oracle_agreement")[0];
  const double secs = now_seconds() - t0;
  const bool pass =
      std::abs(slope + 0.5) <= 0.1 && agreement <= 1e-3 && secs <= 180.0;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "slope=%.4f oracle_agreement=%.2e", slope, agreement);
  report(3, "iid weighted-mean rate", pass, buf, secs);
}

// 4. Consensus invariant suite over randomized cases.
void criterion_consensus_invariants() {
  const double t0 = now_seconds();
  const NoiseStream stream(401);
  bool ok = true;
  std::string why = "all invariants held";
  const int cases = 10000;
  for (int rep = 0; rep < cases && ok; ++rep) {
    const int n = 1 + static_cast<int>(stream.uniform(StreamDomain::scratch, 0, rep, 0, 0) * 63);
    const int d = 2;
    std::vector<double> costs(n), positions(static_cast<std::size_t>(n) * d);
    for (int i = 0; i < n; ++i) {
      costs[i] = (stream.uniform(StreamDomain::scratch, 1, rep, i, 0) - 0.5) * 2e6;
      for (int c = 0; c < d; ++c) {
        positions[static_cast<std::size_t>(i) * d + c] =
            (stream.uniform(StreamDomain::scratch, 2, rep, i, c) - 0.5) * 8.0;
      }
    }
    const double alpha =
        std::pow(10.0, stream.uniform(StreamDomain::scratch, 3, rep, 0, 0) * 6.0);

    // Normalization and finiteness across the hostile range.
    const auto w = softmin_weights(costs, alpha);
    double total = 0;
    for (double v : w) {
      if (!std::isfinite(v)) {
        ok = false;
        why = "non-finite weight";
      }
      total += v;
    }
    if (std::abs(total - 1.0) > 1e-12) {
      ok = false;
      why = "normalization off by more than 1e-12";
    }

    // Sublinearity, exactly.
    const auto pt = weighted_point(positions, d, w);
    double cn = 0, best = 0;
    for (double v : pt) cn += v * v;
    for (int i = 0; i < n; ++i) {
      double s = 0;
      for (int c = 0; c < d; ++c) {
        const double v = positions[static_cast<std::size_t>(i) * d + c];
        s += v * v;
      }
      best = std::max(best, s);
    }
    if (std::sqrt(cn) > std::sqrt(best)) {
      ok = false;
      why = "consensus left the particle norm ball";
    }

    // alpha = 0 reduces to the arithmetic mean.
    const auto w0 = softmin_weights(costs, 0.0);
    const auto mean_pt = weighted_point(positions, d, w0);
    for (int c = 0; c < d; ++c) {
      ExactSum s;
      for (int i = 0; i < n; ++i) s.add(positions[static_cast<std::size_t>(i) * d + c]);
      if (std::abs(mean_pt[c] - s.value() / n) > 1e-12) {
        ok = false;
        why = "alpha = 0 mean reduction violated";
      }
    }

    // alpha = 1e6 concentrates on the argmin particle.
    int best_i = 0;
    for (int i = 1; i < n; ++i) {
      if (costs[i] < costs[best_i]) best_i = i;
    }
    const auto w_inf = softmin_weights(costs, 1e6);
    const auto arg_pt = weighted_point(positions, d, w_inf);
    for (int c = 0; c < d; ++c) {
      if (std::abs(arg_pt[c] - positions[static_cast<std::size_t>(best_i) * d + c]) > 1e-9) {
        ok = false;
        why = "alpha = 1e6 argmin reduction violated";
      }
    }

    // Permutation invariance, bitwise.
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (int i = n - 1; i > 0; --i) {
      const int j = std::min(
          i, static_cast<int>(stream.uniform(StreamDomain::scratch, 4, rep, i, 0) * (i + 1)));
      std::swap(idx[i], idx[j]);
    }
    std::vector<double> pcosts(n), ppos(static_cast<std::size_t>(n) * d);
    for (int i = 0; i < n; ++i) {
      pcosts[i] = costs[idx[i]];
      for (int c = 0; c < d; ++c) {
        ppos[static_cast<std::size_t>(i) * d + c] =
            positions[static_cast<std::size_t>(idx[i]) * d + c];
      }
    }
    const auto perm_pt = weighted_point(ppos, d, softmin_weights(pcosts, alpha));
    if (perm_pt != pt) {
      ok = false;
      why = "permutation changed the consensus bits";
    }
  }
  const double secs = now_seconds() - t0;
  report(4, "consensus invariants", ok && secs <= 30.0,
         why + " over 10^4 cases", secs);
}

// 5. Dynamics invariants: degenerate exactness, coupling, reproducibility,
// xi-relaxed moment bounds.
void criterion_dynamics_invariants() {
  const double t0 = now_seconds();
  bool ok = true;
  std::string why = "all invariants held";

  const auto game = builtin_game("decoupled-quadratic", 2, 2, 0.0);
  CboParams p;
  p.lambda = 1.0;
  p.sigma = 0.5;
  p.alpha = 40.0;
  p.dt = 0.01;
  p.t_end = 1.0;

  // N = 1: constant to the bit.
  {
    const NoiseStream stream(501);
    const auto init = make_uniform_ensemble(2, 1, 2, {}, stream);
    const auto traj = simulate(game, init, p, stream, 1);
    for (const auto& snap : traj.snapshots) {
      if (snap.x != init.x) {
        ok = false;
        why = "single-particle trajectory moved";
      }
    }
  }

  // Self-coupling: gap exactly zero.
  {
    const auto run = simulate_coupled(game, {}, p, 16, 16, 502, 1 << 20);
    for (double g : run.sup_gap) {
      if (g != 0.0) {
        ok = false;
        why = "self-coupling gap not exactly zero";
      }
    }
    if (run.small.terminal.x != run.reference.terminal.x) {
      ok = false;
      why = "self-coupled terminal states differ";
    }
  }

  // Bit-reproducibility across 1, 2, 8 workers.
  {
    const NoiseStream stream(503);
    const auto init = make_uniform_ensemble(2, 600, 2, {}, stream);
    std::vector<double> reference;
    for (unsigned workers : {1u, 2u, 8u}) {
      set_worker_count(workers);
      const auto traj = simulate(game, init, p, stream, 1 << 20);
      if (reference.empty()) {
        reference = traj.terminal.x;
      } else if (traj.terminal.x != reference) {
        ok = false;
        why = "worker count changed the trajectory bits";
      }
    }
    set_worker_count(0);
  }

  // Moment monitor finite for xi in {0, 0.5, 1} over T = 10, no blow-up.
  {
    CboParams pm = p;
    pm.t_end = 10.0;
    const auto r = run_moment_monitor(game, pm, 100, 2.0, seed_range(4));
    if (!r.all_pass()) {
      ok = false;
      why = "moment monitor gate failed";
    }
    for (double k : r.series.at("kappa_hat")) {
      if (!std::isfinite(k)) {
        ok = false;
        why = "kappa_hat not finite";
      }
    }
  }

  const double secs = now_seconds() - t0;
  report(5, "dynamics invariants", ok && secs <= 60.0, why, secs);
}

// 6. Exact Wasserstein against the brute-force permutation oracle.
void criterion_wasserstein_oracle() {
  const double t0 = now_seconds();
  const NoiseStream stream(601);
  bool ok = true;
  std::string why = "assignment = oracle; axioms and mean bound held";
  double worst = 0;
  for (int rep = 0; rep < 1000 && ok; ++rep) {
    const int n = 2 + static_cast<int>(stream.uniform(StreamDomain::scratch, 0, rep, 0, 0) * 7);
    const int d = 1 + static_cast<int>(stream.uniform(StreamDomain::scratch, 1, rep, 0, 0) * 3);
    const double p = 1.0 + static_cast<int>(
                               stream.uniform(StreamDomain::scratch, 2, rep, 0, 0) * 3);
    auto draw = [&](int which) {
      std::vector<double> atoms(static_cast<std::size_t>(n) * d);
      for (std::size_t j = 0; j < atoms.size(); ++j) {
        atoms[j] =
            (stream.uniform(StreamDomain::scratch, 3 + which, rep, j, 0) - 0.5) * 6.0;
      }
      return EmpiricalMeasure{d, std::move(atoms)};
    };
    const auto a = draw(0), b = draw(1), c = draw(2);

    // Brute-force permutation minimum.
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double best = 1e300;
    do {
      double s = 0;
      for (int i = 0; i < n; ++i) {
        double d2 = 0;
        for (int k = 0; k < d; ++k) {
          const double diff = a.atom(i)[k] - b.atom(perm[i])[k];
          d2 += diff * diff;
        }
        s += std::pow(std::sqrt(d2), p);
      }
      best = std::min(best, s);
    } while (std::next_permutation(perm.begin(), perm.end()));
    const double oracle = std::pow(best / n, 1.0 / p);
    const double fast = wasserstein_p(a, b, p);
    worst = std::max(worst, std::abs(fast - oracle));
    if (std::abs(fast - oracle) > 1e-9) {
      ok = false;
      why = "assignment diverged from the permutation oracle";
    }

    // Metric axioms.
    const double ab = fast, ba = wasserstein_p(b, a, p);
    const double ac = wasserstein_p(a, c, p), cb = wasserstein_p(c, b, p);
    if (std::abs(ab - ba) > 1e-9 || ab > ac + cb + 1e-9 || wasserstein_p(a, a, p) > 1e-12) {
      ok = false;
      why = "metric axiom violated";
    }

    // Mean difference bound.
    const auto ma = a.mean(), mb = b.mean();
    double dm = 0;
    for (int k = 0; k < d; ++k) dm += (ma[k] - mb[k]) * (ma[k] - mb[k]);
    if (std::sqrt(dm) > ab + 1e-9) {
      ok = false;
      why = "mean difference exceeded W_p";
    }
  }
  const double secs = now_seconds() - t0;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%s; max |assignment - oracle| = %.2e", why.c_str(), worst);
  report(6, "wasserstein oracle equivalence", ok && secs <= 30.0, buf, secs);
}

// 7. Rate-exponent calculator against an independent evaluation.
void criterion_gamma_calculator() {
  const double t0 = now_seconds();
  bool ok = true;
  std::string why = "grid matches; threshold cases exactly 1/2";
  const NoiseStream stream(701);
  for (int rep = 0; rep < 50; ++rep) {
    const double pm = 0.5 + stream.uniform(StreamDomain::scratch, 0, rep, 0, 0) * 2.5;
    const double pf = pm < 2.0 ? 2.0 : pm;
    const double q = std::max(4.0, 2.0 * pm) +
                     stream.uniform(StreamDomain::scratch, 1, rep, 0, 0) * 10.0;
    const double p =
        0.25 + stream.uniform(StreamDomain::scratch, 2, rep, 0, 0) * (q / 2.0 - 0.25);
    // Independently coded three-term evaluation.
    double expect = 0.5;
    const double t2 = (q - p) / (2.0 * p * p);
    const double t3 = (q - pf) / (2.0 * pf * pf);
    if (t2 < expect) expect = t2;
    if (t3 < expect) expect = t3;
    if (gamma_exponent(q, p, pm) != expect) {
      ok = false;
      why = "grid point diverged from the independent evaluation";
    }
  }
  for (double pm : {0.5, 1.0, 1.5, 2.0, 2.5, 3.0}) {
    const double pf = pm < 2.0 ? 2.0 : pm;
    const double q = std::max(6.0, pf + pf * pf);  // Monte-Carlo threshold
    if (gamma_exponent(q, 2.0, pm) != 0.5) {
      ok = false;
      why = "threshold case missed exactly 1/2";
    }
  }
  const double secs = now_seconds() - t0;
  report(7, "rate exponent calculator", ok && secs <= 1.0, why, secs);
}

// 8. Non-convex sanity: coupled Rastrigin equilibrium search.
void criterion_nonconvex_sanity() {
  const double t0 = now_seconds();
  const auto game = builtin_game("rastrigin-coupled", 2, 2, 0.1);
  CboParams p;
  p.lambda = 1.0;
  p.sigma = 0.3;
  p.alpha = 100.0;
  p.dt = 0.01;
  p.t_end = 20.0;
  p.diffusion = DiffusionKind::anisotropic;

  const int num_seeds = 8;
  std::vector<std::vector<double>> finals;  // joint consensus per seed
  int near_origin = 0;
  for (int s = 1; s <= num_seeds; ++s) {
    const NoiseStream stream(static_cast<std::uint64_t>(s));
    const auto init = make_uniform_ensemble(2, 400, 2, {}, stream);
    const auto traj = simulate(game, init, p, stream, 1 << 20);
    const auto& cs = traj.consensus_path.back();
    std::vector<double> joint;
    double n2 = 0;
    for (int m = 0; m < 2; ++m) {
      for (double v : cs.point(m)) {
        joint.push_back(v);
        n2 += v * v;
      }
    }
    if (std::sqrt(n2) <= 0.25) ++near_origin;
    finals.push_back(std::move(joint));
  }

  Strategy median(2, 2);
  for (int c = 0; c < 4; ++c) {
    std::vector<double> vals;
    for (const auto& f : finals) vals.push_back(f[c]);
    std::sort(vals.begin(), vals.end());
    median.x[c] = 0.5 * (vals[3] + vals[4]);  // even count: middle pair
  }
  const double residual = nash_residual(game, median, 10000, 3.0, 801);
  const double secs = now_seconds() - t0;
  const bool pass = residual <= 0.5 && near_origin >= 6 && secs <= 120.0;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "median residual=%.4g, %d/8 seeds within 0.25 of origin",
                residual, near_origin);
  report(8, "non-convex sanity", pass, buf, secs);
}

}  // namespace

int main() {
  criterion_variance_decay();
  criterion_mf_rate();
  criterion_iid_rate();
  criterion_consensus_invariants();
  criterion_dynamics_invariants();
  criterion_wasserstein_oracle();
  criterion_gamma_calculator();
  criterion_nonconvex_sanity();
  if (g_failures == 0) {
    std::printf("acceptance: all 8 criteria passed\n");
  } else {
    std::printf("acceptance: %d criterion(s) FAILED\n", g_failures);
  }
  return g_failures;
}
