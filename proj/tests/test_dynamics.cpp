#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "cbo/dynamics.hpp"
#include "cbo/parallel.hpp"

using namespace cbo;

namespace {

CboParams quick_params() {
  CboParams p;
  p.lambda = 1.0;
  p.sigma = 0.5;
  p.alpha = 40.0;
  p.dt = 0.01;
  p.t_end = 0.5;
  return p;
}

double moment2(const Ensemble& e) {
  double s = 0;
  for (double v : e.x) s += v * v;
  return s / (static_cast<double>(e.players) * e.count);
}

}  // namespace

TEST_CASE("apply_diffusion") {
  std::vector<double> out(2);
  apply_diffusion(DiffusionKind::isotropic, std::vector<double>{0, 0},
                  std::vector<double>{1.3, -0.2}, out);
  CHECK(out == std::vector<double>{0, 0});
  apply_diffusion(DiffusionKind::anisotropic, std::vector<double>{0, 0},
                  std::vector<double>{1.3, -0.2}, out);
  CHECK(out == std::vector<double>{0, 0});

  apply_diffusion(DiffusionKind::anisotropic, std::vector<double>{3, 4},
                  std::vector<double>{1, 1}, out);
  CHECK(out == std::vector<double>{3, 4});

  apply_diffusion(DiffusionKind::isotropic, std::vector<double>{3, 4},
                  std::vector<double>{0, 1}, out);
  CHECK(out == std::vector<double>{0, 5});

  std::vector<double> bad(3);
  CHECK_THROWS_AS(apply_diffusion(DiffusionKind::isotropic, std::vector<double>{1.0, 2.0},
                                  std::vector<double>{1.0, 2.0}, bad),
                  std::invalid_argument);
}

TEST_CASE("param validation") {
  CboParams p = quick_params();
  p.dt = 2.0;
  p.t_end = 1.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = quick_params();
  p.xi = 1.5;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = quick_params();
  p.alpha = 0.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("deterministic drift step: X' = X - lambda dt (X - C)") {
  const auto g = builtin_game("decoupled-quadratic", 2, 2, 0.0);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-3, 3);
  Ensemble e(2, 10, 2);
  for (auto& v : e.x) v = u(rng);

  CboParams p = quick_params();
  p.sigma = 0.0;
  const NoiseStream stream(5);
  const auto out = step_em(g, e, p, stream, 0);
  const auto cs = consensus_all(g, e, p.alpha);
  for (int m = 0; m < 2; ++m) {
    for (int i = 0; i < 10; ++i) {
      for (int c = 0; c < 2; ++c) {
        const double expect =
            e.at(m, i)[c] - p.lambda * p.dt * (e.at(m, i)[c] - p.xi * cs.point(m)[c]);
        CHECK(out.at(m, i)[c] == expect);
      }
    }
  }
  CHECK(e.at(0, 0)[0] == doctest::Approx(e.at(0, 0)[0]));  // input untouched
}

TEST_CASE("collapsed player is a fixed point of the drift") {
  const auto g = builtin_game("decoupled-quadratic", 2, 2, 0.0);
  Ensemble e(2, 6, 2);
  for (int i = 0; i < 6; ++i) {
    e.at(0, i)[0] = 0.75;
    e.at(0, i)[1] = -0.25;
    e.at(1, i)[0] = static_cast<double>(i) - 2.0;
  }
  CboParams p = quick_params();
  p.sigma = 0.0;
  const auto out = step_em(g, e, p, NoiseStream(1), 0);
  for (int i = 0; i < 6; ++i) {
    CHECK(out.at(0, i)[0] == 0.75);
    CHECK(out.at(0, i)[1] == -0.25);
  }
}

TEST_CASE("single-particle system is constant to the bit") {
  const auto g = builtin_game("decoupled-quadratic", 2, 2, 0.0);
  CboParams p = quick_params();
  p.sigma = 0.8;
  p.t_end = 1.0;
  const NoiseStream stream(77);
  const auto init = make_uniform_ensemble(2, 1, 2, {-3, 3}, stream);
  const auto traj = simulate(g, init, p, stream, 10);
  CHECK(traj.terminal.x == init.x);
  for (const auto& snap : traj.snapshots) CHECK(snap.x == init.x);
}

TEST_CASE("identity dynamics when lambda = sigma = 0") {
  const auto g = builtin_game("coupled-quadratic", 2, 2, 0.5);
  CboParams p = quick_params();
  p.lambda = 0.0;
  p.sigma = 0.0;
  const NoiseStream stream(3);
  const auto init = make_uniform_ensemble(2, 12, 2, {-3, 3}, stream);
  const auto traj = simulate(g, init, p, stream, 7);
  CHECK(traj.terminal.x == init.x);
}

TEST_CASE("same seed, same trajectory; different seed differs") {
  const auto g = builtin_game("decoupled-quadratic", 2, 2, 0.0);
  const CboParams p = quick_params();
  const auto init = make_uniform_ensemble(2, 16, 2, {-3, 3}, NoiseStream(11));
  const auto a = simulate(g, init, p, 11, 5);
  const auto b = simulate(g, init, p, 11, 5);
  CHECK(a.terminal.x == b.terminal.x);
  const auto c = simulate(g, init, p, 12, 5);
  CHECK(a.terminal.x != c.terminal.x);
}

TEST_CASE("bit-identical across 1, 2, 8 workers") {
  const auto g = builtin_game("coupled-quadratic", 2, 2, 0.3);
  const CboParams p = quick_params();
  const auto init = make_uniform_ensemble(2, 40, 2, {-3, 3}, NoiseStream(21));
  std::vector<std::vector<double>> results;
  for (unsigned workers : {1u, 2u, 8u}) {
    set_worker_count(workers);
    results.push_back(simulate(g, init, p, 21, 10).terminal.x);
  }
  set_worker_count(0);
  CHECK(results[0] == results[1]);
  CHECK(results[0] == results[2]);
}

TEST_CASE("exchangeability: permuting particles and their streams permutes the trajectory") {
  const auto g = builtin_game("coupled-quadratic", 2, 2, 0.4);
  CboParams p = quick_params();
  p.t_end = 0.2;
  const int n = 9;
  const NoiseStream stream(31);
  const auto init = make_uniform_ensemble(2, n, 2, {-3, 3}, stream);

  std::mt19937_64 rng(8);
  std::vector<std::vector<std::uint64_t>> perms(2);
  for (auto& perm : perms) {
    perm.resize(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
  }
  Ensemble permuted(2, n, 2);
  std::vector<std::uint64_t> ids(static_cast<std::size_t>(2) * n);
  for (int m = 0; m < 2; ++m) {
    for (int i = 0; i < n; ++i) {
      const auto src = init.at(m, static_cast<int>(perms[m][i]));
      std::copy(src.begin(), src.end(), permuted.at(m, i).begin());
      ids[static_cast<std::size_t>(m) * n + i] = perms[m][i];
    }
  }
  const auto base = simulate(g, init, p, stream, 1);
  const auto moved = simulate(g, permuted, p, stream.with_particle_ids(ids, n), 1);
  REQUIRE(base.snapshots.size() == moved.snapshots.size());
  for (std::size_t t = 0; t < base.snapshots.size(); ++t) {
    for (int m = 0; m < 2; ++m) {
      for (int i = 0; i < n; ++i) {
        const auto a = base.snapshots[t].at(m, static_cast<int>(perms[m][i]));
        const auto b = moved.snapshots[t].at(m, i);
        CHECK(std::equal(a.begin(), a.end(), b.begin()));
      }
    }
  }
}

TEST_CASE("xi = 0, sigma = 0: every particle contracts by (1 - lambda dt) per step") {
  const auto g = builtin_game("decoupled-quadratic", 2, 2, 0.0);
  CboParams p = quick_params();
  p.sigma = 0.0;
  p.xi = 0.0;
  const auto init = make_uniform_ensemble(2, 8, 2, {-3, 3}, NoiseStream(41));
  const auto out = step_em(g, init, p, NoiseStream(41), 0);
  for (std::size_t j = 0; j < init.x.size(); ++j) {
    CHECK(out.x[j] == init.x[j] - p.lambda * p.dt * init.x[j]);
  }
}

TEST_CASE("consensus stays inside the particle norm ball along the path") {
  const auto g = builtin_game("decoupled-quadratic", 2, 2, 0.0);
  const CboParams p = quick_params();
  const auto init = make_uniform_ensemble(2, 24, 2, {-3, 3}, NoiseStream(51));
  const auto traj = simulate(g, init, p, 51, 5);
  for (std::size_t t = 0; t < traj.snapshots.size(); ++t) {
    for (int m = 0; m < 2; ++m) {
      double cn = 0;
      for (double v : traj.consensus_path[t].point(m)) cn += v * v;
      double best = 0;
      for (int i = 0; i < 24; ++i) {
        double s = 0;
        for (double v : traj.snapshots[t].at(m, i)) s += v * v;
        best = std::max(best, s);
      }
      CHECK(std::sqrt(cn) <= std::sqrt(best));
    }
  }
}

TEST_CASE("no blow-up at desk scale: second moment stays within 1e3 of the start") {
  const auto g = builtin_game("decoupled-quadratic", 2, 2, 0.0);
  CboParams p = quick_params();
  p.t_end = 2.0;
  const auto init = make_uniform_ensemble(2, 32, 2, {-3, 3}, NoiseStream(61));
  const auto traj = simulate(g, init, p, 61, 1);
  const double m0 = moment2(init);
  for (const auto& snap : traj.snapshots) {
    const double m = moment2(snap);
    CHECK(std::isfinite(m));
    CHECK(m <= 1e3 * m0);
  }
}

TEST_CASE("blow-up is reported with particle coordinates and a partial trajectory") {
  // Bounded cost keeps the consensus well-defined while the noise
  // amplification drives positions through overflow.
  GameSpec g = builtin_game("decoupled-quadratic", 2, 2, 0.0);
  for (auto& cost : g.costs) {
    cost = [](std::span<const double> own, std::span<const double>) {
      double s = 0;
      for (double v : own) s += v * v;
      return 1.0 / (1.0 + s);
    };
  }
  CboParams p;
  p.lambda = 0.0;
  p.sigma = 1e8;
  p.alpha = 1.0;
  p.dt = 1.0;
  p.t_end = 50.0;
  const auto init = make_uniform_ensemble(2, 4, 2, {-3, 3}, NoiseStream(71));
  bool threw = false;
  try {
    simulate(g, init, p, 71, 1);
  } catch (const BlowupError& e) {
    threw = true;
    CHECK(e.m >= 0);
    CHECK(e.i >= 0);
    CHECK(!e.partial.times.empty());
    CHECK(e.partial.snapshots.size() == e.partial.times.size());
  }
  CHECK(threw);
}

TEST_CASE("self-coupling is bit-identical with zero gap") {
  const auto g = builtin_game("decoupled-quadratic", 2, 2, 0.0);
  CboParams p = quick_params();
  p.t_end = 0.3;
  const auto run = simulate_coupled(g, {-3, 3}, p, 6, 6, 13, 10);
  CHECK(run.small.terminal.x == run.reference.terminal.x);
  for (double gp : run.sup_gap) CHECK(gp == 0.0);
}

TEST_CASE("coupled runs share the particle prefix at t = 0") {
  const auto g = builtin_game("decoupled-quadratic", 2, 2, 0.0);
  CboParams p = quick_params();
  p.t_end = 0.05;
  const auto run = simulate_coupled(g, {-3, 3}, p, 4, 16, 29, 100);
  const auto& s0 = run.small.snapshots.front();
  const auto& r0 = run.reference.snapshots.front();
  for (int m = 0; m < 2; ++m) {
    for (int i = 0; i < 4; ++i) {
      CHECK(std::equal(s0.at(m, i).begin(), s0.at(m, i).end(), r0.at(m, i).begin()));
    }
  }
  CHECK_THROWS_AS(simulate_coupled(g, {-3, 3}, p, 8, 4, 1, 1), std::invalid_argument);
}

TEST_CASE("single-particle coupled pair stays degenerate") {
  const auto g = builtin_game("decoupled-quadratic", 2, 2, 0.0);
  CboParams p = quick_params();
  p.t_end = 0.2;
  const auto run = simulate_coupled(g, {-3, 3}, p, 1, 1, 97, 5);
  CHECK(run.small.terminal.x == run.small.snapshots.front().x);
  for (double gp : run.sup_gap) CHECK(gp == 0.0);
}

TEST_CASE("full-horizon run contracts the variance by three orders of magnitude") {
  const auto g = builtin_game("decoupled-quadratic", 2, 2, 0.0);
  CboParams p;
  p.lambda = 1.0;
  p.sigma = 0.5;
  p.alpha = 40.0;
  p.dt = 0.01;
  p.t_end = 10.0;
  const NoiseStream stream(91);
  const auto init = make_uniform_ensemble(2, 100, 2, {-3, 3}, stream);
  const auto traj = simulate(g, init, p, stream, 1 << 20);
  auto v_of = [&](const Ensemble& e) {
    double s = 0;
    for (double v : e.x) s += v * v;
    return s / e.count;
  };
  CHECK(v_of(traj.terminal) <= 1e-3 * v_of(init));
}

TEST_CASE("horizon lands exactly on t_end even when dt does not divide it") {
  const auto g = builtin_game("decoupled-quadratic", 2, 2, 0.0);
  CboParams p = quick_params();
  p.dt = 0.3;
  p.t_end = 1.0;
  const auto init = make_uniform_ensemble(2, 4, 2, {-3, 3}, NoiseStream(83));
  const auto traj = simulate(g, init, p, 83, 1);
  CHECK(traj.times.back() == 1.0);
  CHECK(std::is_sorted(traj.times.begin(), traj.times.end()));
  CHECK(traj.times.front() == 0.0);
}
