#include "cbo/game.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace cbo {

namespace {

// Mean of the opponent blocks, one coordinate at a time.
void opponent_average(std::span<const double> opponents, int dim, std::span<double> out) {
  const int blocks = static_cast<int>(opponents.size()) / dim;
  for (int c = 0; c < dim; ++c) {
    double s = 0.0;
    for (int b = 0; b < blocks; ++b) s += opponents[static_cast<std::size_t>(b) * dim + c];
    out[c] = s / blocks;
  }
}

double rastrigin(std::span<const double> z) {
  double s = 0.0;
  for (double v : z) {
    s += v * v + 10.0 * (1.0 - std::cos(2.0 * std::numbers::pi * v));
  }
  return s;
}

}  // namespace

double eval_cost(const GameSpec& game, int m, std::span<const double> own,
                 std::span<const double> opponents) {
  if (m < 0 || m >= game.players) throw std::invalid_argument("eval_cost: player index out of range");
  if (static_cast<int>(own.size()) != game.dim)
    throw std::invalid_argument("eval_cost: own-block dimension mismatch");
  if (static_cast<int>(opponents.size()) != (game.players - 1) * game.dim)
    throw std::invalid_argument("eval_cost: opponent-block dimension mismatch");
  const double v = game.costs[m](own, opponents);
  if (!std::isfinite(v))
    throw EvaluationError(m, "cost evaluation returned non-finite value for player " +
                                 std::to_string(m));
  return v;
}

std::vector<double> opponents_of(const Strategy& x, int m) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(x.players - 1) * x.dim);
  for (int j = 0; j < x.players; ++j) {
    if (j == m) continue;
    const auto b = x.block(j);
    out.insert(out.end(), b.begin(), b.end());
  }
  return out;
}

double nash_residual(const GameSpec& game, const Strategy& x, int probe_budget,
                     double probe_radius, std::uint64_t rng_seed) {
  if (probe_budget < 1) throw std::invalid_argument("nash_residual: probe_budget must be >= 1");
  if (!(probe_radius > 0)) throw std::invalid_argument("nash_residual: probe_radius must be > 0");
  const NoiseStream stream(rng_seed);
  const int d = game.dim;
  std::vector<double> candidate(d);
  double worst = 0.0;
  for (int m = 0; m < game.players; ++m) {
    const auto opp = opponents_of(x, m);
    const double current = eval_cost(game, m, x.block(m), opp);
    double best = current;  // candidate 0 is the current block itself
    for (int b = 1; b < probe_budget; ++b) {
      // Uniform in the ball: normal direction times radius * U^(1/d).
      double len2 = 0.0;
      for (int c = 0; c < d; ++c) {
        candidate[c] = stream.normal(StreamDomain::probe, static_cast<std::uint32_t>(m),
                                     static_cast<std::uint64_t>(b), 0, c);
        len2 += candidate[c] * candidate[c];
      }
      const double len = std::sqrt(len2);
      const double u = stream.uniform(StreamDomain::probe, static_cast<std::uint32_t>(m),
                                      static_cast<std::uint64_t>(b), 1, 0);
      const double r = len > 0 ? probe_radius * std::pow(u, 1.0 / d) / len : 0.0;
      const auto own = x.block(m);
      for (int c = 0; c < d; ++c) candidate[c] = own[c] + r * candidate[c];
      best = std::min(best, eval_cost(game, m, candidate, opp));
    }
    worst = std::max(worst, std::max(0.0, current - best));
  }
  return worst;
}

GameSpec builtin_game(const std::string& name, int players, int dim, double coupling) {
  if (players < 2) throw std::invalid_argument("builtin_game: need at least 2 players");
  if (dim < 1) throw std::invalid_argument("builtin_game: need dimension >= 1");

  GameSpec g;
  g.name = name;
  g.players = players;
  g.dim = dim;
  g.coupling = coupling;
  g.known_nash = Strategy(players, dim);  // origin

  if (name == "decoupled-quadratic") {
    for (int m = 0; m < players; ++m) {
      g.costs.emplace_back([](std::span<const double> own, std::span<const double>) {
        double s = 0.0;
        for (double v : own) s += v * v;
        return s;
      });
    }
    g.growth = GrowthMeta{1.0, 2.0, 1.0, 100.0};
  } else if (name == "coupled-quadratic") {
    if (!(std::abs(coupling) < 1.0))
      throw std::invalid_argument("builtin_game: coupled-quadratic needs |coupling| < 1");
    const double kappa = coupling;
    const int d = dim;
    for (int m = 0; m < players; ++m) {
      g.costs.emplace_back(
          [kappa, d](std::span<const double> own, std::span<const double> opponents) {
            double s = 0.0;
            std::vector<double> avg(d);
            opponent_average(opponents, d, avg);
            for (int c = 0; c < d; ++c) {
              const double r = own[c] - kappa * avg[c];
              s += r * r;
            }
            return s;
          });
    }
    g.growth = GrowthMeta{1.0, 2.0, 2.0, 100.0};
  } else if (name == "rastrigin-coupled") {
    const double kappa = coupling;
    const int d = dim;
    for (int m = 0; m < players; ++m) {
      g.costs.emplace_back(
          [kappa, d](std::span<const double> own, std::span<const double> opponents) {
            std::vector<double> z(d);
            opponent_average(opponents, d, z);
            for (int c = 0; c < d; ++c) z[c] = own[c] - kappa * z[c];
            return rastrigin(z);
          });
    }
    g.growth = GrowthMeta{1.0, 2.0, 2.0, std::max(100.0, 10.0 * dim)};
  } else {
    throw std::invalid_argument("builtin_game: unknown game '" + name + "'");
  }
  return g;
}

double stability_floor(const GrowthMeta& meta) {
  return meta.order_ell == 0.0 ? 2.0 + meta.lipschitz_s : 1.0;
}

}  // namespace cbo
