#pragma once

#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cbo/noise.hpp"

namespace cbo {

// Joint strategy (x_1, ..., x_M), one block of dimension d per player.
struct Strategy {
  int players = 0;
  int dim = 0;
  std::vector<double> x;  // players * dim, block-major

  Strategy() = default;
  Strategy(int players_, int dim_)
      : players(players_), dim(dim_), x(static_cast<std::size_t>(players_) * dim_, 0.0) {}

  std::span<double> block(int m) {
    return {x.data() + static_cast<std::size_t>(m) * dim, static_cast<std::size_t>(dim)};
  }
  std::span<const double> block(int m) const {
    return {x.data() + static_cast<std::size_t>(m) * dim, static_cast<std::size_t>(dim)};
  }
};

// Cost evaluator: own strategy block plus the concatenated opponent blocks
// (x_1,...,x_{m-1},x_{m+1},...,x_M). Must be pure and reentrant.
using CostFn =
    std::function<double(std::span<const double> own, std::span<const double> opponents)>;

// Declared growth envelope: |E| within c*(|(x,y)|^ell +- G) and local
// Lipschitz order s. Spot-checked by sampling, not proven.
struct GrowthMeta {
  double lipschitz_s = 1.0;
  double order_ell = 2.0;
  double scale_c = 1.0;
  double offset_g = 0.0;
};

// An M-player game over R^d strategy blocks. Immutable after construction;
// safe to share across threads.
struct GameSpec {
  std::string name = "custom";
  int players = 0;  // M >= 2
  int dim = 0;      // d >= 1
  double coupling = 0.0;
  std::vector<CostFn> costs;  // one per player
  std::optional<GrowthMeta> growth;
  std::optional<Strategy> known_nash;
};

struct EvaluationError : std::runtime_error {
  EvaluationError(int player_, const std::string& what) : std::runtime_error(what), player(player_) {}
  int player;
};

// Cost of player m at (x_m; x_{-m}). Throws std::invalid_argument on
// dimension mismatch, EvaluationError if the evaluator returns a non-finite
// value.
double eval_cost(const GameSpec& game, int m, std::span<const double> own,
                 std::span<const double> opponents);

// Concatenates all blocks of x except block m.
std::vector<double> opponents_of(const Strategy& x, int m);

// Sampled unilateral-improvement residual: for each player, compare the
// current cost against the best of probe_budget candidates drawn uniformly
// from the ball of probe_radius around the player's block (the current block
// is always candidate 0). Zero means no sampled deviation improves any
// player.
double nash_residual(const GameSpec& game, const Strategy& x, int probe_budget,
                     double probe_radius, std::uint64_t rng_seed);

// Built-in benchmark games. Names: decoupled-quadratic, coupled-quadratic
// (requires |coupling| < 1), rastrigin-coupled. All carry known_nash at the
// origin and a sampled growth envelope valid for |(x,y)| <= 10.
GameSpec builtin_game(const std::string& name, int players, int dim, double coupling);

// Stability-exponent floor entering the rate formulas: 2+s for bounded
// costs (ell == 0), otherwise 1.
double stability_floor(const GrowthMeta& meta);

}  // namespace cbo
