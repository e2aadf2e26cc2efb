#pragma once

#include <span>
#include <vector>

#include "cbo/game.hpp"

namespace cbo {

// Particle state of all players: positions indexed (m, i), each in R^d.
struct Ensemble {
  int players = 0;   // M
  int count = 0;     // N particles per player
  int dim = 0;       // d
  std::vector<double> x;  // players * count * dim, (m, i, c) row-major

  Ensemble() = default;
  Ensemble(int players_, int count_, int dim_)
      : players(players_),
        count(count_),
        dim(dim_),
        x(static_cast<std::size_t>(players_) * count_ * dim_, 0.0) {}

  std::span<double> at(int m, int i) {
    return {x.data() + (static_cast<std::size_t>(m) * count + i) * dim,
            static_cast<std::size_t>(dim)};
  }
  std::span<const double> at(int m, int i) const {
    return {x.data() + (static_cast<std::size_t>(m) * count + i) * dim,
            static_cast<std::size_t>(dim)};
  }
};

// The per-player consensus points at one instant.
struct ConsensusSet {
  int players = 0;
  int dim = 0;
  double alpha = 0.0;
  std::vector<double> pts;  // players * dim

  ConsensusSet() = default;
  ConsensusSet(int players_, int dim_, double alpha_)
      : players(players_), dim(dim_), alpha(alpha_),
        pts(static_cast<std::size_t>(players_) * dim_, 0.0) {}

  std::span<double> point(int m) {
    return {pts.data() + static_cast<std::size_t>(m) * dim, static_cast<std::size_t>(dim)};
  }
  std::span<const double> point(int m) const {
    return {pts.data() + static_cast<std::size_t>(m) * dim, static_cast<std::size_t>(dim)};
  }
};

// Normalized softmin weights w_i proportional to exp(-alpha * costs[i]).
// The minimum cost is subtracted inside the exponent, so the result is
// finite and normalized for any alpha >= 0 and any finite costs; ties at
// the minimum share weight as alpha -> infinity.
std::vector<double> softmin_weights(std::span<const double> costs, double alpha);

// Convex combination sum_i w[i] * positions[i]. Computed relative to the
// heaviest particle with exact order-independent accumulation, so the
// result is invariant under permutations of the particle index and lies in
// the convex hull (|result| <= max_i |positions_i|).
std::vector<double> weighted_point(std::span<const double> positions, int dim,
                                   std::span<const double> w);

// Sample average of every player's particles, concatenated without block m.
std::vector<double> sample_average_excluding(const Ensemble& ens, int m);

// Consensus point of player m: opponents frozen at their sample averages,
// softmin weights over the player's own particle costs.
std::vector<double> consensus_for_player(const GameSpec& game, const Ensemble& ens, int m,
                                         double alpha);

// All players' consensus points; the per-player sample averages are
// computed once.
ConsensusSet consensus_all(const GameSpec& game, const Ensemble& ens, double alpha);

}  // namespace cbo
