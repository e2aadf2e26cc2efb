#include "cbo/consensus.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cbo/exact_sum.hpp"
#include "cbo/parallel.hpp"

namespace cbo {

namespace {

bool lex_less(std::span<const double> a, std::span<const double> b) {
  for (std::size_t c = 0; c < a.size(); ++c) {
    if (a[c] != b[c]) return a[c] < b[c];
  }
  return false;
}

// Full M x d table of per-player sample averages, exactly accumulated so the
// values do not depend on particle order.
std::vector<double> sample_averages(const Ensemble& ens) {
  std::vector<double> avg(static_cast<std::size_t>(ens.players) * ens.dim);
  for (int m = 0; m < ens.players; ++m) {
    for (int c = 0; c < ens.dim; ++c) {
      ExactSum s;
      for (int i = 0; i < ens.count; ++i) s.add(ens.at(m, i)[c]);
      avg[static_cast<std::size_t>(m) * ens.dim + c] = s.value() / ens.count;
    }
  }
  return avg;
}

std::vector<double> consensus_with_averages(const GameSpec& game, const Ensemble& ens, int m,
                                            double alpha, std::span<const double> avg) {
  const int d = ens.dim;
  std::vector<double> frozen;
  frozen.reserve(static_cast<std::size_t>(ens.players - 1) * d);
  for (int j = 0; j < ens.players; ++j) {
    if (j == m) continue;
    frozen.insert(frozen.end(), avg.begin() + static_cast<std::size_t>(j) * d,
                  avg.begin() + static_cast<std::size_t>(j + 1) * d);
  }
  std::vector<double> costs(ens.count);
  parallel_for(ens.count, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      costs[i] = eval_cost(game, m, ens.at(m, static_cast<int>(i)), frozen);
    }
  });
  const auto w = softmin_weights(costs, alpha);
  const auto positions =
      std::span<const double>(ens.x.data() + static_cast<std::size_t>(m) * ens.count * d,
                              static_cast<std::size_t>(ens.count) * d);
  return weighted_point(positions, d, w);
}

}  // namespace

std::vector<double> softmin_weights(std::span<const double> costs, double alpha) {
  if (costs.empty()) throw std::invalid_argument("softmin_weights: empty cost list");
  if (!(alpha >= 0.0)) throw std::invalid_argument("softmin_weights: alpha must be >= 0");
  double shift = costs[0];
  for (double c : costs) {
    if (std::isnan(c)) throw std::invalid_argument("softmin_weights: NaN cost");
    shift = std::min(shift, c);
  }
  std::vector<double> w(costs.size());
  ExactSum total;
  for (std::size_t i = 0; i < costs.size(); ++i) {
    w[i] = std::exp(-alpha * (costs[i] - shift));  // in (0, 1], 1 at the minimum
    total.add(w[i]);
  }
  const double denom = total.value();
  for (double& v : w) v /= denom;
  return w;
}

std::vector<double> weighted_point(std::span<const double> positions, int dim,
                                   std::span<const double> w) {
  const std::size_t n = w.size();
  if (positions.size() != n * static_cast<std::size_t>(dim))
    throw std::invalid_argument("weighted_point: length mismatch");
  if (n == 0) throw std::invalid_argument("weighted_point: empty input");

  auto pos = [&](std::size_t i) {
    return positions.subspan(i * dim, static_cast<std::size_t>(dim));
  };
  // Heaviest particle as the base point; ties resolved by position so the
  // choice is permutation-invariant.
  std::size_t base = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (w[i] > w[base] || (w[i] == w[base] && lex_less(pos(i), pos(base)))) base = i;
  }
  std::vector<double> out(pos(base).begin(), pos(base).end());
  const auto b = pos(base);
  for (int c = 0; c < dim; ++c) {
    ExactSum s;
    for (std::size_t i = 0; i < n; ++i) {
      s.add_product(w[i], pos(i)[c] - b[c]);
    }
    out[c] += s.value();
  }
  return out;
}

std::vector<double> sample_average_excluding(const Ensemble& ens, int m) {
  const auto avg = sample_averages(ens);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(ens.players - 1) * ens.dim);
  for (int j = 0; j < ens.players; ++j) {
    if (j == m) continue;
    out.insert(out.end(), avg.begin() + static_cast<std::size_t>(j) * ens.dim,
               avg.begin() + static_cast<std::size_t>(j + 1) * ens.dim);
  }
  return out;
}

std::vector<double> consensus_for_player(const GameSpec& game, const Ensemble& ens, int m,
                                         double alpha) {
  if (m < 0 || m >= ens.players)
    throw std::invalid_argument("consensus_for_player: player index out of range");
  if (!(alpha > 0.0)) throw std::invalid_argument("consensus_for_player: alpha must be > 0");
  const auto avg = sample_averages(ens);
  return consensus_with_averages(game, ens, m, alpha, avg);
}

ConsensusSet consensus_all(const GameSpec& game, const Ensemble& ens, double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("consensus_all: alpha must be > 0");
  ConsensusSet cs(ens.players, ens.dim, alpha);
  const auto avg = sample_averages(ens);
  for (int m = 0; m < ens.players; ++m) {
    const auto p = consensus_with_averages(game, ens, m, alpha, avg);
    std::copy(p.begin(), p.end(), cs.point(m).begin());
  }
  return cs;
}

}  // namespace cbo
