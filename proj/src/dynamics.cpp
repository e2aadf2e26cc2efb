#include "cbo/dynamics.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>

#include "cbo/parallel.hpp"

namespace cbo {

namespace {

std::uint64_t step_count(const CboParams& p) {
  return static_cast<std::uint64_t>(std::ceil(p.t_end / p.dt - 1e-9));
}

double step_size(const CboParams& p, std::uint64_t k, std::uint64_t total) {
  if (k + 1 < total) return p.dt;
  return p.t_end - static_cast<double>(k) * p.dt;  // truncated final step
}

// Advances ens into out given the pre-step consensus.
void advance(const GameSpec&, const Ensemble& ens, const CboParams& params,
             double dt_step, const NoiseStream& noise, std::uint64_t k,
             const ConsensusSet& consensus, Ensemble& out) {
  out.players = ens.players;
  out.count = ens.count;
  out.dim = ens.dim;
  out.x.resize(ens.x.size());

  const int d = ens.dim;
  const double lam_dt = params.lambda * dt_step;
  const double sig_sqdt = params.sigma * std::sqrt(dt_step);
  const std::size_t total = static_cast<std::size_t>(ens.players) * ens.count;

  std::atomic<std::int64_t> blown{-1};
  parallel_for(total, [&](std::size_t lo, std::size_t hi) {
    std::vector<double> arg(d), eta(d), dif(d);
    for (std::size_t s = lo; s < hi; ++s) {
      const int m = static_cast<int>(s / ens.count);
      const int i = static_cast<int>(s % ens.count);
      const auto xin = ens.at(m, i);
      const auto xout = out.at(m, i);
      const auto cm = consensus.point(m);
      for (int c = 0; c < d; ++c) arg[c] = xin[c] - params.xi * cm[c];
      for (int c = 0; c < d; ++c) xout[c] = xin[c] - lam_dt * arg[c];
      if (params.sigma > 0) {
        for (int c = 0; c < d; ++c) {
          eta[c] = noise.normal(StreamDomain::step, static_cast<std::uint32_t>(m),
                                static_cast<std::uint64_t>(i), k, static_cast<std::uint32_t>(c));
        }
        apply_diffusion(params.diffusion, arg, eta, dif);
        for (int c = 0; c < d; ++c) xout[c] += sig_sqdt * dif[c];
      }
      for (int c = 0; c < d; ++c) {
        if (!std::isfinite(xout[c])) {
          // Keep the smallest flat index so the report is deterministic.
          std::int64_t cur = blown.load();
          const auto mine = static_cast<std::int64_t>(s);
          while ((cur == -1 || mine < cur) &&
                 !blown.compare_exchange_weak(cur, mine)) {
          }
          break;
        }
      }
    }
  });
  if (blown.load() >= 0) {
    const auto s = static_cast<std::size_t>(blown.load());
    throw BlowupError(static_cast<int>(s / ens.count), static_cast<int>(s % ens.count), k);
  }
}

}  // namespace

void CboParams::validate() const {
  auto fin = [](double v) { return std::isfinite(v); };
  if (!fin(lambda) || lambda < 0) throw std::invalid_argument("params: lambda must be finite and >= 0");
  if (!fin(sigma) || sigma < 0) throw std::invalid_argument("params: sigma must be finite and >= 0");
  if (!fin(alpha) || alpha <= 0) throw std::invalid_argument("params: alpha must be finite and > 0");
  if (!fin(xi) || xi < 0 || xi > 1) throw std::invalid_argument("params: xi must lie in [0, 1]");
  if (!fin(dt) || dt <= 0) throw std::invalid_argument("params: dt must be finite and > 0");
  if (!fin(t_end) || t_end <= 0) throw std::invalid_argument("params: t_end must be finite and > 0");
  if (dt > t_end) throw std::invalid_argument("params: dt must not exceed t_end");
}

void apply_diffusion(DiffusionKind kind, std::span<const double> v,
                     std::span<const double> noise, std::span<double> out) {
  if (v.size() != noise.size() || v.size() != out.size())
    throw std::invalid_argument("apply_diffusion: dimension mismatch");
  if (kind == DiffusionKind::anisotropic) {
    for (std::size_t c = 0; c < v.size(); ++c) out[c] = v[c] * noise[c];
  } else {
    double n2 = 0.0;
    for (double a : v) n2 += a * a;
    const double len = std::sqrt(n2);
    for (std::size_t c = 0; c < v.size(); ++c) out[c] = len * noise[c];
  }
}

void step_em_into(const GameSpec& game, const Ensemble& ens, const CboParams& params,
                  double dt_step, const NoiseStream& noise, std::uint64_t k, Ensemble& out,
                  ConsensusSet& consensus) {
  consensus = consensus_all(game, ens, params.alpha);
  advance(game, ens, params, dt_step, noise, k, consensus, out);
}

Ensemble step_em(const GameSpec& game, const Ensemble& ens, const CboParams& params,
                 const NoiseStream& noise, std::uint64_t k) {
  params.validate();
  Ensemble out;
  ConsensusSet cs;
  step_em_into(game, ens, params, params.dt, noise, k, out, cs);
  return out;
}

Ensemble make_uniform_ensemble(int players, int count, int dim, const InitBox& box,
                               const NoiseStream& stream) {
  if (!(box.hi >= box.lo)) throw std::invalid_argument("make_uniform_ensemble: empty box");
  Ensemble ens(players, count, dim);
  for (int m = 0; m < players; ++m) {
    for (int i = 0; i < count; ++i) {
      const auto p = ens.at(m, i);
      for (int c = 0; c < dim; ++c) {
        const double u = stream.uniform(StreamDomain::init, static_cast<std::uint32_t>(m),
                                        static_cast<std::uint64_t>(i), 0,
                                        static_cast<std::uint32_t>(c));
        p[c] = box.lo + (box.hi - box.lo) * u;
      }
    }
  }
  return ens;
}

Trajectory simulate(const GameSpec& game, const Ensemble& init, const CboParams& params,
                    std::uint64_t seed, int record_every) {
  return simulate(game, init, params, NoiseStream(seed), record_every);
}

Trajectory simulate(const GameSpec& game, const Ensemble& init, const CboParams& params,
                    const NoiseStream& noise, int record_every) {
  params.validate();
  if (record_every < 1) throw std::invalid_argument("simulate: record_every must be >= 1");

  Trajectory traj;
  const std::uint64_t total = step_count(params);
  Ensemble cur = init;
  Ensemble next;

  for (std::uint64_t k = 0; k < total; ++k) {
    const ConsensusSet cs = consensus_all(game, cur, params.alpha);
    if (k % static_cast<std::uint64_t>(record_every) == 0) {
      traj.times.push_back(static_cast<double>(k) * params.dt);
      traj.snapshots.push_back(cur);
      traj.consensus_path.push_back(cs);
    }
    try {
      advance(game, cur, params, step_size(params, k, total), noise, k, cs, next);
    } catch (BlowupError& e) {
      traj.terminal = cur;
      e.partial = std::move(traj);
      throw;
    }
    std::swap(cur, next);
  }
  traj.times.push_back(params.t_end);
  traj.snapshots.push_back(cur);
  traj.consensus_path.push_back(consensus_all(game, cur, params.alpha));
  traj.terminal = cur;
  return traj;
}

CoupledRun simulate_coupled(const GameSpec& game, const InitBox& init, const CboParams& params,
                            int n_small, int n_ref, std::uint64_t seed, int record_every) {
  params.validate();
  if (n_small < 1 || n_ref < n_small)
    throw std::invalid_argument("simulate_coupled: need 1 <= n_small <= n_ref");
  if (record_every < 1) throw std::invalid_argument("simulate_coupled: record_every must be >= 1");

  const NoiseStream stream(seed);
  Ensemble small = make_uniform_ensemble(game.players, n_small, game.dim, init, stream);
  Ensemble ref = make_uniform_ensemble(game.players, n_ref, game.dim, init, stream);

  CoupledRun run;
  run.sup_gap.assign(static_cast<std::size_t>(game.players) * n_small, 0.0);

  auto update_gap = [&](const Ensemble& a, const Ensemble& b) {
    for (int m = 0; m < game.players; ++m) {
      for (int i = 0; i < n_small; ++i) {
        const auto pa = a.at(m, i);
        const auto pb = b.at(m, i);
        double g2 = 0.0;
        for (int c = 0; c < game.dim; ++c) {
          const double dc = pa[c] - pb[c];
          g2 += dc * dc;
        }
        auto& slot = run.sup_gap[static_cast<std::size_t>(m) * n_small + i];
        slot = std::max(slot, std::sqrt(g2));
      }
    }
  };

  const std::uint64_t total = step_count(params);
  Ensemble next_small, next_ref;
  update_gap(small, ref);
  for (std::uint64_t k = 0; k < total; ++k) {
    const ConsensusSet cs_small = consensus_all(game, small, params.alpha);
    const ConsensusSet cs_ref = consensus_all(game, ref, params.alpha);
    if (k % static_cast<std::uint64_t>(record_every) == 0) {
      const double t = static_cast<double>(k) * params.dt;
      run.small.times.push_back(t);
      run.small.snapshots.push_back(small);
      run.small.consensus_path.push_back(cs_small);
      run.reference.times.push_back(t);
      run.reference.snapshots.push_back(ref);
      run.reference.consensus_path.push_back(cs_ref);
    }
    const double dt_k = step_size(params, k, total);
    advance(game, small, params, dt_k, stream, k, cs_small, next_small);
    advance(game, ref, params, dt_k, stream, k, cs_ref, next_ref);
    std::swap(small, next_small);
    std::swap(ref, next_ref);
    update_gap(small, ref);
  }
  for (Trajectory* tr : {&run.small, &run.reference}) {
    tr->times.push_back(params.t_end);
  }
  run.small.snapshots.push_back(small);
  run.small.consensus_path.push_back(consensus_all(game, small, params.alpha));
  run.reference.snapshots.push_back(ref);
  run.reference.consensus_path.push_back(consensus_all(game, ref, params.alpha));
  run.small.terminal = small;
  run.reference.terminal = ref;
  return run;
}

}  // namespace cbo
