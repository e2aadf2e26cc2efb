#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cbo/consensus.hpp"
#include "cbo/game.hpp"
#include "cbo/noise.hpp"

namespace cbo {

enum class DiffusionKind { isotropic, anisotropic };

// Dynamics parameters. xi scales the consensus attractor (1 recovers the
// plain dynamics, 0 decouples the particles).
struct CboParams {
  double lambda = 1.0;   // drift rate, >= 0
  double sigma = 0.5;    // diffusion scale, >= 0
  double alpha = 40.0;   // weight sharpness, > 0
  double xi = 1.0;       // consensus relaxation, in [0, 1]
  double dt = 0.01;      // step size, > 0
  double t_end = 10.0;   // horizon, > 0
  DiffusionKind diffusion = DiffusionKind::anisotropic;

  bool operator==(const CboParams&) const = default;

  void validate() const;  // throws std::invalid_argument
};

// Recorded path of one run: thinned snapshots plus the consensus at each
// recorded time; the terminal state is always kept.
struct Trajectory {
  std::vector<double> times;            // strictly increasing, 0 .. t_end
  std::vector<Ensemble> snapshots;      // one per recorded time
  std::vector<ConsensusSet> consensus_path;
  Ensemble terminal;
};

struct BlowupError : std::runtime_error {
  BlowupError(int m_, int i_, std::uint64_t k_)
      : std::runtime_error("particle update became non-finite (player " + std::to_string(m_) +
                           ", particle " + std::to_string(i_) + ", step " + std::to_string(k_) +
                           ")"),
        m(m_), i(i_), k(k_) {}
  int m;
  int i;
  std::uint64_t k;
  Trajectory partial;  // what was recorded before the abort
};

// D(v) applied to a noise vector: |v| * noise (isotropic) or the
// componentwise product v o noise (anisotropic).
void apply_diffusion(DiffusionKind kind, std::span<const double> v,
                     std::span<const double> noise, std::span<double> out);

// One explicit Euler-Maruyama step with the consensus frozen at the step
// start. Pure: returns the advanced ensemble, the input is untouched.
Ensemble step_em(const GameSpec& game, const Ensemble& ens, const CboParams& params,
                 const NoiseStream& noise, std::uint64_t k);

// In-place step core shared by simulate and the coupled runs; dt_step may be
// shorter than params.dt for the final truncated step. Writes the advanced
// state into `out` and the pre-step consensus into `consensus`.
void step_em_into(const GameSpec& game, const Ensemble& ens, const CboParams& params,
                  double dt_step, const NoiseStream& noise, std::uint64_t k, Ensemble& out,
                  ConsensusSet& consensus);

// Uniform product-box initial condition, drawn from the stream's init
// domain so coupled systems share the prefix of their particles.
struct InitBox {
  double lo = -3.0;
  double hi = 3.0;
};

Ensemble make_uniform_ensemble(int players, int count, int dim, const InitBox& box,
                               const NoiseStream& stream);

// Integrates the dynamics over [0, t_end] with the final step truncated so
// the last recorded time is exactly t_end. Records every record_every-th
// state (plus the initial and terminal ones). Deterministic for a fixed
// seed, independent of the worker count.
Trajectory simulate(const GameSpec& game, const Ensemble& init, const CboParams& params,
                    std::uint64_t seed, int record_every);
Trajectory simulate(const GameSpec& game, const Ensemble& init, const CboParams& params,
                    const NoiseStream& noise, int record_every);

// A small system and a larger reference system driven by common noise:
// particle (m, i) with i < n_small shares its initial position and noise
// addresses with its counterpart, extra reference particles draw fresh ones.
// sup_gap[m * n_small + i] is the running supremum over all step times of
// the distance between the paired particles.
struct CoupledRun {
  Trajectory small;
  Trajectory reference;
  std::vector<double> sup_gap;
};

CoupledRun simulate_coupled(const GameSpec& game, const InitBox& init, const CboParams& params,
                            int n_small, int n_ref, std::uint64_t seed, int record_every);

}  // namespace cbo
