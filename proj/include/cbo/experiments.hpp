#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cbo/dynamics.hpp"
#include "cbo/game.hpp"
#include "cbo/report.hpp"

namespace cbo {

// Gate constants shared by the runners and by report revalidation. All
// thresholds are fixed here; experiments never tune them at run time.
inline constexpr double kFitQualityMin = 0.9;       // refuse to validate noise
inline constexpr double kFitFloor = 1e-8;           // numerical floor for rate fits
// The decay fit drops the terminal plateau: the collapsed ensemble freezes at
// a finite-N offset from the equilibrium, so trailing values within this
// factor of the observed minimum carry no rate information.
inline constexpr double kPlateauExclusionFactor = 4.0;
inline constexpr double kDecaySlopeSlack = 0.3;     // finite-N / discretization slack
inline constexpr double kDecayTerminalRatio = 1e-3; // V(T) / V(0) ceiling
inline constexpr double kMfAssumedQ = 8.0;          // moment order assumed for gamma
inline constexpr double kMfSlopeSlack = 0.2;
inline constexpr double kMfSlopeLower = -0.75;      // faster than this is suspicious
inline constexpr double kIidSlopeTol = 0.1;
inline constexpr double kIidOracleAgreement = 1e-3;
inline constexpr double kStabilityRatioFactor = 2.0;
inline constexpr double kMomentCeilingFactor = 1e3;

// Distribution abstraction for the i.i.d. weighted-mean experiment: a
// quantile transform mapping [0,1)^dim points to samples, so both plain
// Monte-Carlo draws and the low-discrepancy oracle flow through it.
struct MuSampler {
  int dim = 0;
  std::function<void(std::span<const double> u01, std::span<double> out)> quantile;
};

MuSampler gaussian_sampler(int dim);
MuSampler point_mass_sampler(std::vector<double> z);

// Single-player cost with frozen opponents.
using FrozenCost =
    std::function<double(std::span<const double> x, std::span<const double> y)>;

struct OracleUnstableError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Variance decay toward a known equilibrium: seed-averaged V(t), fitted
// log-linear rate against the (2*lambda - sigma^2)/2 floor.
ExperimentReport run_variance_decay(const GameSpec& game, const CboParams& params,
                                    int n_particles, std::span<const std::uint64_t> seeds,
                                    const InitBox& box = {}, int record_every = 1);

// Finite-N gap against a large common-noise reference ensemble, fitted as a
// power law in N.
ExperimentReport run_mf_rate(const GameSpec& game, const CboParams& params,
                             std::span<const int> n_list, int n_ref, double p,
                             std::span<const std::uint64_t> seeds, const InitBox& box = {});

// Convergence of the weighted mean over i.i.d. samples toward the
// population weighted mean; the reference comes from a randomized
// low-discrepancy sweep of oracle_samples points in 3 batches that must
// agree within kIidOracleAgreement.
ExperimentReport run_iid_consensus(const MuSampler& mu, const FrozenCost& cost,
                                   std::span<const double> frozen_y, double alpha,
                                   std::span<const int> n_list, int trials, double p,
                                   std::uint64_t seed,
                                   std::int64_t oracle_samples = 10'000'000);

// Ratio |consensus difference| / sum of per-player W_p over random measure
// pairs with p-moments below R: finite and stable across trials.
ExperimentReport run_stability_probe(const GameSpec& game, double moment_bound, double p,
                                     int trials, std::uint64_t seed, double alpha = 1.0);

// One probe evaluation: max over players of the consensus difference between
// two measure tuples (opponents frozen at the tuple means), divided by the
// summed per-player W_p. Zero when the tuples coincide.
double stability_ratio(const GameSpec& game, const std::vector<EmpiricalMeasure>& mu,
                       const std::vector<EmpiricalMeasure>& nu, double p, double alpha);

// Running supremum of per-player p-moments across xi in {0, 0.5, 1},
// reported as kappa_hat relative to the initial moment sum.
ExperimentReport run_moment_monitor(const GameSpec& game, const CboParams& params,
                                    int n_particles, double p,
                                    std::span<const std::uint64_t> seeds,
                                    const InitBox& box = {});

// Recomputes every verdict of a stored report from its recorded series;
// equal to report.verdicts for untampered reports.
std::vector<Gate> revalidate(const ExperimentReport& report);

}  // namespace cbo
