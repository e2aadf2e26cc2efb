#include "cbo/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "cbo/consensus.hpp"
#include "cbo/exact_sum.hpp"
#include "cbo/metrics.hpp"
#include "cbo/noise.hpp"

namespace cbo {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double norm_of(std::span<const double> v) {
  double s = 0;
  for (double a : v) s += a * a;
  return std::sqrt(s);
}

double pow_p(double base, double p) { return p == 2.0 ? base * base : std::pow(base, p); }

// ---------------------------------------------------------------------------
// Streaming softmin-weighted mean with a running shift, so arbitrarily large
// alpha * cost ranges never overflow.
class SoftminMean {
 public:
  SoftminMean(int dim, double alpha) : alpha_(alpha), xsum_(dim, 0.0) {}

  void add(std::span<const double> x, double cost) {
    if (std::isnan(cost)) throw std::invalid_argument("SoftminMean: NaN cost");
    if (empty_ || cost < shift_) rescale(cost);
    const double w = std::exp(-alpha_ * (cost - shift_));
    wsum_ += w;
    for (std::size_t c = 0; c < xsum_.size(); ++c) xsum_[c] += w * x[c];
    ++count_;
  }

  void merge(const SoftminMean& other) {
    if (other.empty_) return;
    if (empty_ || other.shift_ < shift_) rescale(other.shift_);
    const double f = std::exp(-alpha_ * (other.shift_ - shift_));
    wsum_ += f * other.wsum_;
    for (std::size_t c = 0; c < xsum_.size(); ++c) xsum_[c] += f * other.xsum_[c];
    count_ += other.count_;
  }

  std::vector<double> estimate() const {
    if (empty_ || wsum_ <= 0) throw std::runtime_error("SoftminMean: no mass accumulated");
    std::vector<double> out(xsum_);
    for (double& v : out) v /= wsum_;
    return out;
  }

  std::int64_t count() const { return count_; }

 private:
  void rescale(double new_shift) {
    if (!empty_) {
      const double f = std::exp(-alpha_ * (shift_ - new_shift));
      wsum_ *= f;
      for (double& v : xsum_) v *= f;
    }
    shift_ = new_shift;
    empty_ = false;
  }

  double alpha_;
  double shift_ = 0;
  double wsum_ = 0;
  std::vector<double> xsum_;
  bool empty_ = true;
  std::int64_t count_ = 0;
};

// ---------------------------------------------------------------------------
// Randomized Halton points for the oracle integrals: radical-inverse
// sequences per coordinate plus a per-batch Cranley-Patterson shift.
constexpr int kHaltonPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19};

double radical_inverse(int base, std::uint64_t index) {
  double inv_base = 1.0 / base;
  double result = 0.0;
  double frac = inv_base;
  while (index > 0) {
    result += static_cast<double>(index % base) * frac;
    index /= base;
    frac *= inv_base;
  }
  return result;
}

double clamp_unit(double u) {
  constexpr double lo = 0x1.0p-60;
  return std::min(std::max(u, lo), 1.0 - 0x1.0p-53);
}

// ---------------------------------------------------------------------------

std::vector<double> single(double v) { return {v}; }

FitResult safe_fit_decay(std::span<const double> x, std::span<const double> y) {
  double floor_v = std::numeric_limits<double>::infinity();
  for (double v : y) floor_v = std::min(floor_v, v);
  const double cut = std::max(kFitFloor, kPlateauExclusionFactor * floor_v);
  std::vector<double> fx, fy;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] >= cut) {
      fx.push_back(x[i]);
      fy.push_back(y[i]);
    }
  }
  if (fx.size() < 3) return {std::numeric_limits<double>::quiet_NaN(), 0, 0};
  return fit_exponential_decay(fx, fy);
}

FitResult safe_fit_power(std::span<const double> x, std::span<const double> y) {
  std::vector<double> fx, fy;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] >= kFitFloor) {
      fx.push_back(x[i]);
      fy.push_back(y[i]);
    }
  }
  if (fx.size() < 3) return {std::numeric_limits<double>::quiet_NaN(), 0, 0};
  return fit_power_law(fx, fy);
}

const std::vector<double>& series_of(const ExperimentReport& r, const std::string& key) {
  const auto it = r.series.find(key);
  if (it == r.series.end())
    throw std::invalid_argument("report is missing series '" + key + "'");
  return it->second;
}

// Gate builders: pure functions of the recorded series, used both when the
// experiment runs and when a stored report is revalidated.

std::vector<Gate> variance_decay_gates(const ExperimentReport& r, FitResult* fit_out) {
  const auto& time = series_of(r, "time");
  const auto& v = series_of(r, "V_total");
  const double floor_rate = series_of(r, "rate_floor")[0];
  const FitResult fit = safe_fit_decay(time, v);
  if (fit_out) *fit_out = fit;
  std::vector<Gate> gates;
  gates.push_back(make_gate("decay_slope", fit.slope, "<=", -floor_rate + kDecaySlopeSlack));
  gates.push_back(make_gate("fit_quality", fit.r_squared, ">=", kFitQualityMin));
  gates.push_back(
      make_gate("terminal_ratio", v.back() / v.front(), "<=", kDecayTerminalRatio));
  return gates;
}

std::vector<Gate> mf_rate_gates(const ExperimentReport& r, FitResult* fit_out) {
  const auto& n = series_of(r, "N");
  const auto& gap = series_of(r, "gap");
  const double gamma_target = series_of(r, "gamma_target")[0];
  const FitResult fit = safe_fit_power(n, gap);
  if (fit_out) *fit_out = fit;
  std::vector<Gate> gates;
  gates.push_back(make_gate("rate_slope", fit.slope, "<=", -gamma_target + kMfSlopeSlack));
  gates.push_back(make_gate("rate_slope_floor", fit.slope, ">=", kMfSlopeLower));
  gates.push_back(make_gate("fit_quality", fit.r_squared, ">=", kFitQualityMin));
  return gates;
}

std::vector<Gate> iid_gates(const ExperimentReport& r, FitResult* fit_out) {
  const auto& n = series_of(r, "N");
  const auto& err = series_of(r, "err");
  const double agreement = series_of(r, "oracle_agreement")[0];
  const FitResult fit = safe_fit_power(n, err);
  if (fit_out) *fit_out = fit;
  std::vector<Gate> gates;
  gates.push_back(make_gate("rate_slope_upper", fit.slope, "<=", -0.5 + kIidSlopeTol));
  gates.push_back(make_gate("rate_slope_lower", fit.slope, ">=", -0.5 - kIidSlopeTol));
  gates.push_back(make_gate("fit_quality", fit.r_squared, ">=", kFitQualityMin));
  gates.push_back(make_gate("oracle_agreement", agreement, "<=", kIidOracleAgreement));
  return gates;
}

std::vector<Gate> stability_gates(const ExperimentReport& r) {
  const auto& ratio = series_of(r, "ratio");
  const std::size_t half = ratio.size() / 2;
  double max_all = 0, max_first = 0, max_second = 0;
  for (std::size_t i = 0; i < ratio.size(); ++i) {
    max_all = std::max(max_all, ratio[i]);
    (i < half ? max_first : max_second) = std::max(i < half ? max_first : max_second, ratio[i]);
  }
  std::vector<Gate> gates;
  gates.push_back(make_gate("max_ratio_finite", max_all, "finite", 0.0));
  const double growth = max_first > 0 ? max_second / max_first : 0.0;
  gates.push_back(make_gate("ratio_stability", growth, "<=", kStabilityRatioFactor));
  return gates;
}

std::vector<Gate> moment_gates(const ExperimentReport& r) {
  const auto& xi = series_of(r, "xi");
  const auto& kappa = series_of(r, "kappa_hat");
  const auto& sup = series_of(r, "sup_moment");
  const auto& init = series_of(r, "initial_moment_sum");
  const double ceiling = series_of(r, "moment_ceiling")[0];
  const double p = series_of(r, "p")[0];
  std::vector<Gate> gates;
  for (std::size_t j = 0; j < xi.size(); ++j) {
    const std::string tag = "_xi" + format_double(xi[j]);
    if (init[j] > 0) {
      gates.push_back(make_gate("kappa_finite" + tag, kappa[j], "finite", 0.0));
      if (p == 2.0) {
        gates.push_back(make_gate("kappa_ceiling" + tag, kappa[j], "<=", kMomentCeilingFactor));
      }
    } else {
      // Degenerate all-at-origin start: gate on the absolute diffusion scale.
      gates.push_back(make_gate("sup_ceiling" + tag, sup[j], "<=", ceiling));
    }
  }
  return gates;
}

}  // namespace

MuSampler gaussian_sampler(int dim) {
  MuSampler s;
  s.dim = dim;
  s.quantile = [](std::span<const double> u, std::span<double> out) {
    for (std::size_t c = 0; c < out.size(); ++c) out[c] = normal_quantile(clamp_unit(u[c]));
  };
  return s;
}

MuSampler point_mass_sampler(std::vector<double> z) {
  MuSampler s;
  s.dim = static_cast<int>(z.size());
  s.quantile = [z = std::move(z)](std::span<const double>, std::span<double> out) {
    std::copy(z.begin(), z.end(), out.begin());
  };
  return s;
}

// ---------------------------------------------------------------------------

ExperimentReport run_variance_decay(const GameSpec& game, const CboParams& params,
                                    int n_particles, std::span<const std::uint64_t> seeds,
                                    const InitBox& box, int record_every) {
  const auto t0 = Clock::now();
  params.validate();
  if (!(2.0 * params.lambda > params.sigma * params.sigma))
    throw std::invalid_argument("decay regime violated (2lambda > sigma^2 required)");
  if (!game.known_nash)
    throw std::invalid_argument("run_variance_decay: game has no known equilibrium");
  if (seeds.empty()) throw std::invalid_argument("run_variance_decay: need at least one seed");

  ExperimentReport r;
  r.name = "variance-decay";
  r.seed_count = static_cast<int>(seeds.size());

  std::vector<double> times;
  std::vector<std::vector<double>> v_total_rows;
  std::vector<std::vector<ExactSum>> v_player_sum;  // [M][time]; seed-order independent
  for (std::size_t s = 0; s < seeds.size(); ++s) {
    const NoiseStream stream(seeds[s]);
    const auto init = make_uniform_ensemble(game.players, n_particles, game.dim, box, stream);
    const auto traj = simulate(game, init, params, stream, record_every);
    const auto vt = variance_trace(traj, *game.known_nash);
    if (times.empty()) {
      times = vt.times;
      v_player_sum.assign(game.players, std::vector<ExactSum>(times.size()));
    }
    for (int m = 0; m < game.players; ++m) {
      for (std::size_t t = 0; t < times.size(); ++t) v_player_sum[m][t].add(vt.per_player[m][t]);
    }
    v_total_rows.push_back(vt.total);
  }

  std::vector<double> v_total(times.size(), 0.0);
  for (int m = 0; m < game.players; ++m) {
    std::vector<double> avg(times.size());
    for (std::size_t t = 0; t < times.size(); ++t) {
      avg[t] = v_player_sum[m][t].value() / static_cast<double>(seeds.size());
      v_total[t] += avg[t];
    }
    r.series["V_" + std::to_string(m + 1)] = std::move(avg);
  }
  r.series["time"] = times;
  r.series["V_total"] = v_total;
  r.series["rate_floor"] = single((2.0 * params.lambda - params.sigma * params.sigma) / 2.0);
  r.per_seed["V_total"] = std::move(v_total_rows);

  FitResult fit;
  r.verdicts = variance_decay_gates(r, &fit);
  r.fits.push_back({"decay", fit});
  r.wall_time_s = seconds_since(t0);
  return r;
}

ExperimentReport run_mf_rate(const GameSpec& game, const CboParams& params,
                             std::span<const int> n_list, int n_ref, double p,
                             std::span<const std::uint64_t> seeds, const InitBox& box) {
  const auto t0 = Clock::now();
  params.validate();
  if (n_list.empty()) throw std::invalid_argument("run_mf_rate: empty N list");
  if (!(p >= 1.0)) throw std::invalid_argument("run_mf_rate: p must be >= 1");
  if (seeds.empty()) throw std::invalid_argument("run_mf_rate: need at least one seed");
  for (int n : n_list) {
    if (n < 1) throw std::invalid_argument("run_mf_rate: N must be positive");
    if (n > n_ref / 4)
      throw std::invalid_argument(
          "run_mf_rate: reference ensemble too small (need max N <= n_ref / 4)");
  }

  ExperimentReport r;
  r.name = "mf-rate";
  r.seed_count = static_cast<int>(seeds.size());

  const int record_every = 1 << 28;  // endpoints only; the gap sup runs per step
  std::vector<double> gap(n_list.size(), 0.0), gap_se(n_list.size(), 0.0);
  std::vector<std::vector<double>> per_seed_max(seeds.size(),
                                                std::vector<double>(n_list.size(), 0.0));

  for (std::size_t ni = 0; ni < n_list.size(); ++ni) {
    const int n_small = n_list[ni];
    // Mean over seeds of sup_t gap^p, per shared particle slot; exact
    // accumulation keeps the aggregate independent of seed order.
    std::vector<ExactSum> acc(static_cast<std::size_t>(game.players) * n_small);
    std::vector<std::vector<double>> seed_p(seeds.size());
    for (std::size_t s = 0; s < seeds.size(); ++s) {
      const auto run = simulate_coupled(game, box, params, n_small, n_ref, seeds[s],
                                        record_every);
      seed_p[s].resize(acc.size());
      double seed_max = 0;
      for (std::size_t j = 0; j < acc.size(); ++j) {
        const double gp = pow_p(run.sup_gap[j], p);
        acc[j].add(gp);
        seed_p[s][j] = gp;
        seed_max = std::max(seed_max, run.sup_gap[j]);
      }
      per_seed_max[s][ni] = seed_max;
    }
    std::vector<double> acc_v(acc.size());
    for (std::size_t j = 0; j < acc.size(); ++j) acc_v[j] = acc[j].value();
    std::size_t argmax = 0;
    for (std::size_t j = 0; j < acc_v.size(); ++j) {
      if (acc_v[j] > acc_v[argmax]) argmax = j;
    }
    const double mean_p = acc_v[argmax] / static_cast<double>(seeds.size());
    gap[ni] = std::pow(mean_p, 1.0 / p);
    if (seeds.size() > 1 && mean_p > 0) {
      double var = 0;
      for (std::size_t s = 0; s < seeds.size(); ++s) {
        const double d = seed_p[s][argmax] - mean_p;
        var += d * d;
      }
      var /= static_cast<double>(seeds.size() - 1);
      const double se_p = std::sqrt(var / static_cast<double>(seeds.size()));
      gap_se[ni] = se_p * std::pow(mean_p, 1.0 / p - 1.0) / p;  // delta method
    }
  }

  std::vector<double> n_series(n_list.begin(), n_list.end());
  r.series["N"] = n_series;
  r.series["gap"] = gap;
  r.series["gap_stderr"] = gap_se;
  const double p_floor = game.growth ? stability_floor(*game.growth) : 1.0;
  r.series["gamma_target"] = single(gamma_exponent(kMfAssumedQ, p, p_floor));
  r.per_seed["max_gap"] = std::move(per_seed_max);

  FitResult fit;
  r.verdicts = mf_rate_gates(r, &fit);
  r.fits.push_back({"rate", fit});
  r.wall_time_s = seconds_since(t0);
  return r;
}

ExperimentReport run_iid_consensus(const MuSampler& mu, const FrozenCost& cost,
                                   std::span<const double> frozen_y, double alpha,
                                   std::span<const int> n_list, int trials, double p,
                                   std::uint64_t seed, std::int64_t oracle_samples) {
  const auto t0 = Clock::now();
  if (mu.dim < 1 || !mu.quantile) throw std::invalid_argument("run_iid_consensus: bad sampler");
  if (!(p >= 1.0)) throw std::invalid_argument("run_iid_consensus: p must be >= 1");
  if (trials < 1) throw std::invalid_argument("run_iid_consensus: trials must be >= 1");
  if (n_list.empty()) throw std::invalid_argument("run_iid_consensus: empty N list");
  if (oracle_samples < 3) throw std::invalid_argument("run_iid_consensus: oracle too small");
  std::vector<int> ns(n_list.begin(), n_list.end());
  std::sort(ns.begin(), ns.end());
  if (ns.front() < 1) throw std::invalid_argument("run_iid_consensus: N must be positive");

  const int dim = mu.dim;
  const NoiseStream stream(seed);
  std::vector<double> u(dim), x(dim);

  auto eval = [&](std::span<const double> pt) {
    const double c = cost(pt, frozen_y);
    if (!std::isfinite(c)) throw std::runtime_error("run_iid_consensus: non-finite cost");
    return c;
  };

  // Oracle reference: three disjoint segments of a shifted Halton sweep.
  const std::int64_t batch = oracle_samples / 3;
  std::vector<SoftminMean> oracle;
  for (int b = 0; b < 3; ++b) {
    SoftminMean acc(dim, alpha);
    std::vector<double> shift(dim);
    for (int c = 0; c < dim; ++c) {
      shift[c] = stream.uniform(StreamDomain::scratch, static_cast<std::uint32_t>(b), 0, 0,
                                static_cast<std::uint32_t>(c));
    }
    const std::int64_t lo = b * batch;
    for (std::int64_t j = lo; j < lo + batch; ++j) {
      for (int c = 0; c < dim; ++c) {
        const double h = radical_inverse(kHaltonPrimes[c], static_cast<std::uint64_t>(j) + 1);
        const double shifted = h + shift[c];
        u[c] = clamp_unit(shifted - std::floor(shifted));
      }
      mu.quantile(u, x);
      acc.add(x, eval(x));
    }
    oracle.push_back(std::move(acc));
  }
  std::vector<std::vector<double>> batch_est;
  for (const auto& acc : oracle) batch_est.push_back(acc.estimate());
  double agreement = 0;
  for (int a = 0; a < 3; ++a) {
    for (int b = a + 1; b < 3; ++b) {
      double d2 = 0;
      for (int c = 0; c < dim; ++c) {
        const double d = batch_est[a][c] - batch_est[b][c];
        d2 += d * d;
      }
      agreement = std::max(agreement, std::sqrt(d2));
    }
  }
  if (agreement > kIidOracleAgreement) {
    throw OracleUnstableError("oracle batches disagree by " + format_double(agreement) +
                              " (tolerance " + format_double(kIidOracleAgreement) + ")");
  }
  SoftminMean combined(dim, alpha);
  for (const auto& acc : oracle) combined.merge(acc);
  const auto reference = combined.estimate();

  // Monte-Carlo trials: one incremental sweep per trial, snapshots at each N.
  std::vector<double> err_p_sum(ns.size(), 0.0), err_p_sq(ns.size(), 0.0);
  std::vector<std::vector<double>> per_trial(ns.size(), std::vector<double>(trials, 0.0));
  for (int t = 0; t < trials; ++t) {
    SoftminMean acc(dim, alpha);
    std::size_t next = 0;
    for (int j = 0; j < ns.back() && next < ns.size(); ++j) {
      for (int c = 0; c < dim; ++c) {
        u[c] = stream.uniform(StreamDomain::sample, 0, static_cast<std::uint64_t>(j),
                              static_cast<std::uint64_t>(t), static_cast<std::uint32_t>(c));
      }
      mu.quantile(u, x);
      acc.add(x, eval(x));
      while (next < ns.size() && j + 1 == ns[next]) {
        const auto est = acc.estimate();
        double d2 = 0;
        for (int c = 0; c < dim; ++c) {
          const double d = est[c] - reference[c];
          d2 += d * d;
        }
        const double ep = pow_p(std::sqrt(d2), p);
        err_p_sum[next] += ep;
        err_p_sq[next] += ep * ep;
        per_trial[next][t] = ep;
        ++next;
      }
    }
  }

  std::vector<double> err(ns.size()), err_se(ns.size(), 0.0);
  for (std::size_t i = 0; i < ns.size(); ++i) {
    const double mean_p = err_p_sum[i] / trials;
    err[i] = std::pow(mean_p, 1.0 / p);
    if (trials > 1 && mean_p > 0) {
      const double var =
          std::max(0.0, (err_p_sq[i] - trials * mean_p * mean_p) / (trials - 1));
      const double se_p = std::sqrt(var / trials);
      err_se[i] = se_p * std::pow(mean_p, 1.0 / p - 1.0) / p;
    }
  }

  ExperimentReport r;
  r.name = "iid-consensus";
  r.seed_count = trials;
  r.series["N"] = std::vector<double>(ns.begin(), ns.end());
  r.series["err"] = err;
  r.series["err_stderr"] = err_se;
  r.series["oracle_agreement"] = single(agreement);
  r.series["reference"] = reference;
  r.per_seed["err_p_by_trial"] = std::move(per_trial);

  FitResult fit;
  r.verdicts = iid_gates(r, &fit);
  r.fits.push_back({"rate", fit});
  r.wall_time_s = seconds_since(t0);
  return r;
}

ExperimentReport run_stability_probe(const GameSpec& game, double moment_bound, double p,
                                     int trials, std::uint64_t seed, double alpha) {
  const auto t0 = Clock::now();
  if (!(moment_bound > 0)) throw std::invalid_argument("run_stability_probe: R must be > 0");
  if (trials < 2) throw std::invalid_argument("run_stability_probe: need at least 2 trials");
  if (game.growth && !(p >= stability_floor(*game.growth)))
    throw std::invalid_argument("run_stability_probe: p below the game's stability floor");

  const NoiseStream stream(seed);
  const int d = game.dim;
  const int M = game.players;

  // Draws one empirical measure with p-moment below the bound; which
  // distinguishes the mu tuple from the nu tuple.
  auto draw_measure = [&](int trial, int player, int which, int n) {
    for (int retry = 0; retry < 100; ++retry) {
      const std::uint32_t key = static_cast<std::uint32_t>(player + M * which);
      const std::uint64_t base =
          static_cast<std::uint64_t>(retry) * 1000000ull;
      const double scale =
          0.3 + 0.9 * stream.uniform(StreamDomain::scratch, key, base + 999999ull,
                                     static_cast<std::uint64_t>(trial), 0);
      std::vector<double> atoms(static_cast<std::size_t>(n) * d);
      for (int i = 0; i < n; ++i) {
        for (int c = 0; c < d; ++c) {
          atoms[static_cast<std::size_t>(i) * d + c] =
              scale * stream.normal(StreamDomain::scratch, key, base + i,
                                    static_cast<std::uint64_t>(trial),
                                    static_cast<std::uint32_t>(c));
        }
      }
      EmpiricalMeasure mu{d, std::move(atoms)};
      double mom = 0;
      for (int i = 0; i < n; ++i) mom += pow_p(norm_of(mu.atom(i)), p);
      mom /= n;
      if (mom <= moment_bound) return mu;
    }
    throw std::runtime_error("run_stability_probe: moment rejection failed after 100 retries");
  };

  std::vector<double> trial_idx(trials), ratio(trials);
  for (int t = 0; t < trials; ++t) {
    const int n = 8 + static_cast<int>(
                          stream.uniform(StreamDomain::scratch, 0xFFu, 0, t, 0) * 57.0);
    std::vector<EmpiricalMeasure> mu, nu;
    for (int j = 0; j < M; ++j) {
      mu.push_back(draw_measure(t, j, 0, n));
      nu.push_back(draw_measure(t, j, 1, n));
    }
    trial_idx[t] = t + 1;
    ratio[t] = stability_ratio(game, mu, nu, p, alpha);
  }

  ExperimentReport r;
  r.name = "stability-probe";
  r.seed_count = 1;
  r.series["trial"] = std::move(trial_idx);
  r.series["ratio"] = std::move(ratio);
  r.verdicts = stability_gates(r);
  r.wall_time_s = seconds_since(t0);
  return r;
}

double stability_ratio(const GameSpec& game, const std::vector<EmpiricalMeasure>& mu,
                       const std::vector<EmpiricalMeasure>& nu, double p, double alpha) {
  const int M = game.players;
  const int d = game.dim;
  if (static_cast<int>(mu.size()) != M || static_cast<int>(nu.size()) != M)
    throw std::invalid_argument("stability_ratio: need one measure per player");

  auto consensus_of = [&](const std::vector<EmpiricalMeasure>& tuple, int m) {
    std::vector<double> frozen;
    frozen.reserve(static_cast<std::size_t>(M - 1) * d);
    for (int j = 0; j < M; ++j) {
      if (j == m) continue;
      const auto mean = tuple[j].mean();
      frozen.insert(frozen.end(), mean.begin(), mean.end());
    }
    const int n = tuple[m].size();
    std::vector<double> costs(n);
    for (int i = 0; i < n; ++i) costs[i] = eval_cost(game, m, tuple[m].atom(i), frozen);
    const auto w = softmin_weights(costs, alpha);
    return weighted_point(tuple[m].atoms, d, w);
  };

  double wsum = 0;
  for (int j = 0; j < M; ++j) wsum += wasserstein_p(mu[j], nu[j], p);
  double delta = 0;
  for (int m = 0; m < M; ++m) {
    const auto a = consensus_of(mu, m);
    const auto b = consensus_of(nu, m);
    double d2 = 0;
    for (int c = 0; c < d; ++c) d2 += (a[c] - b[c]) * (a[c] - b[c]);
    delta = std::max(delta, std::sqrt(d2));
  }
  return wsum > 0 ? delta / wsum : 0.0;
}

ExperimentReport run_moment_monitor(const GameSpec& game, const CboParams& params,
                                    int n_particles, double p,
                                    std::span<const std::uint64_t> seeds, const InitBox& box) {
  const auto t0 = Clock::now();
  params.validate();
  if (!(p >= 2.0)) throw std::invalid_argument("run_moment_monitor: p must be >= 2");
  if (seeds.empty()) throw std::invalid_argument("run_moment_monitor: need at least one seed");

  const std::vector<double> xis = {0.0, 0.5, 1.0};
  std::vector<double> kappa_hat(xis.size(), 0.0), sup_mom(xis.size(), 0.0),
      init_mom(xis.size(), 0.0), c_mon(xis.size(), 0.0);
  std::vector<std::vector<double>> kappa_rows(xis.size(),
                                              std::vector<double>(seeds.size(), 0.0));

  for (std::size_t xj = 0; xj < xis.size(); ++xj) {
    CboParams pp = params;
    pp.xi = xis[xj];
    for (std::size_t s = 0; s < seeds.size(); ++s) {
      const NoiseStream stream(seeds[s]);
      const auto init =
          make_uniform_ensemble(game.players, n_particles, game.dim, box, stream);
      const auto traj = simulate(game, init, pp, stream, 1);

      double initial_sum = 0;
      for (int m = 0; m < game.players; ++m) {
        double mom = 0;
        for (int i = 0; i < n_particles; ++i) mom += pow_p(norm_of(init.at(m, i)), p);
        initial_sum += mom / n_particles;
      }
      init_mom[xj] = std::max(init_mom[xj], initial_sum);

      double sup = 0, cmon = 0;
      for (std::size_t t = 0; t < traj.snapshots.size(); ++t) {
        const auto& ens = traj.snapshots[t];
        double mom2_sum = 0;
        for (int m = 0; m < game.players; ++m) {
          double mom = 0, mom2 = 0;
          for (int i = 0; i < n_particles; ++i) {
            const double len = norm_of(ens.at(m, i));
            mom += pow_p(len, p);
            mom2 += len * len;
          }
          sup = std::max(sup, mom / n_particles);
          mom2_sum += mom2 / n_particles;
        }
        for (int m = 0; m < game.players; ++m) {
          const double cn = norm_of(traj.consensus_path[t].point(m));
          if (mom2_sum > 0) cmon = std::max(cmon, cn / std::sqrt(mom2_sum));
        }
      }
      sup_mom[xj] = std::max(sup_mom[xj], sup);
      c_mon[xj] = std::max(c_mon[xj], cmon);
      const double kappa = initial_sum > 0
                               ? sup / initial_sum
                               : std::numeric_limits<double>::quiet_NaN();
      kappa_rows[xj][s] = kappa;
      if (initial_sum > 0) kappa_hat[xj] = std::max(kappa_hat[xj], kappa);
    }
    if (init_mom[xj] == 0) kappa_hat[xj] = std::numeric_limits<double>::quiet_NaN();
  }

  ExperimentReport r;
  r.name = "moment-monitor";
  r.seed_count = static_cast<int>(seeds.size());
  r.series["xi"] = xis;
  r.series["kappa_hat"] = kappa_hat;
  r.series["sup_moment"] = sup_mom;
  r.series["initial_moment_sum"] = init_mom;
  r.series["c_mon"] = c_mon;
  r.series["p"] = single(p);
  r.series["moment_ceiling"] = single(kMomentCeilingFactor * params.sigma * params.sigma *
                                      params.t_end * game.dim);
  r.per_seed["kappa_by_xi"] = std::move(kappa_rows);
  r.verdicts = moment_gates(r);
  r.wall_time_s = seconds_since(t0);
  return r;
}

std::vector<Gate> revalidate(const ExperimentReport& report) {
  if (report.name == "variance-decay") return variance_decay_gates(report, nullptr);
  if (report.name == "mf-rate") return mf_rate_gates(report, nullptr);
  if (report.name == "iid-consensus") return iid_gates(report, nullptr);
  if (report.name == "stability-probe") return stability_gates(report);
  if (report.name == "moment-monitor") return moment_gates(report);
  throw std::invalid_argument("revalidate: unknown experiment '" + report.name + "'");
}

}  // namespace cbo
