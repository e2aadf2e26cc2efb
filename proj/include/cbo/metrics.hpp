#pragma once

#include <span>
#include <vector>

#include "cbo/dynamics.hpp"
#include "cbo/game.hpp"

namespace cbo {

// Uniform empirical measure: N atoms in R^d, mass 1/N each.
struct EmpiricalMeasure {
  int dim = 0;
  std::vector<double> atoms;  // N * dim

  EmpiricalMeasure() = default;
  EmpiricalMeasure(int dim_, std::vector<double> atoms_)
      : dim(dim_), atoms(std::move(atoms_)) {}

  int size() const { return dim == 0 ? 0 : static_cast<int>(atoms.size()) / dim; }
  std::span<const double> atom(int i) const {
    return {atoms.data() + static_cast<std::size_t>(i) * dim, static_cast<std::size_t>(dim)};
  }
  std::vector<double> mean() const;
};

struct FitResult {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

// Exact p-Wasserstein distance between equal-size uniform empirical
// measures: sorting in one dimension, optimal assignment otherwise.
// Limited to N <= 512 (the exact regime).
double wasserstein_p(const EmpiricalMeasure& a, const EmpiricalMeasure& b, double p);

// Min-cost perfect matching on an n x n dense cost matrix (row-major);
// returns the total cost, and the column matched to each row if asked.
double solve_assignment(std::span<const double> cost, int n,
                        std::vector<int>* row_to_col = nullptr);

// Per-time squared distance of each player's particle cloud to the
// reference strategy: V_m(t) = (1/N) sum_i |X^{m,i}_t - x*_m|^2 and the
// cumulative V = sum_m V_m.
struct VarianceTrace {
  std::vector<double> times;
  std::vector<std::vector<double>> per_player;  // [M][time]
  std::vector<double> total;                    // [time]
};

VarianceTrace variance_trace(const Trajectory& traj, const Strategy& x_star);

// Least squares of ln(values) on times; slope < 0 means decay.
FitResult fit_exponential_decay(std::span<const double> times, std::span<const double> values);

// Least squares of ln(gaps) on ln(ns).
FitResult fit_power_law(std::span<const double> ns, std::span<const double> gaps);

// Mean-field convergence exponent: min of 1/2, (q-p)/(2p^2) and
// (q - (2 v pf)) / (2 (2 v pf)^2) with pf the stability floor. Requires
// q >= max(4, 2*pf) and 0 < p <= q/2.
double gamma_exponent(double q, double p, double p_floor);

}  // namespace cbo
