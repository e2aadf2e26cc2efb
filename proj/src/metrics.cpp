#include "cbo/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace cbo {

namespace {

double pow_p(double base, double p) {
  if (p == 1.0) return base;
  if (p == 2.0) return base * base;
  return std::pow(base, p);
}

double atom_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) {
    const double d = a[c] - b[c];
    s += d * d;
  }
  return std::sqrt(s);
}

}  // namespace

std::vector<double> EmpiricalMeasure::mean() const {
  std::vector<double> m(dim, 0.0);
  const int n = size();
  for (int i = 0; i < n; ++i) {
    const auto a = atom(i);
    for (int c = 0; c < dim; ++c) m[c] += a[c];
  }
  for (double& v : m) v /= n;
  return m;
}

// Jonker-Volgenant style shortest augmenting path, O(n^3).
double solve_assignment(std::span<const double> cost, int n, std::vector<int>* row_to_col) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> match(n + 1, 0);  // match[col] = row (1-based, 0 = free)

  for (int row = 1; row <= n; ++row) {
    match[0] = row;
    int j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<char> used(n + 1, 0);
    std::vector<int> way(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = match[j0];
      double delta = kInf;
      int j1 = -1;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur =
            cost[static_cast<std::size_t>(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0);
  }

  double total = 0.0;
  if (row_to_col) row_to_col->assign(n, -1);
  for (int j = 1; j <= n; ++j) {
    const int i = match[j];
    total += cost[static_cast<std::size_t>(i - 1) * n + (j - 1)];
    if (row_to_col) (*row_to_col)[i - 1] = j - 1;
  }
  return total;
}

double wasserstein_p(const EmpiricalMeasure& a, const EmpiricalMeasure& b, double p) {
  if (a.dim != b.dim) throw std::invalid_argument("wasserstein_p: dimension mismatch");
  const int n = a.size();
  if (n != b.size()) throw std::invalid_argument("wasserstein_p: unequal atom counts");
  if (n < 1) throw std::invalid_argument("wasserstein_p: empty measure");
  if (n > 512) throw std::invalid_argument("wasserstein_p: N above exact-assignment cap (512)");
  if (!(p >= 1.0)) throw std::invalid_argument("wasserstein_p: p must be >= 1");

  if (a.dim == 1) {
    std::vector<double> xa(a.atoms), xb(b.atoms);
    std::sort(xa.begin(), xa.end());
    std::sort(xb.begin(), xb.end());
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += pow_p(std::abs(xa[i] - xb[i]), p);
    return std::pow(s / n, 1.0 / p);
  }

  std::vector<double> cost(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      cost[static_cast<std::size_t>(i) * n + j] = pow_p(atom_distance(a.atom(i), b.atom(j)), p);
    }
  }
  const double total = solve_assignment(cost, n);
  return std::pow(total / n, 1.0 / p);
}

VarianceTrace variance_trace(const Trajectory& traj, const Strategy& x_star) {
  if (traj.snapshots.empty())
    throw std::invalid_argument("variance_trace: trajectory carries no snapshots");
  const auto& first = traj.snapshots.front();
  if (x_star.players != first.players || x_star.dim != first.dim)
    throw std::invalid_argument("variance_trace: reference strategy shape mismatch");

  VarianceTrace out;
  out.times = traj.times;
  out.per_player.assign(first.players, std::vector<double>(traj.snapshots.size(), 0.0));
  out.total.assign(traj.snapshots.size(), 0.0);
  for (std::size_t t = 0; t < traj.snapshots.size(); ++t) {
    const auto& ens = traj.snapshots[t];
    for (int m = 0; m < ens.players; ++m) {
      const auto star = x_star.block(m);
      double s = 0.0;
      for (int i = 0; i < ens.count; ++i) {
        const auto p = ens.at(m, i);
        for (int c = 0; c < ens.dim; ++c) {
          const double dc = p[c] - star[c];
          s += dc * dc;
        }
      }
      out.per_player[m][t] = s / ens.count;
      out.total[t] += out.per_player[m][t];
    }
  }
  return out;
}

namespace {

FitResult fit_linear(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n < 3) throw std::invalid_argument("fit: need at least 3 points");
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0) throw std::invalid_argument("fit: degenerate abscissa");
  FitResult r;
  r.slope = sxy / sxx;
  r.intercept = my - r.slope * mx;
  double ss_res = 0, ss_tot = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double pred = r.intercept + r.slope * x[i];
    ss_res += (y[i] - pred) * (y[i] - pred);
    ss_tot += (y[i] - my) * (y[i] - my);
  }
  r.r_squared = ss_tot == 0 ? (ss_res == 0 ? 1.0 : 0.0) : 1.0 - ss_res / ss_tot;
  r.r_squared = std::clamp(r.r_squared, 0.0, 1.0);
  return r;
}

}  // namespace

FitResult fit_exponential_decay(std::span<const double> times, std::span<const double> values) {
  if (times.size() != values.size()) throw std::invalid_argument("fit: length mismatch");
  std::vector<double> logs(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] > 0)) throw std::invalid_argument("fit_exponential_decay: nonpositive value");
    logs[i] = std::log(values[i]);
  }
  return fit_linear(times, logs);
}

FitResult fit_power_law(std::span<const double> ns, std::span<const double> gaps) {
  if (ns.size() != gaps.size()) throw std::invalid_argument("fit: length mismatch");
  std::vector<double> lx(ns.size()), ly(gaps.size());
  for (std::size_t i = 0; i < ns.size(); ++i) {
    if (!(ns[i] > 0) || !(gaps[i] > 0))
      throw std::invalid_argument("fit_power_law: nonpositive value");
    lx[i] = std::log(ns[i]);
    ly[i] = std::log(gaps[i]);
  }
  return fit_linear(lx, ly);
}

double gamma_exponent(double q, double p, double p_floor) {
  const double pf = std::max(2.0, p_floor);
  if (!(q >= std::max(4.0, 2.0 * p_floor)))
    throw std::domain_error("gamma_exponent: requires q >= max(4, 2*p_floor)");
  if (!(p > 0.0 && p <= q / 2.0))
    throw std::domain_error("gamma_exponent: requires 0 < p <= q/2");
  const double t1 = 0.5;
  const double t2 = (q - p) / (2.0 * p * p);
  const double t3 = (q - pf) / (2.0 * pf * pf);
  return std::min({t1, t2, t3});
}

}  // namespace cbo
