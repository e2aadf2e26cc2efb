#pragma once

#include <array>
#include <cstdint>

namespace cbo {

// Accumulates doubles without rounding error, so the result does not depend
// on the order in which terms are added. The running value is kept as a
// signed fixed-point number in radix-2^32 digits spanning the full double
// range; the single rounding happens in value().
//
// Used for every reduction whose result must be invariant under particle
// permutations and worker partitioning (sample averages, softmin weight
// sums, consensus numerators).
class ExactSum {
 public:
  ExactSum() = default;

  void clear();
  void add(double x);
  // Adds the exact product a*b (split into rounded product + residual).
  void add_product(double a, double b);
  // Exact, order-independent combination of two accumulators.
  void merge(const ExactSum& other);
  // Rounds the exact total to the nearest double (ties to even).
  double value() const;

 private:
  // Digit w carries weight 2^(32*w - kBiasBits). Data occupies digits
  // 0..65; the rest is headroom for carries and the sign.
  static constexpr int kDigits = 70;
  static constexpr int kBiasBits = 1074;
  static constexpr std::int64_t kMaxPending = std::int64_t(1) << 30;

  void add_scaled(std::uint64_t mantissa, int exp2, bool negative);
  void normalize();

  std::array<std::int64_t, kDigits> d_{};
  std::int64_t pending_ = 0;
};

// Convenience helper: exact sum of a range.
double exact_total(const double* begin, const double* end);

}  // namespace cbo
