#include "cbo/exact_sum.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace cbo {

namespace {

constexpr std::uint64_t kMask32 = 0xFFFFFFFFull;

struct Decomposed {
  std::uint64_t mantissa;
  int exp2;  // value = mantissa * 2^exp2
  bool negative;
};

Decomposed decompose(double x) {
  const std::uint64_t bits = std::bit_cast<std::uint64_t>(x);
  const bool neg = (bits >> 63) != 0;
  const int raw_exp = static_cast<int>((bits >> 52) & 0x7FF);
  const std::uint64_t frac = bits & ((std::uint64_t(1) << 52) - 1);
  if (raw_exp == 0) return {frac, -1074, neg};  // subnormal
  return {frac | (std::uint64_t(1) << 52), raw_exp - 1075, neg};
}

}  // namespace

void ExactSum::clear() {
  d_.fill(0);
  pending_ = 0;
}

void ExactSum::add(double x) {
  if (x == 0.0) return;
  if (!std::isfinite(x)) throw std::invalid_argument("ExactSum: non-finite term");
  const Decomposed v = decompose(x);
  add_scaled(v.mantissa, v.exp2, v.negative);
}

void ExactSum::add_product(double a, double b) {
  const double p = a * b;
  if (!std::isfinite(p)) throw std::invalid_argument("ExactSum: non-finite product");
  // p + err == a*b exactly.
  const double err = std::fma(a, b, -p);
  add(p);
  add(err);
}

void ExactSum::merge(const ExactSum& other) {
  for (int w = 0; w < kDigits; ++w) d_[w] += other.d_[w];
  pending_ += other.pending_ + 2;
  if (pending_ >= kMaxPending) normalize();
}

void ExactSum::add_scaled(std::uint64_t mantissa, int exp2, bool negative) {
  const int off = exp2 + kBiasBits;  // in [0, 2045]
  const int w = off >> 5;
  const int s = off & 31;
  const unsigned __int128 v = static_cast<unsigned __int128>(mantissa) << s;
  const std::int64_t c0 = static_cast<std::int64_t>(static_cast<std::uint64_t>(v) & kMask32);
  const std::int64_t c1 = static_cast<std::int64_t>(static_cast<std::uint64_t>(v >> 32) & kMask32);
  const std::int64_t c2 = static_cast<std::int64_t>(static_cast<std::uint64_t>(v >> 64) & kMask32);
  if (negative) {
    d_[w] -= c0;
    d_[w + 1] -= c1;
    d_[w + 2] -= c2;
  } else {
    d_[w] += c0;
    d_[w + 1] += c1;
    d_[w + 2] += c2;
  }
  if (++pending_ >= kMaxPending) normalize();
}

void ExactSum::normalize() {
  std::int64_t carry = 0;
  for (int w = 0; w < kDigits - 1; ++w) {
    const std::int64_t t = d_[w] + carry;
    carry = t >> 32;  // floor division by 2^32
    d_[w] = t - (carry << 32);
  }
  d_[kDigits - 1] += carry;  // top digit stays signed
  pending_ = 0;
}

double ExactSum::value() const {
  // Canonicalize a copy: digits 0..kDigits-2 in [0, 2^32), signed top digit.
  std::array<std::int64_t, kDigits> w = d_;
  std::int64_t carry = 0;
  for (int i = 0; i < kDigits - 1; ++i) {
    const std::int64_t t = w[i] + carry;
    carry = t >> 32;
    w[i] = t - (carry << 32);
  }
  w[kDigits - 1] += carry;

  bool negative = w[kDigits - 1] < 0;
  if (negative) {
    std::int64_t borrow = 0;
    for (int i = 0; i < kDigits - 1; ++i) {
      std::int64_t t = -w[i] - borrow;
      if (t < 0) {
        t += std::int64_t(1) << 32;
        borrow = 1;
      } else {
        borrow = 0;
      }
      w[i] = t;
    }
    w[kDigits - 1] = -w[kDigits - 1] - borrow;
  }

  int h = kDigits - 1;
  while (h >= 0 && w[h] == 0) --h;
  if (h < 0) return 0.0;

  const auto ms = static_cast<std::uint64_t>(w[h]);
  const int msb_in_digit = 63 - std::countl_zero(ms);
  const long msb_pos = 32L * h + msb_in_digit;  // absolute bit index (lsb of digit 0 = 0)

  // Gather the 64 bits ending at msb_pos (zero-padded below digit 0).
  auto bit_at = [&](long pos) -> int {
    if (pos < 0) return 0;
    const long dig = pos >> 5;
    if (dig > h) return 0;
    return static_cast<int>((static_cast<std::uint64_t>(w[dig]) >> (pos & 31)) & 1u);
  };
  std::uint64_t acc = 0;
  for (long pos = msb_pos; pos > msb_pos - 64; --pos) {
    acc = (acc << 1) | static_cast<std::uint64_t>(bit_at(pos));
  }
  std::uint64_t mant = acc >> 11;              // top 53 bits
  const int guard = static_cast<int>((acc >> 10) & 1u);
  bool sticky = (acc & ((std::uint64_t(1) << 10) - 1)) != 0;
  if (!sticky) {
    for (long pos = msb_pos - 64; pos >= 0 && !sticky; --pos) {
      if (bit_at(pos)) sticky = true;
    }
  }
  long exp = msb_pos - kBiasBits;  // value ~ mant * 2^(exp-52)
  if (guard && (sticky || (mant & 1u))) {
    ++mant;
    if (mant == (std::uint64_t(1) << 53)) {
      mant >>= 1;
      ++exp;
    }
  }
  const double mag = std::ldexp(static_cast<double>(mant), static_cast<int>(exp) - 52);
  return negative ? -mag : mag;
}

double exact_total(const double* begin, const double* end) {
  ExactSum s;
  for (const double* p = begin; p != end; ++p) s.add(*p);
  return s.value();
}

}  // namespace cbo
