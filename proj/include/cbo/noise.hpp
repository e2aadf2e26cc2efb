#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace cbo {

// Philox4x32-10 block cipher: 128-bit counter + 64-bit key -> 128 random bits.
std::array<std::uint32_t, 4> philox4x32(const std::array<std::uint32_t, 4>& counter,
                                        std::uint64_t key);

// What a draw is used for. Separates the address spaces of initial
// conditions, step noise, probe sampling etc. under one seed.
enum class StreamDomain : std::uint32_t {
  step = 0,
  init = 1,
  probe = 2,
  sample = 3,
  scratch = 4,
};

// Deterministic, stream-addressable randomness. Every deviate is a pure
// function of (seed, domain, player, particle, step, coordinate), so two
// systems sharing addresses see identical noise (common random numbers)
// and parallel execution cannot reorder draws.
//
// An optional particle id map redirects slot (m, i) to another stream id;
// permuting particles together with their ids permutes trajectories exactly.
class NoiseStream {
 public:
  explicit NoiseStream(std::uint64_t seed) : seed_(seed) {}

  // ids is an M x N row-major table; empty means identity.
  NoiseStream with_particle_ids(std::vector<std::uint64_t> ids, int n_per_player) const;

  std::uint64_t seed() const { return seed_; }

  // Uniform in [0, 1).
  double uniform(StreamDomain dom, std::uint32_t m, std::uint64_t i, std::uint64_t k,
                 std::uint32_t coord) const;
  // Standard normal deviate.
  double normal(StreamDomain dom, std::uint32_t m, std::uint64_t i, std::uint64_t k,
                std::uint32_t coord) const;

  std::uint64_t particle_id(std::uint32_t m, std::uint64_t i) const {
    return ids_.empty() ? i : ids_[static_cast<std::size_t>(m) * ids_n_ + i];
  }

 private:
  std::array<std::uint32_t, 4> block(StreamDomain dom, std::uint32_t m, std::uint64_t i,
                                     std::uint64_t k, std::uint32_t coord) const;

  std::uint64_t seed_;
  std::vector<std::uint64_t> ids_;  // optional per-(m,i) stream ids
  int ids_n_ = 0;
};

// Inverse of the standard normal CDF (Acklam's rational approximation with
// one Halley refinement; ~1e-15 relative accuracy on (0,1)).
double normal_quantile(double p);

}  // namespace cbo
