#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace mvsde {

// Counter-based random numbers. Every draw is a pure function of
// (seed, stream, a, b, c), so results do not depend on evaluation order or on
// how work is split across threads.
namespace rng {

std::uint64_t mix64(std::uint64_t z) noexcept;
std::uint64_t hash(std::uint64_t seed, std::uint64_t stream, std::uint64_t a, std::uint64_t b,
                   std::uint64_t c) noexcept;

// Uniform on the open interval (0, 1).
double uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t a, std::uint64_t b,
               std::uint64_t c) noexcept;

// Standard normal via Box-Muller on two counter draws.
double normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t a, std::uint64_t b,
              std::uint64_t c) noexcept;

inline constexpr std::uint64_t kNoiseStream = 0x4e4f495345ULL;
inline constexpr std::uint64_t kInitialStream = 0x494e4954ULL;
inline constexpr std::uint64_t kBootstrapStream = 0x424f4f54ULL;
inline constexpr std::uint64_t kProbeStream = 0x50524f42ULL;

}  // namespace rng

/// Brownian increments for the particle scheme, shared between runs that must
/// be coupled through common random numbers.
class NoiseSource {
 public:
  explicit NoiseSource(std::uint64_t seed) : seed_(seed) {}

  // slot i of the ensemble draws the noise of particle permutation[i].
  NoiseSource(std::uint64_t seed, std::vector<std::size_t> permutation)
      : seed_(seed), permutation_(std::move(permutation)) {}

  std::uint64_t seed() const noexcept { return seed_; }

  // Writes standard normals for one step into out, laid out particle-major
  // (particles x m). Particles [first, first + count) only.
  void fill(std::size_t step, std::size_t first, std::size_t count, std::size_t m,
            std::span<double> out) const;

  double draw(std::size_t step, std::size_t particle, std::size_t component) const noexcept;

 private:
  std::uint64_t seed_;
  std::vector<std::size_t> permutation_;
};

}  // namespace mvsde
