#include "mvsde/rng.hpp"

#include <cmath>
#include <numbers>

#include "mvsde/error.hpp"

namespace mvsde {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::DegenerateSet: return "DegenerateSet";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::MissingMetadata: return "MissingMetadata";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::SizeMismatch: return "SizeMismatch";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::CoefficientBlowup: return "CoefficientBlowup";
    case ErrorCode::StateBlowup: return "StateBlowup";
    case ErrorCode::NotConverged: return "NotConverged";
    case ErrorCode::ZeroDenominator: return "ZeroDenominator";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::DegenerateFit: return "DegenerateFit";
    case ErrorCode::InvalidProbe: return "InvalidProbe";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

namespace rng {

// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t hash(std::uint64_t seed, std::uint64_t stream, std::uint64_t a, std::uint64_t b,
                   std::uint64_t c) noexcept {
  std::uint64_t h = mix64(seed ^ 0x6a09e667f3bcc909ULL);
  h = mix64(h ^ stream);
  h = mix64(h ^ a);
  h = mix64(h ^ b);
  h = mix64(h ^ c);
  return h;
}

double uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t a, std::uint64_t b,
               std::uint64_t c) noexcept {
  const std::uint64_t bits = hash(seed, stream, a, b, c) >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

double normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t a, std::uint64_t b,
              std::uint64_t c) noexcept {
  // c indexes the output; the two uniforms live at 2c and 2c + 1.
  const double u1 = uniform(seed, stream, a, b, 2 * c);
  const double u2 = uniform(seed, stream, a, b, 2 * c + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace rng

double NoiseSource::draw(std::size_t step, std::size_t particle,
                         std::size_t component) const noexcept {
  const std::size_t id = permutation_.empty() ? particle : permutation_[particle];
  return rng::normal(seed_, rng::kNoiseStream, id, step, component);
}

void NoiseSource::fill(std::size_t step, std::size_t first, std::size_t count, std::size_t m,
                       std::span<double> out) const {
  require(out.size() >= count * m, ErrorCode::SizeMismatch, "noise buffer too small");
  if (!permutation_.empty())
    require(first + count <= permutation_.size(), ErrorCode::IndexOutOfRange,
            "noise permutation shorter than ensemble");
  for (std::size_t i = 0; i < count; ++i)
    for (std::size_t c = 0; c < m; ++c) out[i * m + c] = draw(step, first + i, c);
}

}  // namespace mvsde
