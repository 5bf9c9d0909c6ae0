#pragma once

// Counter-based random streams. Every normal variate is a pure function of
// (seed, replicate, point), so replicate generation can be spread over any
// number of threads without changing a single output bit.

#include <array>
#include <cstdint>

namespace oufield {

/// Identifier recorded in report and CSV metadata.
inline constexpr const char* kGeneratorId = "philox4x32-10/inverse-cdf(as241)";

/// Philox4x32 with 10 rounds (Salmon et al., SC'11).
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key);

/// Uniform on the open interval (0, 1) with 53 random bits.
double stream_uniform(std::uint64_t seed, std::uint64_t replicate, std::uint64_t point);

/// Standard normal variate for (seed, replicate, point).
double stream_normal(std::uint64_t seed, std::uint64_t replicate, std::uint64_t point);

/// Quantile function of the standard normal distribution, p in (0, 1)
/// (Wichura's AS241 via GSL).
double inverse_normal_cdf(double p);

/// SplitMix64 finalizer; used to derive independent seeds from one seed.
std::uint64_t mix_seed(std::uint64_t seed);

}  // namespace oufield
