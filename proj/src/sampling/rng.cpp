#include "oufield/rng.hpp"

#include <cmath>
#include <gsl/gsl_cdf.h>

namespace oufield {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t prod = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(prod >> 32);
    lo = static_cast<std::uint32_t>(prod);
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            key[0] += kWeyl0;
            key[1] += kWeyl1;
        }
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, ctr[0], hi0, lo0);
        mulhilo(kMul1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
}

double stream_uniform(std::uint64_t seed, std::uint64_t replicate, std::uint64_t point) {
    const auto block = philox4x32_10(
        {static_cast<std::uint32_t>(point), static_cast<std::uint32_t>(point >> 32),
         static_cast<std::uint32_t>(replicate), static_cast<std::uint32_t>(replicate >> 32)},
        {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)});
    const std::uint64_t bits = ((static_cast<std::uint64_t>(block[0]) << 32) | block[1]) >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

double stream_normal(std::uint64_t seed, std::uint64_t replicate, std::uint64_t point) {
    return inverse_normal_cdf(stream_uniform(seed, replicate, point));
}

double inverse_normal_cdf(double p) { return gsl_cdf_ugaussian_Pinv(p); }

std::uint64_t mix_seed(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

}  // namespace oufield
