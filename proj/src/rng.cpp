#include "smalldiff/rng.hpp"

#include <boost/math/special_functions/erf.hpp>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace smalldiff::rng {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) noexcept {
    const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(product >> 32);
    lo = static_cast<std::uint32_t>(product);
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) noexcept {
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0 = 0, lo0 = 0, hi1 = 0, lo1 = 0;
        mulhilo(kMul0, ctr[0], hi0, lo0);
        mulhilo(kMul1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kWeyl0;
        key[1] += kWeyl1;
    }
    return ctr;
}

std::uint64_t bits(const StreamKey& key, std::uint64_t index) noexcept {
    // counter = (index low, index high | stream, replication low, replication high)
    const std::array<std::uint32_t, 4> ctr{
        static_cast<std::uint32_t>(index),
        static_cast<std::uint32_t>((index >> 32) & 0xFFFFu) | (static_cast<std::uint32_t>(key.stream) << 16),
        static_cast<std::uint32_t>(key.replication),
        static_cast<std::uint32_t>(key.replication >> 32),
    };
    const auto out = philox4x32(ctr, {static_cast<std::uint32_t>(key.seed),
                                      static_cast<std::uint32_t>(key.seed >> 32)});
    return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

double uniform(const StreamKey& key, std::uint64_t index) noexcept {
    return (static_cast<double>(bits(key, index) >> 11) + 0.5) * 0x1.0p-53;
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw std::domain_error("normal_quantile: p must lie in (0, 1)");
    }
    return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

double normal(const StreamKey& key, std::uint64_t index) { return normal_quantile(uniform(key, index)); }

}  // namespace smalldiff::rng
