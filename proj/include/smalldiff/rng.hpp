#pragma once

#include <array>
#include <cstdint>

namespace smalldiff::rng {

/// Philox4x32-10 block function (Salmon et al., SC'11). Maps a 128-bit
/// counter and a 64-bit key to 128 pseudo-random bits with no state.
[[nodiscard]] std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                                      std::array<std::uint32_t, 2> key) noexcept;

/// Independent sub-streams sharing one (seed, replication) key.
enum class Stream : std::uint32_t {
    Noise = 0,   ///< Brownian increments of a simulated path.
    Jitter = 1,  ///< Perturbation of jittered observation grids.
    Oracle = 2,  ///< Test and diagnostic oracles.
};

/// Addresses one random draw by (seed, replication, stream, index). Draws at
/// different addresses are independent; the same address always yields the
/// same bits, so results do not depend on evaluation order.
struct StreamKey {
    std::uint64_t seed = 0;
    std::uint64_t replication = 0;
    Stream stream = Stream::Noise;
};

/// 64 random bits at (key, index). `index` must be below 2^48.
[[nodiscard]] std::uint64_t bits(const StreamKey& key, std::uint64_t index) noexcept;

/// Uniform draw in the open interval (0, 1) with 53-bit resolution.
[[nodiscard]] double uniform(const StreamKey& key, std::uint64_t index) noexcept;

/// Standard normal draw by inversion of the uniform at the same address.
[[nodiscard]] double normal(const StreamKey& key, std::uint64_t index);

/// Inverse of the standard normal CDF on (0, 1).
[[nodiscard]] double normal_quantile(double p);

}  // namespace smalldiff::rng
