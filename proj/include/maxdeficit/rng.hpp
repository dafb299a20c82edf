#pragma once

#include <cmath>
#include <cstdint>

namespace maxdeficit {

/// SplitMix64 finaliser.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/*
 * Counter-based stream keyed by (seed, stream index, domain tag).
 * Draw k of a stream is a pure function of the key and k, so paths can be
 * generated in any order or on any thread with identical results.
 */
class PathStream {
public:
    constexpr PathStream(std::uint64_t seed, std::uint64_t index, std::uint64_t domain = 0) noexcept
        : key_(mix64(mix64(seed ^ mix64(domain + 0x5851f42d4c957f2dULL)) + index)) {}

    constexpr std::uint64_t next_u64() noexcept { return mix64(key_ + 0x9e3779b97f4a7c15ULL * ++counter_); }

    /// Uniform on the open interval (0, 1).
    constexpr double uniform() noexcept {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Exponential variate with the given mean, by inversion.
    double exponential(double mean) noexcept { return -mean * std::log(uniform()); }

    /// Uniform index in [0, n).
    std::uint64_t below(std::uint64_t n) noexcept {
        return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n;
    }

    constexpr std::uint64_t draws() const noexcept { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

/// Domain tags separating independent uses of one user seed.
namespace stream_domain {
inline constexpr std::uint64_t max_loss = 1;
inline constexpr std::uint64_t outer_state = 2;
inline constexpr std::uint64_t inner_seed = 3;
inline constexpr std::uint64_t aggregate_claims = 4;
inline constexpr std::uint64_t bootstrap = 5;
}  // namespace stream_domain

}  // namespace maxdeficit
