#pragma once

// Counter-based random streams.
//
// Every draw is a pure function of (master_seed, path_index, counter), computed
// with the Philox4x32-10 bijection. Paths therefore never share state, and a
// path's draws do not depend on which worker thread simulates it.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace jumphedge {

namespace detail {

inline void philox_round(std::array<std::uint32_t, 4>& ctr, const std::array<std::uint32_t, 2>& key) {
    constexpr std::uint64_t m0 = 0xD2511F53u;
    constexpr std::uint64_t m1 = 0xCD9E8D57u;
    const std::uint64_t p0 = m0 * ctr[0];
    const std::uint64_t p1 = m1 * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
}

} // namespace detail

/// Philox4x32 with 10 rounds.
inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key) {
    constexpr std::uint32_t w0 = 0x9E3779B9u;
    constexpr std::uint32_t w1 = 0xBB67AE85u;
    for (int r = 0; r < 10; ++r) {
        if (r > 0) {
            key[0] += w0;
            key[1] += w1;
        }
        detail::philox_round(ctr, key);
    }
    return ctr;
}

/// SplitMix64 finalizer; used to fold tags into seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Derive an independent master seed for a named sub-experiment.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag) noexcept {
    return mix64(seed ^ mix64(tag));
}

class RngStream {
public:
    RngStream(std::uint64_t master_seed, std::uint64_t path_index) noexcept
        : master_seed_(master_seed), path_index_(path_index) {}

    std::uint64_t master_seed() const noexcept { return master_seed_; }
    std::uint64_t path_index() const noexcept { return path_index_; }
    /// Number of 64-bit words consumed so far.
    std::uint64_t counter() const noexcept { return drawn_; }

    std::uint64_t next_u64() noexcept {
        if (buffered_ == 0) refill();
        ++drawn_;
        return buffer_[2 - buffered_--];
    }

    /// Uniform on the open interval (0, 1).
    double uniform() noexcept {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard exponential.
    double exponential() noexcept { return -std::log(uniform()); }

    /// Uniform on the open interval (-pi/2, pi/2).
    double uniform_angle() noexcept { return std::numbers::pi * (uniform() - 0.5); }

private:
    void refill() noexcept {
        const std::array<std::uint32_t, 4> ctr{
            static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
            static_cast<std::uint32_t>(path_index_), static_cast<std::uint32_t>(path_index_ >> 32)};
        const std::array<std::uint32_t, 2> key{static_cast<std::uint32_t>(master_seed_),
                                               static_cast<std::uint32_t>(master_seed_ >> 32)};
        const auto out = philox4x32(ctr, key);
        buffer_[0] = (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
        buffer_[1] = (static_cast<std::uint64_t>(out[3]) << 32) | out[2];
        buffered_ = 2;
        ++block_;
    }

    std::uint64_t master_seed_;
    std::uint64_t path_index_;
    std::uint64_t block_ = 0;
    std::uint64_t drawn_ = 0;
    std::array<std::uint64_t, 2> buffer_{};
    int buffered_ = 0;
};

/// Stream for one path. Distinct path indices address disjoint counter spaces.
inline RngStream derive_stream(std::uint64_t master_seed, std::uint64_t path_index) noexcept {
    return RngStream(master_seed, path_index);
}

} // namespace jumphedge
