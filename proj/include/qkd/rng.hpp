#pragma once

#include <cstdint>

namespace qkd {

/**
 * Seeded pseudorandom generator with cheap independent substreams.
 *
 * The state is a 64-bit counter advanced by a fixed odd increment; every
 * draw returns the splitmix64 finalizer of the new counter value. A master
 * seed plus a stream id select the starting counter, so any substream can
 * be regenerated in isolation. Session trials use their trial index as the
 * stream id, which makes results independent of execution order.
 */
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : Rng(seed, 0) {}

    Rng(std::uint64_t seed, std::uint64_t stream)
        : state_(mix(mix(seed + kIncrement) + stream)) {}

    std::uint64_t next_u64() {
        state_ += kIncrement;
        return mix(state_);
    }

    /// Uniform double in [0, 1) with 53 significant bits.
    double next_unit() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// True with probability p; p = 1 always succeeds, p = 0 never does.
    bool bernoulli(double p) { return next_unit() < p; }

    /// Uniform integer in [0, bound); bound must be nonzero.
    std::uint64_t below(std::uint64_t bound) {
        using u128 = unsigned __int128;
        return static_cast<std::uint64_t>(
            (static_cast<u128>(next_u64()) * bound) >> 64);
    }

  private:
    static constexpr std::uint64_t kIncrement = 0x9E3779B97F4A7C15ULL;

    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
};

}  // namespace qkd
