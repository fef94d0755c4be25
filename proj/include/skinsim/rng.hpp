// rng.hpp: Counter-based random streams keyed by (seed, stream index)

#pragma once

#include <cstdint>
#include <limits>

namespace skinsim {

// SplitMix64 finalizer; a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Stream of uniform variates. Value k of stream (seed, index) is a pure
// function of (seed, index, k), so streams can be created in any order and on
// any thread without coordination.
class RandomStream {
public:
    using result_type = std::uint64_t;

    RandomStream(std::uint64_t seed, std::uint64_t stream_index) noexcept
        : key_(mix64(seed ^ mix64(stream_index + 0x632be59bd9b4e019ULL))) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept { return mix64(key_ + 0x9e3779b97f4a7c15ULL * counter_++); }

    // Uniform double in [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n) by rejection, n > 0.
    std::uint64_t below(std::uint64_t n) noexcept {
        const std::uint64_t limit = max() - max() % n;
        std::uint64_t r;
        do {
            r = (*this)();
        } while (r >= limit);
        return r % n;
    }

    std::uint64_t draws() const noexcept { return counter_; }

    // Independent child stream; used to give sub-tasks (disorder, initial
    // state) their own sequence without perturbing this one.
    RandomStream split(std::uint64_t tag) const noexcept { return RandomStream(key_, tag); }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

} // namespace skinsim
