#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace pearl {

/// Counter-keyed random stream.
///
/// A stream is identified by (seed, key...) rather than by position in a shared
/// sequence, so every participant-day draws from its own stream regardless of how
/// work is scheduled across threads. Satisfies UniformRandomBitGenerator and can
/// drive the <random> distributions.
class StreamRng {
public:
    using result_type = std::uint64_t;

    explicit StreamRng(std::uint64_t seed) : state_(mix(seed ^ 0x9E3779B97F4A7C15ULL)) {}
    StreamRng(std::uint64_t seed, std::initializer_list<std::uint64_t> keys);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        state_ += 0x9E3779B97F4A7C15ULL;
        return mix(state_);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n). n must be > 0.
    std::uint64_t below(std::uint64_t n);

    static constexpr std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
};

/// Purposes that key independent streams for the same participant-day.
enum class Stream : std::uint64_t {
    Population = 1,
    PreStudy = 2,
    Policy = 3,
    Message = 4,
    Feedback = 5,
    Steps = 6,
    Attrition = 7,
    Bootstrap = 8,
    Assignment = 9,
};

inline StreamRng make_stream(std::uint64_t seed, Stream purpose, std::uint64_t a = 0,
                             std::uint64_t b = 0) {
    return StreamRng(seed, {static_cast<std::uint64_t>(purpose), a, b});
}

} // namespace pearl
