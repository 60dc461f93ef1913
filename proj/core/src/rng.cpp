#include "pearl/rng.hpp"

namespace pearl {

StreamRng::StreamRng(std::uint64_t seed, std::initializer_list<std::uint64_t> keys)
    : state_(mix(seed ^ 0x9E3779B97F4A7C15ULL)) {
    for (auto k : keys) {
        state_ = mix(state_ ^ mix(k + 0x632BE59BD9B4E019ULL));
    }
}

std::uint64_t StreamRng::below(std::uint64_t n) {
    // Lemire's nearly-divisionless rejection.
    std::uint64_t x = (*this)();
    __uint128_t m = static_cast<__uint128_t>(x) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
        const std::uint64_t threshold = (0 - n) % n;
        while (low < threshold) {
            x = (*this)();
            m = static_cast<__uint128_t>(x) * n;
            low = static_cast<std::uint64_t>(m);
        }
    }
    return static_cast<std::uint64_t>(m >> 64);
}

} // namespace pearl
