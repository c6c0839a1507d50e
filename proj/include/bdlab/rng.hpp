#ifndef BDLAB_RNG_HPP
#define BDLAB_RNG_HPP

#include <cstdint>

namespace bdlab {

/// Counter-based generator: draw k of stream s under seed is
/// splitmix64(seed ^ splitmix64(s) + k), so every randomized battery is a pure
/// function of (seed, stream) and independent of evaluation order.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream) : key_(seed ^ mix(stream + 0x632be59bd9b4e019ULL)) {}

    std::uint64_t next_u64() { return mix(key_ + counter_++); }
    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace bdlab

#endif  // BDLAB_RNG_HPP
