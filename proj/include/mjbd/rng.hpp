#pragma once

#include <cstdint>

namespace mjbd {

/// Counter-based random stream. Draw k is a pure function of (seed, k):
///
///   u64(k)  = mix(seed + (k+1) * 0x9E3779B97F4A7C15)   mix = SplitMix64 finalizer
///   u01(k)  = (u64(k) >> 11) * 2^-53                   in [0, 1)
///   normals = Box-Muller on consecutive u01 pairs, cosine branch first
///
/// Instances are therefore reproducible from the seed alone, independent of
/// how the draws are batched. substream() derives statistically independent
/// streams for per-trial / per-restart seeding.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xBF58476D1CE4E5B9ULL;
        z ^= z >> 27;
        z *= 0x94D049BB133111EBULL;
        z ^= z >> 31;
        return z;
    }

    std::uint64_t next_u64() {
        counter_ += 1;
        return mix(seed_ + counter_ * 0x9E3779B97F4A7C15ULL);
    }

    /// Uniform on [0, 1), 53-bit mantissa.
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller; draws two uniforms per pair.
    double normal();

    CounterRng substream(std::uint64_t tag) const {
        return CounterRng(mix(seed_ ^ mix(tag ^ 0x5BF0363546BB5F61ULL)));
    }

    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace mjbd
