#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace qtraj {

// splitmix64 output function; used to spread a root seed into independent
// per-trajectory stream seeds (counter-based, so any trajectory can be
// regenerated without touching the others).
inline std::uint64_t splitmix64_mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline std::uint64_t stream_seed(std::uint64_t root, std::uint64_t index) {
    return splitmix64_mix(root + (index + 1) * 0x9E3779B97F4A7C15ULL);
}

// mt19937_64 with hand-rolled uniform/normal so draws are identical across
// platforms (std:: distributions are implementation-defined).
class TrajectoryRng {
public:
    explicit TrajectoryRng(std::uint64_t seed) : gen_(seed) {}

    // [0, 1)
    double uniform() { return double(gen_() >> 11) * 0x1.0p-53; }

    // standard normal, Box-Muller; two uniforms per draw, no caching
    double normal() {
        double u1 = 1.0 - uniform();  // (0, 1]
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
    }

    std::uint64_t raw() { return gen_(); }

private:
    std::mt19937_64 gen_;
};

} // namespace qtraj
