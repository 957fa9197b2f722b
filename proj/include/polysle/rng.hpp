#pragma once

#include <cmath>
#include <cstdint>

namespace polysle {

// Reproducibility contract: every random quantity in the library is derived
// from the xoshiro256++ stream below, seeded through splitmix64. Stream
// order is part of the file-format/reporting contract:
//   * one normal per nominal SDE step, drawn in step order,
//   * each normal consumes exactly two raw 64-bit draws (Box-Muller,
//     cosine branch, no caching),
//   * ensemble member i uses path_seed(master_seed, i).

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

class Xoshiro256pp {
  public:
    explicit Xoshiro256pp(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& word : s_) word = splitmix64(sm);
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform on (0, 1]; never returns 0, so log() below is finite.
    double uniform01() { return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53; }

    double normal() {
        const double u1 = uniform01();
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::uint64_t s_[4];
};

inline std::uint64_t path_seed(std::uint64_t master, std::uint64_t index) {
    std::uint64_t state = master + 0x9E3779B97F4A7C15ull * (index + 1);
    return splitmix64(state);
}

} // namespace polysle
