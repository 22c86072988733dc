#ifndef HILL_RNG_HPP
#define HILL_RNG_HPP

#include <cstdint>
#include <random>

namespace hill {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Deterministic generator with independent substreams: (seed, stream) pairs
// give reproducible, decorrelated sequences on any platform. Uniform doubles
// are produced by explicit bit mapping, not std distributions, so results are
// identical across standard libraries.
class Rng {
  public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) {
        std::uint64_t s = seed ^ (0xD1B54A32D192ED03ULL * (stream + 1));
        std::seed_seq seq{static_cast<unsigned>(splitmix64(s)),
                          static_cast<unsigned>(splitmix64(s) >> 32),
                          static_cast<unsigned>(splitmix64(s)),
                          static_cast<unsigned>(splitmix64(s) >> 32)};
        gen_.seed(seq);
    }

    std::uint64_t next_u64() { return gen_(); }

    // uniform in [0, 1)
    double unit() { return (next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * unit(); }

    // standard normal via Box-Muller (deterministic given the stream)
    double normal() {
        double u1 = unit(), u2 = unit();
        while (u1 == 0.0) u1 = unit();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    int uniform_int(int lo, int hi) {  // inclusive
        return lo + static_cast<int>(next_u64() % static_cast<std::uint64_t>(hi - lo + 1));
    }

  private:
    std::mt19937_64 gen_;
};

}  // namespace hill

#endif
