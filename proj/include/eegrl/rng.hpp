#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace eegrl {

// Seedable RNG with hand-rolled distributions so that streams are
// bit-reproducible across standard library implementations.
class Rng {
  public:
    explicit Rng(uint64_t seed) : gen_(seed), seed_mix_(seed) {}

    uint64_t bits() { return gen_(); }

    // uniform in [0,1), 53-bit mantissa
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform integer in [0, n), rejection sampled (no modulo bias)
    int uniform_int(int n) {
        const uint64_t span = static_cast<uint64_t>(n);
        const uint64_t limit = UINT64_MAX - UINT64_MAX % span;
        uint64_t x;
        do {
            x = gen_();
        } while (x >= limit);
        return static_cast<int>(x % span);
    }

    // Box-Muller, consumes two uniforms per pair
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    // Independent substream derived from a label (splitmix64 mix).
    Rng fork(uint64_t label) const {
        uint64_t z = seed_mix_ + 0x9E3779B97F4A7C15ULL * (label + 1);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return Rng(z ^ (z >> 31));
    }

  private:
    std::mt19937_64 gen_;
    uint64_t seed_mix_ = 0;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace eegrl
