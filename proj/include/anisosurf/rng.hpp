#pragma once

#include <cstdint>
#include <cmath>
#include <random>

namespace anisosurf {

// splitmix64 step; used to derive well-separated substream seeds from
// (seed, stream_id) pairs so parallel loops stay bit-reproducible.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t stream_id) {
    std::uint64_t s = seed;
    std::uint64_t a = splitmix64(s);
    s = a ^ (stream_id * 0x9e3779b97f4a7c15ULL + 0x2545f4914f6cdd1dULL);
    return splitmix64(s);
}

// Deterministic scalar RNG. Gaussian draws use Box-Muller on explicit
// uniforms instead of std::normal_distribution, whose output sequence is
// implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}
    Rng(std::uint64_t seed, std::uint64_t stream_id) : eng_(substream_seed(seed, stream_id)) {}

    // uniform on (0,1)
    double uniform() {
        // 53-bit mantissa; never returns exactly 0
        return (static_cast<double>(eng_() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    // Knuth's multiplicative method, split for large means to avoid
    // exp(-mean) underflow.
    std::uint64_t poisson(double mean) {
        if (mean <= 0.0) return 0;
        if (mean > 30.0) {
            const double half = mean * 0.5;
            return poisson(half) + poisson(mean - half);
        }
        const double limit = std::exp(-mean);
        double prod = 1.0;
        std::uint64_t n = 0;
        do {
            prod *= uniform();
            ++n;
        } while (prod > limit);
        return n - 1;
    }

    std::uint64_t next_u64() { return eng_(); }

    // integer in [0, n)
    std::uint64_t below(std::uint64_t n) {
        // modulo bias is negligible for the n used here (grid sizes)
        return eng_() % n;
    }

private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace anisosurf
