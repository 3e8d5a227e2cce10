#pragma once

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <random>

namespace trajcast {

// Deterministic RNG used everywhere sampling happens. The mt19937_64
// engine sequence is specified by the standard, and the uniform/normal
// transforms below are hand-rolled, so identical seeds give identical
// streams on every platform and the full state serializes into
// checkpoints for exact training resume.
class Rng {
public:
    Rng() : Rng(0) {}
    explicit Rng(uint64_t seed) : eng_(seed) {}

    uint64_t next_u64() { return eng_(); }

    // uniform in [0, 1) with 53 random bits
    double uniform() {
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Marsaglia polar method, second deviate discarded so a call consumes
    // a deterministic amount of engine state regardless of history.
    double normal() {
        for (;;) {
            const double u = 2.0 * uniform() - 1.0;
            const double v = 2.0 * uniform() - 1.0;
            const double s = u * u + v * v;
            if (s > 0.0 && s < 1.0) {
                return u * std::sqrt(-2.0 * std::log(s) / s);
            }
        }
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    // integer in [0, n)
    uint64_t below(uint64_t n) {
        // multiply-shift; bias is negligible for the n used here (< 2^32)
        return static_cast<uint64_t>((static_cast<__uint128_t>(eng_()) * n) >> 64);
    }

    // weighted choice over probabilities summing to ~1
    int categorical(const double* probs, int n) {
        double u = uniform();
        for (int i = 0; i < n; ++i) {
            u -= probs[i];
            if (u < 0.0) return i;
        }
        return n - 1;
    }

    // fork a child stream; mixes the parent stream with a salt
    Rng fork(uint64_t salt) {
        return Rng(eng_() ^ (salt * 0x9e3779b97f4a7c15ULL + 0x2545f4914f6cdd1dULL));
    }

    void save(std::ostream& os) const;
    void load(std::istream& is);

private:
    std::mt19937_64 eng_;
};

}  // namespace trajcast
