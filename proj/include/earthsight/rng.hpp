#pragma once

#include <cmath>
#include <cstdint>

namespace earthsight {

/// Seeded splitmix64 generator. The whole artifact draws randomness through
/// this class so that identical seed + config reproduces byte-identical runs
/// on any platform; std:: distributions are avoided because their sequences
/// are implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : seed_(seed), state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1).
    double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    bool bernoulli(double p) { return uniform() < p; }

    /// Uniform integer in [0, n); n must be > 0.
    std::uint64_t uniform_int(std::uint64_t n) { return next_u64() % n; }

    /// Exponential variate with the given mean.
    double exponential(double mean) {
        double u = uniform();
        return -mean * std::log1p(-u);
    }

    /// Derive an independent, reproducible substream. Forking with the same
    /// tag always yields the same stream regardless of how much the parent
    /// has been consumed.
    Rng fork(std::uint64_t tag) const {
        Rng r(seed_ ^ (0xD1B54A32D192ED03ull * (tag + 1)));
        r.next_u64();
        return r;
    }

    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_;
    std::uint64_t state_;
};

} // namespace earthsight
