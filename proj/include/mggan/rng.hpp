#pragma once

#include <cstdint>

namespace mggan {

/// Counter-based generator: the i-th draw is a SplitMix64 finalizer applied to
/// seed + i * golden. Streams are bit-identical on every platform, and
/// split() derives statistically independent child streams.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : seed_(seed) {}

    std::uint64_t seed() const { return seed_; }
    std::uint64_t counter() const { return counter_; }

    std::uint64_t next_u64();

    /// Uniform in [0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller (two uniforms per draw, no cached spare).
    double normal();
    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    /// Index in [0, n).
    std::uint64_t below(std::uint64_t n);

    /// Child stream keyed by `stream`; does not advance this generator.
    Rng split(std::uint64_t stream) const;

private:
    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
};

std::uint64_t splitmix64(std::uint64_t x);

} // namespace mggan
