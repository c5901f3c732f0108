#pragma once

// Seeded RNG with an explicit bits-to-double mapping. The standard
// distributions are implementation-defined, which would break the
// byte-determinism guarantees, so uniforms are mapped by hand.

#include <cstdint>
#include <random>

namespace mdlab {

class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    // Uniform in [0, 1) with 53 random bits.
    double uniform01() { return (gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Uniform in [-1, 1].
    double symmetric() { return 2.0 * uniform01() - 1.0; }

    uint64_t bits() { return gen_(); }

private:
    std::mt19937_64 gen_;
};

} // namespace mdlab
