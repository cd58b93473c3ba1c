#pragma once

#include <cstdint>
#include <random>

namespace formlab {

// Seeded uniform generator with an explicit bits-to-double mapping, so the
// same seed produces the same draws on every platform and standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) {
        const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
        return lo + u * (hi - lo);
    }

    // Uniform integer in [lo, hi] (inclusive), bias negligible for small ranges.
    int uniform_int(int lo, int hi) {
        return lo + static_cast<int>(uniform(0.0, static_cast<double>(hi - lo + 1)));
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace formlab
