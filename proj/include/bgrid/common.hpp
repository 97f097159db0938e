#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace bgrid {

// splitmix64: 64-bit counter-based generator. All randomness in the library
// (noise injection, synthetic scenes, test data) goes through this so results
// are reproducible from a seed.
struct SplitMix64 {
    std::uint64_t state = 0;

    explicit SplitMix64(std::uint64_t seed) : state(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // uniform double in [0, 1)
    double next_unit() { return double(next() >> 11) * 0x1.0p-53; }

    // uniform integer in [lo, hi]
    std::uint64_t next_range(std::uint64_t lo, std::uint64_t hi) {
        return lo + next() % (hi - lo + 1);
    }
};

// Rounding operator used for grid projection, the z lookup table, and final
// intensity rounding: round-half-up on nonnegative reals.
inline int round_half_up(double x) { return int(std::floor(x + 0.5)); }

// round-half-away-from-zero (matches round_half_up on nonnegative input)
inline long round_half_away(double x) {
    return x >= 0.0 ? long(std::floor(x + 0.5)) : long(std::ceil(x - 0.5));
}

inline int clamp_intensity(long v) {
    if (v < 0) return 0;
    if (v > 255) return 255;
    return int(v);
}

inline int round_intensity(double v) { return clamp_intensity(round_half_away(v)); }

// Unnormalized Gaussian; the constant factor cancels in every use.
inline double gaussian_weight(double d2, double sigma) {
    return std::exp(-d2 / (2.0 * sigma * sigma));
}

// Split of a pixel coordinate into grid cell and interpolation fraction.
// frac is computed as (pixel mod r)/r, the exact decomposition of pixel/r;
// both engines must use this same expression.
struct AxisCoord {
    int cell;
    double frac;
};

inline AxisCoord axis_coord(int pixel, int r) {
    return {pixel / r, double(pixel % r) / double(r)};
}

struct ZCoord {
    int cell;
    double frac;
};

inline ZCoord z_coord(int intensity, double zscale) {
    double pz = double(intensity) / zscale;
    int zi = int(std::floor(pz));
    return {zi, pz - double(zi)};
}

inline int ceil_half(int r) { return (r + 1) / 2; }

}  // namespace bgrid
