#pragma once

#include <stdexcept>
#include <string>

namespace bgrid {

// Filter parameters: window radius r on the input image, spatial and range
// standard deviations. sigma_g = sigma_s / r is the grid-space deviation and
// zscale = r * sigma_r / sigma_s is the intensity-to-grid scale; the same
// double expression is used everywhere so every code path sees identical
// values.
struct DenoiseParams {
    int radius = 1;
    double sigma_s = 1.0;
    double sigma_r = 1.0;

    double sigma_g() const { return sigma_s / double(radius); }
    double zscale() const { return double(radius) * sigma_r / sigma_s; }

    void validate() const {
        if (radius < 1) throw std::invalid_argument("radius must be >= 1");
        if (!(sigma_s > 0.0)) throw std::invalid_argument("sigma-s must be > 0");
        if (!(sigma_r > 0.0)) throw std::invalid_argument("sigma-r must be > 0");
    }
};

}  // namespace bgrid
