#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "bgrid/common.hpp"
#include "bgrid/image.hpp"

namespace bgrid {

namespace detail {

// Smoothly interpolated lattice noise at the given cell size.
inline std::vector<double> value_noise(int w, int h, int cell, SplitMix64& rng) {
    int gw = w / cell + 2, gh = h / cell + 2;
    std::vector<double> lattice(std::size_t(gw) * gh);
    for (auto& v : lattice) v = rng.next_unit() * 2.0 - 1.0;
    std::vector<double> out(std::size_t(w) * h);
    auto smooth = [](double t) { return t * t * (3.0 - 2.0 * t); };
    for (int y = 0; y < h; ++y) {
        int cy = y / cell;
        double fy = smooth(double(y % cell) / cell);
        for (int x = 0; x < w; ++x) {
            int cx = x / cell;
            double fx = smooth(double(x % cell) / cell);
            double a = lattice[std::size_t(cy) * gw + cx];
            double b = lattice[std::size_t(cy) * gw + cx + 1];
            double c = lattice[std::size_t(cy + 1) * gw + cx];
            double d = lattice[std::size_t(cy + 1) * gw + cx + 1];
            out[std::size_t(y) * w + x] =
                (a * (1 - fx) + b * fx) * (1 - fy) + (c * (1 - fx) + d * fx) * fy;
        }
    }
    return out;
}

}  // namespace detail

// Deterministic piecewise-smooth scene with hard-edged shapes over layered
// noise; serves as the evaluation image where no photograph is available.
inline Image synthetic_scene(int w, int h, std::uint64_t seed) {
    SplitMix64 rng(seed);
    auto coarse = detail::value_noise(w, h, std::max(8, w / 8), rng);
    auto medium = detail::value_noise(w, h, std::max(4, w / 32), rng);
    auto fine = detail::value_noise(w, h, std::max(2, w / 128), rng);

    std::vector<double> base(std::size_t(w) * h);
    for (std::size_t i = 0; i < base.size(); ++i)
        base[i] = 120.0 + 55.0 * coarse[i] + 18.0 * medium[i] + 5.0 * fine[i];

    // hard-edged ellipses and bars with distinct grays
    struct Shape {
        double cx, cy, rx, ry, gray;
        bool bar;
    };
    std::vector<Shape> shapes;
    for (int i = 0; i < 7; ++i) {
        Shape s;
        s.cx = rng.next_unit() * w;
        s.cy = rng.next_unit() * h;
        s.rx = (0.04 + 0.10 * rng.next_unit()) * w;
        s.ry = (0.04 + 0.10 * rng.next_unit()) * h;
        s.gray = 30.0 + 190.0 * rng.next_unit();
        s.bar = (rng.next() & 1) != 0;
        shapes.push_back(s);
    }

    Image img(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double v = base[std::size_t(y) * w + x];
            for (const Shape& s : shapes) {
                bool inside;
                if (s.bar) {
                    inside = std::abs(x - s.cx) < s.rx * 0.5 && std::abs(y - s.cy) < s.ry;
                } else {
                    double dx = (x - s.cx) / s.rx, dy = (y - s.cy) / s.ry;
                    inside = dx * dx + dy * dy < 1.0;
                }
                if (inside) v = s.gray + 6.0 * fine[std::size_t(y) * w + x];
            }
            img.at(y, x) = std::uint8_t(round_intensity(v));
        }
    return img;
}

}  // namespace bgrid
