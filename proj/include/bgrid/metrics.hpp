#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "bgrid/image.hpp"

namespace bgrid {

// SSIM stabilizers and window; the window is uniform (unweighted) and only
// fully interior positions contribute.
struct MssimConfig {
    double c1 = (0.01 * 255.0) * (0.01 * 255.0);
    double c2 = (0.03 * 255.0) * (0.03 * 255.0);
    int window = 7;
};

namespace detail {

// Summed-area table in exact integer arithmetic; keeps window statistics
// bit-stable regardless of traversal order.
inline std::vector<std::uint64_t> integral(const Image& a, const Image& b, bool cross_b) {
    const int w = a.width, h = a.height;
    std::vector<std::uint64_t> s(std::size_t(w + 1) * (h + 1), 0);
    for (int y = 0; y < h; ++y) {
        std::uint64_t row = 0;
        for (int x = 0; x < w; ++x) {
            std::uint64_t va = a.at(y, x);
            row += cross_b ? va * std::uint64_t(b.at(y, x)) : va;
            s[std::size_t(y + 1) * (w + 1) + (x + 1)] = s[std::size_t(y) * (w + 1) + (x + 1)] + row;
        }
    }
    return s;
}

inline std::uint64_t box(const std::vector<std::uint64_t>& s, int stride, int x0, int y0, int n) {
    return s[std::size_t(y0 + n) * stride + (x0 + n)] - s[std::size_t(y0) * stride + (x0 + n)] -
           s[std::size_t(y0 + n) * stride + x0] + s[std::size_t(y0) * stride + x0];
}

}  // namespace detail

// Mean SSIM over all fully interior window positions, biased (divide-by-N)
// variance. Identical images score exactly 1.
inline double mssim(const Image& a, const Image& b, const MssimConfig& cfg = {}) {
    if (a.width != b.width || a.height != b.height)
        throw std::invalid_argument("mssim: image dimensions differ");
    const int n = cfg.window;
    if (n < 1 || n % 2 == 0) throw std::invalid_argument("mssim: window side must be odd");
    if (a.width < n || a.height < n)
        throw std::invalid_argument("mssim: images smaller than the window");

    auto sa = detail::integral(a, a, false);
    auto sb = detail::integral(b, b, false);
    auto saa = detail::integral(a, a, true);
    auto sbb = detail::integral(b, b, true);
    auto sab = detail::integral(a, b, true);

    const int stride = a.width + 1;
    const double cells = double(n) * n;
    double total = 0.0;
    long windows = 0;
    for (int y0 = 0; y0 + n <= a.height; ++y0)
        for (int x0 = 0; x0 + n <= a.width; ++x0) {
            double mu_a = double(detail::box(sa, stride, x0, y0, n)) / cells;
            double mu_b = double(detail::box(sb, stride, x0, y0, n)) / cells;
            double var_a = double(detail::box(saa, stride, x0, y0, n)) / cells - mu_a * mu_a;
            double var_b = double(detail::box(sbb, stride, x0, y0, n)) / cells - mu_b * mu_b;
            double cov = double(detail::box(sab, stride, x0, y0, n)) / cells - mu_a * mu_b;
            double num = (2.0 * mu_a * mu_b + cfg.c1) * (2.0 * cov + cfg.c2);
            double den = (mu_a * mu_a + mu_b * mu_b + cfg.c1) * (var_a + var_b + cfg.c2);
            total += num / den;
            windows += 1;
        }
    return total / double(windows);
}

// 10 log10(255^2 / MSE); identical images report +infinity.
inline double psnr(const Image& a, const Image& b) {
    if (a.width != b.width || a.height != b.height)
        throw std::invalid_argument("psnr: image dimensions differ");
    std::uint64_t sse = 0;
    for (std::size_t i = 0; i < a.pixels.size(); ++i) {
        std::int64_t d = std::int64_t(a.pixels[i]) - std::int64_t(b.pixels[i]);
        sse += std::uint64_t(d * d);
    }
    if (sse == 0) return std::numeric_limits<double>::infinity();
    double mse = double(sse) / double(a.pixels.size());
    return 10.0 * std::log10(255.0 * 255.0 / mse);
}

}  // namespace bgrid
