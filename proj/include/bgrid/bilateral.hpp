#pragma once

#include <vector>

#include "bgrid/common.hpp"
#include "bgrid/image.hpp"
#include "bgrid/params.hpp"

namespace bgrid {

// Running weighted sum; denominator is the normalization term.
struct WeightedAccumulator {
    double numerator = 0.0;
    double denominator = 0.0;

    void add(double w, double v) {
        numerator += w * v;
        denominator += w;
    }
    double mean() const { return numerator / denominator; }
};

// Brute-force bilateral filter: every output pixel is the range- and
// space-weighted mean over the (2r+1)^2 window, clipped to the image and
// renormalized at borders. All arithmetic in double, rounding only at the end.
//
// The +dx/-dx contributions are accumulated pairwise so a horizontally
// mirrored input yields the exactly mirrored output.
inline Image bilateral_filter(const Image& img, const DenoiseParams& p) {
    p.validate();
    const int r = p.radius;
    const int w = img.width, h = img.height;

    std::vector<double> spatial(std::size_t(2 * r * r) + 1);
    for (std::size_t d2 = 0; d2 < spatial.size(); ++d2)
        spatial[d2] = gaussian_weight(double(d2), p.sigma_s);
    std::vector<double> range(256);
    for (int d = 0; d < 256; ++d) range[d] = gaussian_weight(double(d) * d, p.sigma_r);

    Image out(w, h);
    for (int row = 0; row < h; ++row) {
        for (int col = 0; col < w; ++col) {
            const int center = img.at(row, col);
            WeightedAccumulator acc;
            for (int dy = -r; dy <= r; ++dy) {
                int ry = row + dy;
                if (ry < 0 || ry >= h) continue;
                const int dy2 = dy * dy;
                {
                    double wgt = spatial[std::size_t(dy2)] * range[std::size_t(std::abs(center - img.at(ry, col)))];
                    acc.add(wgt, double(img.at(ry, col)));
                }
                for (int dx = 1; dx <= r; ++dx) {
                    const double sw = spatial[std::size_t(dy2 + dx * dx)];
                    double nl = 0.0, dl = 0.0, nr = 0.0, dr = 0.0;
                    if (col - dx >= 0) {
                        int v = img.at(ry, col - dx);
                        dl = sw * range[std::size_t(std::abs(center - v))];
                        nl = dl * double(v);
                    }
                    if (col + dx < w) {
                        int v = img.at(ry, col + dx);
                        dr = sw * range[std::size_t(std::abs(center - v))];
                        nr = dr * double(v);
                    }
                    acc.numerator += nl + nr;
                    acc.denominator += dl + dr;
                }
            }
            out.at(row, col) = std::uint8_t(round_intensity(acc.mean()));
        }
    }
    return out;
}

}  // namespace bgrid
