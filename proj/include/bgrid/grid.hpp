#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "bgrid/common.hpp"
#include "bgrid/image.hpp"
#include "bgrid/params.hpp"

namespace bgrid {

// ---------------------------------------------------------------------------
// Types

// Grid accumulator cell: number of projected pixels and their intensity sum.
struct GridCell {
    std::int64_t count = 0;
    std::int64_t sum = 0;
};

struct GridDims {
    int gx = 0, gy = 0, gz = 0;
    bool operator==(const GridDims& o) const { return gx == o.gx && gy == o.gy && gz == o.gz; }
};

// Dense 3D accumulator over the grid lattice. x indexes image rows / r,
// y indexes image columns / r, z indexes intensity / zscale.
struct Grid {
    GridDims dims;
    std::vector<GridCell> cells;

    Grid() = default;
    explicit Grid(GridDims d)
        : dims(d), cells(std::size_t(d.gx) * d.gy * d.gz) {}

    std::size_t index(int x, int y, int z) const {
        return (std::size_t(x) * dims.gy + y) * dims.gz + z;
    }
    GridCell& at(int x, int y, int z) { return cells[index(x, y, z)]; }
    const GridCell& at(int x, int y, int z) const { return cells[index(x, y, z)]; }

    // Neighbor fetch with zero padding outside the lattice.
    GridCell clipped(int x, int y, int z) const {
        if (x < 0 || y < 0 || z < 0 || x >= dims.gx || y >= dims.gy || z >= dims.gz) return {};
        return at(x, y, z);
    }
};

// Blurred grid entry. k is the retained denominator; the cell is empty
// (carries no data) exactly when k == 0.
struct GfCell {
    double value = 0.0;
    double k = 0.0;

    bool empty() const { return !(k > 0.0); }
};

struct BlurredGrid {
    GridDims dims;
    std::vector<GfCell> cells;

    BlurredGrid() = default;
    explicit BlurredGrid(GridDims d)
        : dims(d), cells(std::size_t(d.gx) * d.gy * d.gz) {}

    std::size_t index(int x, int y, int z) const {
        return (std::size_t(x) * dims.gy + y) * dims.gz + z;
    }
    GfCell& at(int x, int y, int z) { return cells[index(x, y, z)]; }
    const GfCell& at(int x, int y, int z) const { return cells[index(x, y, z)]; }
};

// Position of a pixel in grid space.
struct FeatureVector {
    double px = 0.0;  // row / r
    double py = 0.0;  // col / r
    double pz = 0.0;  // intensity / zscale
};

// Per-axis Gaussian weights quantized to powers of two so multiplications
// become shifts. Exponent kZeroWeight marks a weight rounded away to zero.
struct ShiftKernel {
    static constexpr int kZeroWeight = std::numeric_limits<int>::min();

    int bit_budget = 8;
    std::array<int, 3> x_exp{0, 0, 0};  // offsets -1, 0, +1
    std::array<int, 3> y_exp{0, 0, 0};
    std::array<int, 3> z_exp{0, 0, 0};

    static double weight_of(int e) { return e == kZeroWeight ? 0.0 : std::ldexp(1.0, e); }
};

enum class TiWeights { standard, paper_literal };

// ---------------------------------------------------------------------------
// Dimensions and projection

inline int z_bins(double zscale) { return int(std::floor(255.0 / zscale)); }

inline GridDims grid_dimensions(const DenoiseParams& p, int width, int height) {
    p.validate();
    if (width < 1 || height < 1) throw std::invalid_argument("image dimensions must be >= 1");
    return {height / p.radius + 2, width / p.radius + 2, z_bins(p.zscale()) + 2};
}

inline FeatureVector feature_vector(int row, int col, int intensity, const DenoiseParams& p) {
    return {double(row) / p.radius, double(col) / p.radius, double(intensity) / p.zscale()};
}

// Projects every pixel into the cell at the rounded (half-up) feature vector
// and accumulates (1, intensity). Total count and total intensity are
// conserved.
inline Grid construct_grid(const Image& img, const DenoiseParams& p) {
    Grid g(grid_dimensions(p, img.width, img.height));
    const double r = double(p.radius);
    const double zs = p.zscale();
    for (int row = 0; row < img.height; ++row) {
        int cx = round_half_up(double(row) / r);
        for (int col = 0; col < img.width; ++col) {
            int cy = round_half_up(double(col) / r);
            int l = img.at(row, col);
            int cz = round_half_up(double(l) / zs);
            GridCell& cell = g.at(cx, cy, cz);
            cell.count += 1;
            cell.sum += l;
        }
    }
    return g;
}

// ---------------------------------------------------------------------------
// Shared arithmetic kernels (used by the three-pass engine and the streaming
// engine; both must produce bit-identical results)

struct AxisWeights {
    double w[3];  // offsets -1, 0, +1
};

inline AxisWeights gf_axis_weights_float(double sigma_g) {
    double g1 = gaussian_weight(1.0, sigma_g);
    return {{g1, 1.0, g1}};
}

inline AxisWeights gf_axis_weights(const std::array<int, 3>& exps) {
    return {{ShiftKernel::weight_of(exps[0]), ShiftKernel::weight_of(exps[1]),
             ShiftKernel::weight_of(exps[2])}};
}

struct GfWeights {
    AxisWeights ax, ay, az;
};

inline GfWeights gf_weights(const DenoiseParams& p, const std::optional<ShiftKernel>& shift) {
    if (shift) return {gf_axis_weights(shift->x_exp), gf_axis_weights(shift->y_exp),
                       gf_axis_weights(shift->z_exp)};
    AxisWeights a = gf_axis_weights_float(p.sigma_g());
    return {a, a, a};
}

// Blur of one lattice point from its 3x3x3 neighborhood, numerator and
// denominator computed together. cnt/sm are indexed [ix][iy][iz] with index
// 0..2 meaning offset -1..+1. The +-1 contributions are paired before adding
// the center so axis reflection leaves the sums bit-identical.
inline GfCell blur_cell(const std::int64_t cnt[3][3][3], const std::int64_t sm[3][3][3],
                        const GfWeights& wt) {
    double nyz[3], dyz[3];
    for (int iz = 0; iz < 3; ++iz) {
        double nyl[3], dyl[3];
        for (int iy = 0; iy < 3; ++iy) {
            nyl[iy] = (wt.ax.w[0] * double(sm[0][iy][iz]) + wt.ax.w[2] * double(sm[2][iy][iz])) +
                      wt.ax.w[1] * double(sm[1][iy][iz]);
            dyl[iy] = (wt.ax.w[0] * double(cnt[0][iy][iz]) + wt.ax.w[2] * double(cnt[2][iy][iz])) +
                      wt.ax.w[1] * double(cnt[1][iy][iz]);
        }
        nyz[iz] = (wt.ay.w[0] * nyl[0] + wt.ay.w[2] * nyl[2]) + wt.ay.w[1] * nyl[1];
        dyz[iz] = (wt.ay.w[0] * dyl[0] + wt.ay.w[2] * dyl[2]) + wt.ay.w[1] * dyl[1];
    }
    double num = (wt.az.w[0] * nyz[0] + wt.az.w[2] * nyz[2]) + wt.az.w[1] * nyz[1];
    double den = (wt.az.w[0] * dyz[0] + wt.az.w[2] * dyz[2]) + wt.az.w[1] * dyz[1];

    if (!(den > 0.0)) return {};
    double v = num / den;
    if (v < 0.0) v = 0.0;
    if (v > 255.0) v = 255.0;
    return {v, den};
}

// Trilinear corner weights for one axis.
inline void ti_axis_pair(double frac, TiWeights mode, double out[2]) {
    if (mode == TiWeights::standard) {
        out[0] = 1.0 - frac;
        out[1] = frac;
    } else {
        out[0] = frac;
        out[1] = 1.0 - frac;
    }
}

// 8-corner interpolation with empty corners excluded and the remaining
// weights renormalized. Throws if no corner carries data; the projection
// guarantees at least the corner holding the pixel's own rounded cell.
inline double interpolate_corners(const GfCell c[2][2][2], const double fx[2], const double fy[2],
                                  const double fz[2]) {
    double num = 0.0, den = 0.0;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k) {
                if (c[i][j][k].empty()) continue;
                double w = (fx[i] * fy[j]) * fz[k];
                num += w * c[i][j][k].value;
                den += w;
            }
    if (!(den > 0.0)) throw std::logic_error("interpolation: all corners empty");
    return num / den;
}

// ---------------------------------------------------------------------------
// Three-pass reference engine

// Radius-1 3D Gaussian blur of the grid; out-of-range neighbors contribute
// zero. In shift mode each per-axis weight is the kernel's power of two.
inline BlurredGrid blur_grid(const Grid& g, const DenoiseParams& p,
                             const std::optional<ShiftKernel>& shift = {}) {
    const GfWeights wt = gf_weights(p, shift);
    BlurredGrid out(g.dims);
    std::int64_t cnt[3][3][3], sm[3][3][3];
    for (int x = 0; x < g.dims.gx; ++x)
        for (int y = 0; y < g.dims.gy; ++y)
            for (int z = 0; z < g.dims.gz; ++z) {
                for (int ix = 0; ix < 3; ++ix)
                    for (int iy = 0; iy < 3; ++iy)
                        for (int iz = 0; iz < 3; ++iz) {
                            GridCell cell = g.clipped(x + ix - 1, y + iy - 1, z + iz - 1);
                            cnt[ix][iy][iz] = cell.count;
                            sm[ix][iy][iz] = cell.sum;
                        }
                out.at(x, y, z) = blur_cell(cnt, sm, wt);
            }
    return out;
}

// Reads the blurred grid at each pixel's grid-space position via 8-corner
// interpolation.
inline Image slice(const Image& img, const BlurredGrid& bg, const DenoiseParams& p,
                   TiWeights weights = TiWeights::standard) {
    const int r = p.radius;
    const double zs = p.zscale();
    Image out(img.width, img.height);
    for (int row = 0; row < img.height; ++row) {
        AxisCoord ax = axis_coord(row, r);
        double fx[2];
        ti_axis_pair(ax.frac, weights, fx);
        for (int col = 0; col < img.width; ++col) {
            AxisCoord ay = axis_coord(col, r);
            ZCoord az = z_coord(img.at(row, col), zs);
            double fy[2], fz[2];
            ti_axis_pair(ay.frac, weights, fy);
            ti_axis_pair(az.frac, weights, fz);
            GfCell corners[2][2][2];
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j)
                    for (int k = 0; k < 2; ++k)
                        corners[i][j][k] = bg.at(ax.cell + i, ay.cell + j, az.cell + k);
            out.at(row, col) =
                std::uint8_t(round_intensity(interpolate_corners(corners, fx, fy, fz)));
        }
    }
    return out;
}

// Public entry point of the three-pass engine: construct, blur, slice.
inline Image bg_denoise(const Image& img, const DenoiseParams& p,
                        const std::optional<ShiftKernel>& shift = {},
                        TiWeights weights = TiWeights::standard) {
    return slice(img, blur_grid(construct_grid(img, p), p, shift), p, weights);
}

// ---------------------------------------------------------------------------
// Shift quantization and hardware cell widths

// Per-axis Gaussian weights mapped to the nearest power of two; exponents
// below -bit_budget become the zero-weight marker, the center stays 2^0.
inline ShiftKernel quantize_kernel_pow2(double sigma_g, int bit_budget = 8) {
    if (!(sigma_g > 0.0)) throw std::invalid_argument("sigma_g must be > 0");
    if (bit_budget < 1) throw std::invalid_argument("bit_budget must be >= 1");
    double g1 = gaussian_weight(1.0, sigma_g);
    int e = int(std::lround(std::log2(g1)));
    int side;
    if (e < -bit_budget)
        side = ShiftKernel::kZeroWeight;
    else
        side = e > 0 ? 0 : e;
    ShiftKernel k;
    k.bit_budget = bit_budget;
    k.x_exp = k.y_exp = k.z_exp = {side, 0, side};
    return k;
}

// Bit widths a hardware cell needs for a given window radius.
struct CellWidths {
    int count_bits = 0;
    int sum_bits = 0;
};

inline CellWidths cell_bit_widths(int radius) {
    std::uint64_t maxcount = std::uint64_t(radius) * radius;
    std::uint64_t maxsum = 255ull * maxcount;
    return {int(std::bit_width(maxcount)), int(std::bit_width(maxsum))};
}

}  // namespace bgrid
