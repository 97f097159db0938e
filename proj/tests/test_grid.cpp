#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "bgrid/grid.hpp"
#include "oracles.hpp"

using namespace bgrid;

namespace {

Image random_image(int w, int h, std::uint64_t seed) {
    SplitMix64 rng(seed);
    Image img(w, h);
    for (auto& p : img.pixels) p = std::uint8_t(rng.next() & 255);
    return img;
}

Image mirror_both(const Image& img) { return mirror_horizontal(img); }

}  // namespace

TEST_CASE("grid dimensions") {
    CHECK(grid_dimensions(DenoiseParams{7, 4.0, 50.0}, 1920, 1080) == GridDims{156, 276, 4});
    CHECK(grid_dimensions(DenoiseParams{1, 5.0, 5.0}, 4, 4) == GridDims{6, 6, 257});
    CHECK(grid_dimensions(DenoiseParams{4, 8.0, 70.0}, 1920, 1080) == GridDims{272, 482, 9});
    // an intensity scale beyond 255 degenerates to two z slabs, legally
    CHECK(grid_dimensions(DenoiseParams{2, 1.0, 200.0}, 16, 16).gz == 2);
    CHECK_THROWS_AS(grid_dimensions(DenoiseParams{0, 1.0, 1.0}, 8, 8), std::invalid_argument);
    CHECK_THROWS_AS(grid_dimensions(DenoiseParams{2, 1.0, 1.0}, 0, 8), std::invalid_argument);
}

TEST_CASE("feature vector") {
    FeatureVector o = feature_vector(0, 0, 0, DenoiseParams{5, 2.0, 30.0});
    CHECK(o.px == 0.0);
    CHECK(o.py == 0.0);
    CHECK(o.pz == 0.0);

    FeatureVector a = feature_vector(7, 14, 175, DenoiseParams{7, 4.0, 50.0});
    CHECK(a.px == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(a.py == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(a.pz == doctest::Approx(2.0).epsilon(1e-15));  // 175 / 87.5

    FeatureVector b = feature_vector(3, 5, 128, DenoiseParams{2, 2.0, 64.0});
    CHECK(b.px == doctest::Approx(1.5).epsilon(1e-15));
    CHECK(b.py == doctest::Approx(2.5).epsilon(1e-15));
    CHECK(b.pz == doctest::Approx(2.0).epsilon(1e-15));  // 128 / (2 * 64 / 2)
}

TEST_CASE("construct grid: single pixel") {
    Image one(1, 1, 0);
    Grid g = construct_grid(one, DenoiseParams{1, 3.0, 3.0});
    CHECK(g.at(0, 0, 0).count == 1);
    CHECK(g.at(0, 0, 0).sum == 0);
    long total = 0;
    for (auto& c : g.cells) total += c.count;
    CHECK(total == 1);
}

TEST_CASE("construct grid: 2x2 constant spreads by half-up rounding") {
    Image img(2, 2, 100);
    DenoiseParams p{2, 2.0, 50.0};
    Grid g = construct_grid(img, p);
    // coordinates 0 and 0.5 round to cells 0 and 1; intensity 100/50 = 2
    for (int x : {0, 1})
        for (int y : {0, 1}) {
            CHECK(g.at(x, y, 2).count == 1);
            CHECK(g.at(x, y, 2).sum == 100);
        }
    long count = 0, sum = 0;
    for (auto& c : g.cells) {
        count += c.count;
        sum += c.sum;
    }
    CHECK(count == 4);
    CHECK(sum == 400);
}

TEST_CASE("construct grid: mass conservation") {
    Image img = random_image(32, 24, 10);
    Grid g = construct_grid(img, DenoiseParams{3, 2.0, 30.0});
    long count = 0, sum = 0, pixel_sum = 0;
    for (auto& c : g.cells) {
        count += c.count;
        sum += c.sum;
        CHECK(c.sum <= 255 * c.count);
        if (c.count == 0) CHECK(c.sum == 0);
    }
    for (auto v : img.pixels) pixel_sum += v;
    CHECK(count == 32 * 24);
    CHECK(sum == pixel_sum);
}

TEST_CASE("blur grid: one occupied cell normalizes away the weights") {
    DenoiseParams p{2, 2.0, 60.0};
    Grid g(grid_dimensions(p, 8, 8));
    g.at(2, 2, 1) = {1, 200};
    SUBCASE("float weights") {
        BlurredGrid bg = blur_grid(g, p);
        for (int x = 1; x <= 3; ++x)
            for (int y = 1; y <= 3; ++y)
                for (int z = 0; z <= 2; ++z) {
                    CHECK_FALSE(bg.at(x, y, z).empty());
                    CHECK(bg.at(x, y, z).value == doctest::Approx(200.0).epsilon(1e-12));
                }
        CHECK(bg.at(0, 0, 0).empty());
    }
    SUBCASE("power-of-two weights divide out exactly") {
        BlurredGrid bg = blur_grid(g, p, quantize_kernel_pow2(p.sigma_g(), 8));
        CHECK(bg.at(2, 2, 1).value == 200.0);
        if (!bg.at(1, 2, 1).empty()) CHECK(bg.at(1, 2, 1).value == 200.0);
    }
}

TEST_CASE("blur grid: uniform occupancy keeps the constant") {
    DenoiseParams p{1, 1.0, 1.0};
    GridDims d{4, 4, 4};
    Grid g(d);
    for (auto& c : g.cells) c = {1, 100};
    BlurredGrid bg = blur_grid(g, p);
    for (auto& c : bg.cells) {
        CHECK_FALSE(c.empty());
        CHECK(c.value == doctest::Approx(100.0).epsilon(1e-12));
    }
}

TEST_CASE("blur grid: matches a 27-term direct sum") {
    DenoiseParams p{2, 2.0, 60.0};  // sigma_g = 1
    Grid g(GridDims{3, 3, 3});
    g.at(0, 1, 1) = {2, 300};
    g.at(2, 1, 1) = {1, 40};
    BlurredGrid bg = blur_grid(g, p);

    double num = 0.0, den = 0.0;
    for (int dx = -1; dx <= 1; ++dx)
        for (int dy = -1; dy <= 1; ++dy)
            for (int dz = -1; dz <= 1; ++dz) {
                int x = 1 + dx, y = 1 + dy, z = 1 + dz;
                double w = std::exp(-(double(dx) * dx + double(dy) * dy + double(dz) * dz) / 2.0);
                num += w * double(g.at(x, y, z).sum);
                den += w * double(g.at(x, y, z).count);
            }
    CHECK(bg.at(1, 1, 1).value == doctest::Approx(num / den).epsilon(1e-12));
    CHECK(bg.at(1, 1, 1).k == doctest::Approx(den).epsilon(1e-12));
}

TEST_CASE("blur grid: giant sigma_g averages a 2x2x2 lattice to the global mean") {
    // h, w < r and zscale > 255 collapse the grid to 2 cells per axis, where
    // every neighborhood covers everything.
    DenoiseParams p{10, 1e10, 3e11};  // zscale = 300, sigma_g = 1e9
    Image img(8, 8);
    SplitMix64 rng(3);
    long total = 0;
    for (auto& px : img.pixels) {
        px = std::uint8_t(rng.next() & 255);
        total += px;
    }
    double mean = double(total) / double(img.pixels.size());
    BlurredGrid bg = blur_grid(construct_grid(img, p), p);
    for (auto& c : bg.cells)
        if (!c.empty()) CHECK(c.value == doctest::Approx(mean).epsilon(1e-9));
}

TEST_CASE("quantize kernel: flat, halving, and vanishing weights") {
    ShiftKernel flat = quantize_kernel_pow2(1e9, 8);
    CHECK(flat.x_exp == std::array<int, 3>{0, 0, 0});

    ShiftKernel half = quantize_kernel_pow2(1.0, 8);  // exp(-0.5) ~ 0.6065 -> 2^-1
    CHECK(half.x_exp[0] == -1);
    CHECK(half.x_exp[1] == 0);
    CHECK(half.y_exp[2] == -1);

    ShiftKernel zero = quantize_kernel_pow2(0.2, 8);  // exp(-12.5) -> exponent -18
    CHECK(zero.z_exp[0] == ShiftKernel::kZeroWeight);
    CHECK(zero.z_exp[1] == 0);
    CHECK(ShiftKernel::weight_of(zero.z_exp[0]) == 0.0);
}

TEST_CASE("slice: constant corners, vertex hits, and the dead-center average") {
    SUBCASE("all corners equal") {
        DenoiseParams p{1, 2.0, 30.0};
        Image img(1, 1, 10);
        BlurredGrid bg(grid_dimensions(p, 1, 1));
        for (auto& c : bg.cells) c = {100.0, 1.0};
        CHECK(slice(img, bg, p).at(0, 0) == 100);
    }
    SUBCASE("a vertex hit reads exactly one corner") {
        DenoiseParams p{1, 2.0, 30.0};
        Image img(1, 1, 0);
        BlurredGrid bg(grid_dimensions(p, 1, 1));
        for (auto& c : bg.cells) c = {7.0, 1.0};
        bg.at(0, 0, 0) = {42.0, 1.0};
        CHECK(slice(img, bg, p).at(0, 0) == 42);
        // the literal coefficient convention sends the hit to the far corner
        bg.at(1, 1, 1) = {13.0, 1.0};
        CHECK(slice(img, bg, p, TiWeights::paper_literal).at(0, 0) == 13);
    }
    SUBCASE("center of the cube averages alternating corners to 128") {
        DenoiseParams p{2, 2.0, 128.0};  // zscale = 128
        Image img(2, 2, 64);             // pixel (1,1): fractions (0.5, 0.5, 0.5)
        BlurredGrid bg(grid_dimensions(p, 2, 2));
        for (auto& c : bg.cells) c = {0.0, 1.0};
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                for (int k = 0; k < 2; ++k) bg.at(i, j, k) = {(i + j + k) % 2 ? 255.0 : 0.0, 1.0};
        CHECK(slice(img, bg, p).at(1, 1) == 128);
    }
    SUBCASE("empty corners renormalize") {
        DenoiseParams p{2, 2.0, 128.0};
        Image img(2, 2, 64);
        BlurredGrid bg(grid_dimensions(p, 2, 2));
        for (auto& c : bg.cells) c = {200.0, 1.0};
        bg.at(1, 1, 1) = {};  // empty, excluded, rest renormalizes to 200
        CHECK(slice(img, bg, p).at(1, 1) == 200);
    }
}

TEST_CASE("bg denoise: constants and single pixels are fixed points") {
    Image flat(16, 12, 73);
    DenoiseParams p{3, 2.0, 40.0};
    CHECK(bg_denoise(flat, p) == flat);
    Image one(1, 1, 201);
    CHECK(bg_denoise(one, DenoiseParams{2, 2.0, 50.0}) == one);
}

TEST_CASE("bg denoise: agrees with the direct grid-space oracle within one level") {
    struct Cfg {
        int w, h, r;
        double ss, sr;
        std::uint64_t seed;
    };
    for (Cfg c : {Cfg{16, 16, 2, 2.0, 50.0, 1}, Cfg{24, 18, 3, 3.0, 30.0, 2},
                  Cfg{32, 32, 4, 2.0, 70.0, 3}, Cfg{20, 25, 1, 1.5, 25.0, 4}}) {
        Image img = random_image(c.w, c.h, c.seed);
        DenoiseParams p{c.r, c.ss, c.sr};
        Image got = bg_denoise(img, p);
        Image want = oracle::grid_denoise(img, p);
        for (std::size_t i = 0; i < got.pixels.size(); ++i)
            CHECK(std::abs(int(got.pixels[i]) - int(want.pixels[i])) <= 1);
    }
}

TEST_CASE("bg denoise: range preservation") {
    for (std::uint64_t seed : {11ull, 12ull}) {
        Image img = random_image(30, 22, seed);
        auto lohi = std::minmax_element(img.pixels.begin(), img.pixels.end());
        for (bool shift : {false, true}) {
            DenoiseParams p{3, 3.0, 45.0};
            std::optional<ShiftKernel> mode;
            if (shift) mode = quantize_kernel_pow2(p.sigma_g(), 8);
            Image out = bg_denoise(img, p, mode);
            for (auto v : out.pixels) {
                CHECK(v >= *lohi.first);
                CHECK(v <= *lohi.second);
            }
        }
    }
}

TEST_CASE("blurred grid values stay inside the image range") {
    Image img = random_image(26, 19, 21);
    auto lohi = std::minmax_element(img.pixels.begin(), img.pixels.end());
    DenoiseParams p{2, 2.0, 35.0};
    BlurredGrid bg = blur_grid(construct_grid(img, p), p);
    for (auto& c : bg.cells)
        if (!c.empty()) {
            CHECK(c.value >= double(*lohi.first) - 1e-9);
            CHECK(c.value <= double(*lohi.second) + 1e-9);
        }
}

TEST_CASE("shift mode equals float mode when the weights are already powers of two") {
    Image img = random_image(20, 16, 8);
    // sigma_g so large the float weights are exactly 1, zscale still 50
    DenoiseParams p{2, 2e9, 5e10};
    CHECK(gaussian_weight(1.0, p.sigma_g()) == 1.0);
    Image f = bg_denoise(img, p);
    Image s = bg_denoise(img, p, quantize_kernel_pow2(p.sigma_g(), 8));
    CHECK(f == s);
}

TEST_CASE("grid construction mirrors for even radii on block-aligned sizes") {
    const int r = 4;
    Image img = random_image(6 * r, 4 * r, 14);
    DenoiseParams p{r, 3.0, 40.0};
    Grid g = construct_grid(img, p);
    Grid gm = construct_grid(mirror_both(img), p);
    int cmax = (2 * (img.width - 1) + r) / (2 * r);  // occupied column range
    for (int x = 0; x < g.dims.gx; ++x)
        for (int y = 0; y <= cmax; ++y)
            for (int z = 0; z < g.dims.gz; ++z) {
                CHECK(gm.at(x, y, z).count == g.at(x, cmax - y, z).count);
                CHECK(gm.at(x, y, z).sum == g.at(x, cmax - y, z).sum);
            }
}

TEST_CASE("full mirror equivariance at radius one") {
    Image img = random_image(23, 11, 15);
    DenoiseParams p{1, 1.5, 30.0};
    CHECK(bg_denoise(mirror_horizontal(img), p) == mirror_horizontal(bg_denoise(img, p)));
}

TEST_CASE("hardware cell widths") {
    CHECK(cell_bit_widths(1).count_bits == 1);
    CHECK(cell_bit_widths(1).sum_bits == 8);
    CHECK(cell_bit_widths(7).count_bits == 6);   // ceil(log2(49 + 1))
    CHECK(cell_bit_widths(7).sum_bits == 14);    // ceil(log2(255 * 49 + 1))
    CHECK(cell_bit_widths(15).count_bits == 8);
}
