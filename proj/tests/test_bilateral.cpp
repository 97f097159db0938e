#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "bgrid/bilateral.hpp"
#include "oracles.hpp"

using namespace bgrid;

namespace {

Image random_image(int w, int h, std::uint64_t seed) {
    SplitMix64 rng(seed);
    Image img(w, h);
    for (auto& p : img.pixels) p = std::uint8_t(rng.next() & 255);
    return img;
}

}  // namespace

TEST_CASE("gaussian weight") {
    CHECK(gaussian_weight(0.0, 3.0) == 1.0);
    CHECK(gaussian_weight(2.0 * 4.0 * 4.0, 4.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
    CHECK(gaussian_weight(8.0, 2.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
}

TEST_CASE("bilateral filter: constants are fixed points") {
    Image flat(12, 8, 100);
    DenoiseParams p{3, 2.0, 25.0};
    CHECK(bilateral_filter(flat, p) == flat);
}

TEST_CASE("bilateral filter: single pixel image is unchanged") {
    Image one(1, 1, 77);
    CHECK(bilateral_filter(one, DenoiseParams{4, 2.0, 30.0}) == one);
}

TEST_CASE("bilateral filter: matches a direct evaluation") {
    Image img(5, 5, 0);
    img.at(2, 2) = 255;
    DenoiseParams p{2, 1.0, 50.0};
    Image out = bilateral_filter(img, p);
    for (int row = 0; row < 5; ++row)
        for (int col = 0; col < 5; ++col)
            CHECK(int(out.at(row, col)) == oracle::bilateral_pixel(img, p, row, col));

    Image rnd = random_image(9, 7, 5);
    DenoiseParams q{3, 2.5, 20.0};
    Image out2 = bilateral_filter(rnd, q);
    for (int row = 0; row < 7; ++row)
        for (int col = 0; col < 9; ++col)
            CHECK(int(out2.at(row, col)) == oracle::bilateral_pixel(rnd, q, row, col));
}

TEST_CASE("bilateral filter: range preservation") {
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        Image img = random_image(24, 18, seed);
        auto lohi = std::minmax_element(img.pixels.begin(), img.pixels.end());
        Image out = bilateral_filter(img, DenoiseParams{2, 3.0, 40.0});
        for (auto v : out.pixels) {
            CHECK(v >= *lohi.first);
            CHECK(v <= *lohi.second);
        }
    }
}

TEST_CASE("bilateral filter: mirror equivariance") {
    Image img = random_image(21, 13, 9);
    DenoiseParams p{3, 2.0, 35.0};
    CHECK(bilateral_filter(mirror_horizontal(img), p) == mirror_horizontal(bilateral_filter(img, p)));
}

TEST_CASE("bilateral filter: huge sigma_r approaches a pure Gaussian blur") {
    Image img = random_image(16, 12, 6);
    DenoiseParams p{3, 2.0, 1e6};
    Image bf = bilateral_filter(img, p);
    Image gauss = oracle::gaussian_blur(img, 2.0, 3);
    for (std::size_t i = 0; i < bf.pixels.size(); ++i)
        CHECK(std::abs(int(bf.pixels[i]) - int(gauss.pixels[i])) <= 1);
}

TEST_CASE("weighted accumulator keeps a convex mean") {
    WeightedAccumulator acc;
    acc.add(0.5, 10.0);
    acc.add(1.5, 30.0);
    CHECK(acc.denominator == doctest::Approx(2.0));
    CHECK(acc.mean() == doctest::Approx(25.0));
}
