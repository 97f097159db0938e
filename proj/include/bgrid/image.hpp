#pragma once

#include <cctype>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "bgrid/common.hpp"

namespace bgrid {

// 8-bit grayscale image, row-major.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;

    Image() = default;
    Image(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), pixels(std::size_t(w) * std::size_t(h), fill) {}

    std::uint8_t& at(int row, int col) { return pixels[std::size_t(row) * width + col]; }
    std::uint8_t at(int row, int col) const { return pixels[std::size_t(row) * width + col]; }

    bool operator==(const Image& o) const {
        return width == o.width && height == o.height && pixels == o.pixels;
    }
    bool operator!=(const Image& o) const { return !(*this == o); }
};

struct PgmParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

// Whitespace/comment-tolerant token scan over the PGM header.
inline bool next_pgm_token(const std::vector<std::uint8_t>& bytes, std::size_t& pos,
                           std::string& tok) {
    tok.clear();
    while (pos < bytes.size()) {
        char c = char(bytes[pos]);
        if (c == '#') {
            while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        } else if (std::isspace(static_cast<unsigned char>(c))) {
            ++pos;
        } else {
            break;
        }
    }
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos])) &&
           bytes[pos] != '#') {
        tok.push_back(char(bytes[pos]));
        ++pos;
    }
    return !tok.empty();
}

inline long parse_pgm_int(const std::string& tok, const char* field) {
    if (tok.empty()) throw PgmParseError(std::string("pgm: missing ") + field);
    long v = 0;
    for (char c : tok) {
        if (!std::isdigit(static_cast<unsigned char>(c)))
            throw PgmParseError(std::string("pgm: malformed ") + field);
        v = v * 10 + (c - '0');
        if (v > 1000000000L) throw PgmParseError(std::string("pgm: malformed ") + field);
    }
    return v;
}

}  // namespace detail

// Binary PGM ("P5") reader, maxval 255 only. Comments are permitted after the
// magic, per netpbm convention.
inline Image load_pgm(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5')
        throw PgmParseError("pgm: malformed magic (expected P5)");
    std::size_t pos = 2;
    std::string tok;
    if (!detail::next_pgm_token(bytes, pos, tok))
        throw PgmParseError("pgm: missing width dimension");
    long w = detail::parse_pgm_int(tok, "width dimension");
    if (!detail::next_pgm_token(bytes, pos, tok))
        throw PgmParseError("pgm: missing height dimension");
    long h = detail::parse_pgm_int(tok, "height dimension");
    if (w < 1 || h < 1) throw PgmParseError("pgm: zero or negative dimension");
    if (!detail::next_pgm_token(bytes, pos, tok)) throw PgmParseError("pgm: missing maxval");
    long maxval = detail::parse_pgm_int(tok, "maxval");
    if (maxval != 255) throw PgmParseError("pgm: unsupported maxval (must be 255)");
    if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos])))
        throw PgmParseError("pgm: missing raster separator");
    ++pos;  // exactly one whitespace byte before the raster

    std::size_t need = std::size_t(w) * std::size_t(h);
    if (bytes.size() - pos < need) throw PgmParseError("pgm: truncated raster");
    Image img{int(w), int(h)};
    std::copy(bytes.begin() + pos, bytes.begin() + pos + need, img.pixels.begin());
    return img;
}

// Writer. Header is exactly "P5\n<w> <h>\n255\n" so load(save(x)) == x bit for bit.
inline std::vector<std::uint8_t> save_pgm(const Image& img) {
    std::string header = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) +
                         "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), img.pixels.begin(), img.pixels.end());
    return out;
}

inline Image load_pgm_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                    std::istreambuf_iterator<char>());
    return load_pgm(bytes);
}

inline void save_pgm_file(const Image& img, const std::string& path) {
    auto bytes = save_pgm(img);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path);
    f.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
    if (!f) throw std::runtime_error("write failed: " + path);
}

// Adds zero-mean Gaussian noise of standard deviation sigma, rounds
// half-away-from-zero and clamps to [0, 255]. Sampling is splitmix64 +
// Box-Muller (cosine branch), one draw per pixel, so a (image, sigma, seed)
// triple always produces the same output.
inline Image add_gaussian_noise(const Image& img, double sigma, std::uint64_t seed) {
    if (sigma < 0.0) throw std::invalid_argument("sigma must be >= 0");
    Image out(img.width, img.height);
    SplitMix64 rng(seed);
    const double two_pi = 6.283185307179586476925286766559;
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
        double u1 = 1.0 - rng.next_unit();  // (0, 1], keeps log finite
        double u2 = rng.next_unit();
        double n = sigma * std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
        out.pixels[i] = std::uint8_t(round_intensity(double(img.pixels[i]) + n));
    }
    return out;
}

inline Image mirror_horizontal(const Image& img) {
    Image out(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) out.at(y, x) = img.at(y, img.width - 1 - x);
    return out;
}

}  // namespace bgrid
