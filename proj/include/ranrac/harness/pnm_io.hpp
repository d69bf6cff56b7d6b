#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "ranrac/core/errors.hpp"
#include "ranrac/core/types.hpp"

namespace ranrac {

/// 8-bit level of a channel value; the only place colours are quantised.
[[nodiscard]] inline std::uint8_t to_byte(double v, const ColorSpace& space) noexcept {
    const double t = (v - space.low) / space.span() * 255.0;
    return static_cast<std::uint8_t>(std::clamp<long>(std::lround(t), 0, 255));
}

[[nodiscard]] inline double from_byte(std::uint8_t b, const ColorSpace& space) noexcept {
    return space.low + space.span() * (static_cast<double>(b) / 255.0);
}

/// Snaps a colour onto the 8-bit grid, so a PPM write/read round trip is exact.
[[nodiscard]] inline Color quantize(const Color& c, const ColorSpace& space) noexcept {
    return {from_byte(to_byte(c[0], space), space), from_byte(to_byte(c[1], space), space),
            from_byte(to_byte(c[2], space), space)};
}

inline void quantize_in_place(ImageRaster& img, const ColorSpace& space) {
    for (auto& p : img.pixels) p = quantize(p, space);
}

namespace detail {

struct PnmHeader {
    std::string magic;
    int width = 0;
    int height = 0;
    int maxval = 0;
};

inline PnmHeader read_pnm_header(std::istream& in, const std::string& path) {
    auto token = [&]() {
        std::string t;
        int c = in.get();
        for (;;) {
            while (c != EOF && std::isspace(c)) c = in.get();
            if (c == '#') {
                while (c != EOF && c != '\n') c = in.get();
                continue;
            }
            break;
        }
        while (c != EOF && !std::isspace(c)) {
            t.push_back(static_cast<char>(c));
            c = in.get();
        }
        // exactly one whitespace byte separates the header from the raster
        return t;
    };
    PnmHeader h;
    h.magic = token();
    try {
        h.width = std::stoi(token());
        h.height = std::stoi(token());
        h.maxval = std::stoi(token());
    } catch (const std::exception&) {
        throw ConfigError("malformed PNM header in " + path);
    }
    if (h.width <= 0 || h.height <= 0 || h.maxval <= 0 || h.maxval > 255)
        throw ConfigError("unsupported PNM geometry or maxval in " + path);
    return h;
}

inline std::vector<std::uint8_t> read_bytes(std::istream& in, std::size_t n, const std::string& path) {
    std::vector<std::uint8_t> buf(n);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n) throw ConfigError("truncated raster data in " + path);
    return buf;
}

}  // namespace detail

/// Binary PPM (P6, maxval 255).
inline void write_ppm(const std::filesystem::path& path, const ImageRaster& img, const ColorSpace& space) {
    img.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open " + path.string() + " for writing");
    out << "P6\n" << img.width << ' ' << img.height << "\n255\n";
    std::vector<std::uint8_t> buf;
    buf.reserve(img.size() * 3);
    for (const auto& p : img.pixels)
        for (double v : p) buf.push_back(to_byte(v, space));
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!out) throw ConfigError("failed writing " + path.string());
}

inline ImageRaster read_ppm(const std::filesystem::path& path, const ColorSpace& space) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path.string());
    const auto h = detail::read_pnm_header(in, path.string());
    if (h.magic != "P6") throw ConfigError(path.string() + " is not a binary PPM (P6)");
    const auto bytes = detail::read_bytes(in, static_cast<std::size_t>(h.width) * h.height * 3, path.string());
    ImageRaster img(h.width, h.height);
    for (std::size_t i = 0; i < img.size(); ++i)
        for (int c = 0; c < 3; ++c) {
            const double level = static_cast<double>(bytes[3 * i + static_cast<std::size_t>(c)]) * 255.0 / h.maxval;
            img.pixels[i][c] = from_byte(static_cast<std::uint8_t>(std::lround(level)), space);
        }
    return img;
}

/// Binary PGM (P5) mask: 0 or 255.
inline void write_pgm_mask(const std::filesystem::path& path, const MaskRaster& mask) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open " + path.string() + " for writing");
    out << "P5\n" << mask.width << ' ' << mask.height << "\n255\n";
    std::vector<std::uint8_t> buf(mask.bits.size());
    std::transform(mask.bits.begin(), mask.bits.end(), buf.begin(), [](auto b) { return b ? 255 : 0; });
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!out) throw ConfigError("failed writing " + path.string());
}

/// Any nonzero sample reads as set.
inline MaskRaster read_pgm_mask(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path.string());
    const auto h = detail::read_pnm_header(in, path.string());
    if (h.magic != "P5") throw ConfigError(path.string() + " is not a binary PGM (P5)");
    auto bytes = detail::read_bytes(in, static_cast<std::size_t>(h.width) * h.height, path.string());
    for (auto& b : bytes) b = b ? 1 : 0;
    return {h.width, h.height, std::move(bytes)};
}

}  // namespace ranrac
