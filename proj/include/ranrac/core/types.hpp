#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ranrac/core/errors.hpp"

namespace ranrac {

using Vec2 = std::array<double, 2>;
using Color = std::array<double, 3>;

/// Per-channel value range of colours. The ray-domain pipeline works in
/// (-1, 1), the observation-domain pipeline in (0, 1).
struct ColorSpace {
    double low = 0.0;
    double high = 1.0;

    [[nodiscard]] constexpr double span() const noexcept { return high - low; }
    [[nodiscard]] constexpr double mid() const noexcept { return 0.5 * (low + high); }

    [[nodiscard]] static constexpr ColorSpace signed_unit() noexcept { return {-1.0, 1.0}; }
    [[nodiscard]] static constexpr ColorSpace unit() noexcept { return {0.0, 1.0}; }

    void validate() const {
        if (!(low < high)) throw ConfigError("colour space requires low < high");
    }

    [[nodiscard]] bool contains(const Color& c) const noexcept {
        for (double v : c)
            if (!(v >= low && v <= high)) return false;
        return true;
    }

    [[nodiscard]] Color clamp(Color c) const noexcept {
        for (double& v : c) v = v < low ? low : (v > high ? high : v);
        return c;
    }

    friend constexpr bool operator==(const ColorSpace&, const ColorSpace&) = default;
};

/// Affine per-channel map between colour spaces.
inline Color normalize_color(const Color& c, const ColorSpace& from, const ColorSpace& to) {
    from.validate();
    to.validate();
    static constexpr const char* names[] = {"red", "green", "blue"};
    Color out{};
    for (int ch = 0; ch < 3; ++ch) {
        const double v = c[ch];
        if (!(v >= from.low && v <= from.high))
            throw RangeError(ch, std::string("channel ") + names[ch] + " (" + std::to_string(v) +
                                     ") outside source colour space [" + std::to_string(from.low) +
                                     ", " + std::to_string(from.high) + "]");
        out[ch] = to.low + (v - from.low) * (to.span() / from.span());
        // endpoint exactness
        if (v == from.low) out[ch] = to.low;
        if (v == from.high) out[ch] = to.high;
    }
    return out;
}

/// One (query, colour) pair. The query is a normalised pixel coordinate in
/// [0,1]^2 standing in for a camera ray.
struct PixelSample {
    Vec2 query{};
    Color color{};
};

/// Row-major RGB raster with an optional object mask (1 = object pixel).
struct ImageRaster {
    int width = 0;
    int height = 0;
    std::vector<Color> pixels;
    std::optional<std::vector<std::uint8_t>> objectMask;

    ImageRaster() = default;
    ImageRaster(int w, int h, Color fill = {0.0, 0.0, 0.0})
        : width(w), height(h), pixels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {
        if (w <= 0 || h <= 0) throw ConfigError("raster dimensions must be positive");
    }

    [[nodiscard]] std::size_t size() const noexcept { return pixels.size(); }
    [[nodiscard]] std::size_t index(int x, int y) const noexcept {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x);
    }
    [[nodiscard]] Color& at(int x, int y) noexcept { return pixels[index(x, y)]; }
    [[nodiscard]] const Color& at(int x, int y) const noexcept { return pixels[index(x, y)]; }

    [[nodiscard]] bool same_shape(const ImageRaster& o) const noexcept {
        return width == o.width && height == o.height;
    }

    void validate() const {
        if (width <= 0 || height <= 0) throw ConfigError("raster dimensions must be positive");
        if (pixels.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
            throw ConfigError("raster pixel count does not match width x height");
        if (objectMask && objectMask->size() != pixels.size())
            throw ConfigError("object mask size does not match raster");
    }

    friend bool operator==(const ImageRaster&, const ImageRaster&) = default;
};

/// Single-channel boolean raster (1 = set).
struct MaskRaster {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> bits;

    MaskRaster() = default;
    MaskRaster(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), bits(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {}
    MaskRaster(int w, int h, std::vector<std::uint8_t> b) : width(w), height(h), bits(std::move(b)) {}

    [[nodiscard]] std::size_t count() const noexcept {
        std::size_t n = 0;
        for (auto b : bits) n += b ? 1U : 0U;
        return n;
    }

    friend bool operator==(const MaskRaster&, const MaskRaster&) = default;
};

/// One input image with its (planar, translation-only) pose.
struct ObservationView {
    int id = 0;
    ImageRaster image;
    Vec2 pose{0.0, 0.0};
    /// Ground truth for evaluation. The consensus engine never reads it.
    bool corrupted = false;

    friend bool operator==(const ObservationView&, const ObservationView&) = default;
};

/// Query coordinate of the centre of pixel (x, y) in a width x height view
/// translated by `pose` pixels.
[[nodiscard]] inline Vec2 pixel_query(int x, int y, int width, int height, const Vec2& pose) noexcept {
    return {(static_cast<double>(x) + 0.5 + pose[0]) / static_cast<double>(width),
            (static_cast<double>(y) + 0.5 + pose[1]) / static_cast<double>(height)};
}

[[nodiscard]] inline double color_distance(const Color& a, const Color& b) noexcept {
    const double d0 = a[0] - b[0];
    const double d1 = a[1] - b[1];
    const double d2 = a[2] - b[2];
    return std::sqrt(d0 * d0 + d1 * d1 + d2 * d2);
}

/// Pixels of a view as ray-domain samples, in row-major order.
[[nodiscard]] inline std::vector<PixelSample> samples_from_view(const ObservationView& view) {
    const auto& img = view.image;
    std::vector<PixelSample> out;
    out.reserve(img.size());
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            out.push_back({pixel_query(x, y, img.width, img.height, view.pose), img.at(x, y)});
    return out;
}

}  // namespace ranrac
