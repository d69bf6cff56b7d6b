#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include "ranrac/core/errors.hpp"
#include "ranrac/core/random.hpp"
#include "ranrac/core/types.hpp"

namespace ranrac {

/// Parameters of the randomized noise-patch occluder. Distances are pixels.
struct OcclusionSpec {
    double targetImageOcclusion = 0.05;
    double bandLow = 0.2;   // accepted object occlusion is strictly inside
    double bandHigh = 0.3;  // (bandLow, bandHigh)
    double centerSpikeOffset = 0.0;
    double centerSpikeSigma = 10.0;
    double sizeSigma = 3.0;
    Color noiseMean{0.5, 0.5, 0.5};
    double noiseSigma = 0.3;
    int maxAttempts = 1000;
    SeedSpec seed{};
    ColorSpace space = ColorSpace::unit();

    /// Defaults expressed relative to a colour space: noise centred on the
    /// midpoint with a standard deviation of 0.3 x span.
    [[nodiscard]] static OcclusionSpec defaults_for(const ColorSpace& cs) {
        OcclusionSpec s;
        s.space = cs;
        s.noiseMean = {cs.mid(), cs.mid(), cs.mid()};
        s.noiseSigma = 0.3 * cs.span();
        return s;
    }

    void validate() const {
        space.validate();
        if (!(targetImageOcclusion > 0.0 && targetImageOcclusion < 1.0))
            throw ConfigError("target image occlusion must lie in (0, 1)");
        if (!(bandLow > 0.0 && bandLow < bandHigh && bandHigh <= 1.0))
            throw ConfigError("object occlusion band must satisfy 0 < low < high <= 1");
        if (!(centerSpikeSigma >= 0.0) || !(sizeSigma >= 0.0)) throw ConfigError("sigmas must be nonnegative");
        if (!(noiseSigma > 0.0)) throw ConfigError("noise sigma must be positive");
        if (maxAttempts < 1) throw ConfigError("maxAttempts must be at least 1");
    }
};

struct OcclusionResult {
    ImageRaster occludedImage;
    MaskRaster occlusionMask;
    double achievedImageOcclusion = 0.0;
    double achievedObjectOcclusion = 0.0;
    int attempts = 0;
};

class RejectionExhaustedError : public Error {
public:
    RejectionExhaustedError(int attempts, double closestObjectOcclusion)
        : Error(ErrorKind::rejection_exhausted,
                "no occlusion patch inside the object-occlusion band after " + std::to_string(attempts) +
                    " attempts (closest object occlusion " + std::to_string(closestObjectOcclusion) + ")"),
          attempts_(attempts),
          closest_(closestObjectOcclusion) {}

    [[nodiscard]] int attempts() const noexcept { return attempts_; }
    [[nodiscard]] double closest_object_occlusion() const noexcept { return closest_; }

private:
    int attempts_;
    double closest_;
};

/// Occluded pixels over all pixels.
[[nodiscard]] inline double image_occlusion(const MaskRaster& mask) {
    if (mask.bits.empty()) throw ConfigError("image occlusion of an empty raster");
    return static_cast<double>(mask.count()) / static_cast<double>(mask.bits.size());
}

/// Occluded object pixels over object pixels.
[[nodiscard]] inline double object_occlusion(const MaskRaster& mask, const MaskRaster& objectMask) {
    if (mask.width != objectMask.width || mask.height != objectMask.height)
        throw ConfigError("occlusion and object masks differ in size");
    std::size_t object = 0;
    std::size_t covered = 0;
    for (std::size_t i = 0; i < mask.bits.size(); ++i) {
        if (!objectMask.bits[i]) continue;
        ++object;
        covered += mask.bits[i] ? 1U : 0U;
    }
    if (object == 0) throw DegenerateError(-1, "object mask is empty");
    return static_cast<double>(covered) / static_cast<double>(object);
}

[[nodiscard]] inline MaskRaster object_mask_of(const ImageRaster& image) {
    if (!image.objectMask) throw ConfigError("image has no object mask");
    return {image.width, image.height, *image.objectMask};
}

struct BoundingBox {
    // Continuous pixel coordinates: pixel x covers [x, x + 1).
    double minX = 0.0;
    double maxX = 0.0;
    double minY = 0.0;
    double maxY = 0.0;
};

[[nodiscard]] inline BoundingBox object_bounds(const MaskRaster& objectMask) {
    int x0 = objectMask.width;
    int x1 = -1;
    int y0 = objectMask.height;
    int y1 = -1;
    for (int y = 0; y < objectMask.height; ++y)
        for (int x = 0; x < objectMask.width; ++x)
            if (objectMask.bits[static_cast<std::size_t>(y) * static_cast<std::size_t>(objectMask.width) +
                                static_cast<std::size_t>(x)]) {
                x0 = std::min(x0, x);
                x1 = std::max(x1, x);
                y0 = std::min(y0, y);
                y1 = std::max(y1, y);
            }
    if (x1 < 0) throw DegenerateError(-1, "object mask is empty");
    return {static_cast<double>(x0), static_cast<double>(x1 + 1), static_cast<double>(y0),
            static_cast<double>(y1 + 1)};
}

namespace detail {

inline Vec2 draw_center(const BoundingBox& box, int width, int height, const OcclusionSpec& spec, Stream& rng) {
    auto axis = [&](double lo, double hi, double limit) {
        const double mean = rng.bernoulli(0.5) ? lo - spec.centerSpikeOffset : hi + spec.centerSpikeOffset;
        return std::clamp(rng.normal(mean, spec.centerSpikeSigma), 0.0, limit);
    };
    const double cx = axis(box.minX, box.maxX, static_cast<double>(width));
    const double cy = axis(box.minY, box.maxY, static_cast<double>(height));
    return {cx, cy};
}

}  // namespace detail

/// Patch centre: per axis an equal-weight mixture of two Gaussians sitting on
/// the object's bounding-box borders (pushed outwards by the spike offset),
/// clipped to the image.
[[nodiscard]] inline Vec2 sample_patch_center(const MaskRaster& objectMask, const OcclusionSpec& spec,
                                              const SeedSpec& stream) {
    Stream rng(stream);
    return detail::draw_center(object_bounds(objectMask), objectMask.width, objectMask.height, spec, rng);
}

/// Rejection-samples one rectangular noise patch whose object occlusion lies
/// strictly inside the band. Pixels outside the patch are left untouched.
[[nodiscard]] inline OcclusionResult generate_occlusion(const ImageRaster& image, const OcclusionSpec& spec,
                                                        const SeedSpec& stream) {
    spec.validate();
    image.validate();
    const MaskRaster object = object_mask_of(image);
    const BoundingBox box = object_bounds(object);
    const int w = image.width;
    const int h = image.height;
    const double meanSide = std::sqrt(spec.targetImageOcclusion * static_cast<double>(w) * static_cast<double>(h));

    Stream rng(stream);
    double closest = -1.0;
    for (int attempt = 1; attempt <= spec.maxAttempts; ++attempt) {
        const Vec2 c = detail::draw_center(box, w, h, spec, rng);
        const int pw = std::max(1, static_cast<int>(std::lround(rng.normal(meanSide, spec.sizeSigma))));
        const int ph = std::max(1, static_cast<int>(std::lround(rng.normal(meanSide, spec.sizeSigma))));
        const long x0 = std::lround(c[0] - 0.5 * pw);
        const long y0 = std::lround(c[1] - 0.5 * ph);
        const int xa = static_cast<int>(std::clamp<long>(x0, 0, w));
        const int xb = static_cast<int>(std::clamp<long>(x0 + pw, 0, w));
        const int ya = static_cast<int>(std::clamp<long>(y0, 0, h));
        const int yb = static_cast<int>(std::clamp<long>(y0 + ph, 0, h));

        MaskRaster mask(w, h);
        for (int y = ya; y < yb; ++y)
            for (int x = xa; x < xb; ++x) mask.bits[static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x)] = 1;
        const double objOcc = object_occlusion(mask, object);
        const double mid = 0.5 * (spec.bandLow + spec.bandHigh);
        if (closest < 0.0 || std::abs(objOcc - mid) < std::abs(closest - mid)) closest = objOcc;
        if (!(objOcc > spec.bandLow && objOcc < spec.bandHigh)) continue;

        ImageRaster occluded = image;
        for (int y = ya; y < yb; ++y)
            for (int x = xa; x < xb; ++x) {
                Color n{};
                for (int ch = 0; ch < 3; ++ch) n[ch] = rng.normal(spec.noiseMean[ch], spec.noiseSigma);
                occluded.at(x, y) = spec.space.clamp(n);
            }
        const double imgOcc = image_occlusion(mask);
        return OcclusionResult{std::move(occluded), std::move(mask), imgOcc, objOcc, attempt};
    }
    throw RejectionExhaustedError(spec.maxAttempts, closest);
}

[[nodiscard]] inline OcclusionResult generate_occlusion(const ImageRaster& image, const OcclusionSpec& spec) {
    return generate_occlusion(image, spec, spec.seed);
}

}  // namespace ranrac
