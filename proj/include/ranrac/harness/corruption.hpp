#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "ranrac/core/errors.hpp"
#include "ranrac/core/random.hpp"
#include "ranrac/core/types.hpp"
#include "ranrac/harness/pnm_io.hpp"
#include "ranrac/harness/scene.hpp"
#include "ranrac/occlusion/occlusion.hpp"

namespace ranrac {

enum class CorruptionKind { none, occlusion, pose, blur };

[[nodiscard]] inline std::string to_string(CorruptionKind k) {
    switch (k) {
        case CorruptionKind::none: return "none";
        case CorruptionKind::occlusion: return "occlusion";
        case CorruptionKind::pose: return "pose";
        case CorruptionKind::blur: return "blur";
    }
    return "none";
}

[[nodiscard]] inline CorruptionKind parse_corruption_kind(const std::string& s) {
    if (s == "none") return CorruptionKind::none;
    if (s == "occlusion") return CorruptionKind::occlusion;
    if (s == "pose") return CorruptionKind::pose;
    if (s == "blur") return CorruptionKind::blur;
    throw ConfigError("unknown corruption kind '" + s + "' (expected none|occlusion|pose|blur)");
}

struct CorruptionSpec {
    CorruptionKind kind = CorruptionKind::none;
    double fraction = 0.1;    // of views
    double poseOffset = 10.0; // pixels
    int blurRadius = 3;       // box kernel of side 2r + 1
    OcclusionSpec occlusion{};

    void validate() const {
        if (!(fraction >= 0.0 && fraction < 1.0)) throw ConfigError("corruption fraction must lie in [0, 1)");
        if (kind == CorruptionKind::pose && !(poseOffset > 0.0)) throw ConfigError("pose offset must be positive");
        if (kind == CorruptionKind::blur && blurRadius < 1) throw ConfigError("blur radius must be at least 1");
        if (kind == CorruptionKind::occlusion) occlusion.validate();
    }
};

/// Box blur with edge clamping.
[[nodiscard]] inline ImageRaster box_blur(const ImageRaster& img, int radius) {
    ImageRaster rows = img;
    ImageRaster out = img;
    const double norm = 1.0 / static_cast<double>(2 * radius + 1);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            Color s{};
            for (int t = -radius; t <= radius; ++t) {
                const Color& p = img.at(std::clamp(x + t, 0, img.width - 1), y);
                for (int c = 0; c < 3; ++c) s[c] += p[c];
            }
            for (int c = 0; c < 3; ++c) rows.at(x, y)[c] = s[c] * norm;
        }
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            Color s{};
            for (int t = -radius; t <= radius; ++t) {
                const Color& p = rows.at(x, std::clamp(y + t, 0, img.height - 1));
                for (int c = 0; c < 3; ++c) s[c] += p[c];
            }
            for (int c = 0; c < 3; ++c) out.at(x, y)[c] = s[c] * norm;
        }
    return out;
}

/// Output of apply_corruption: the dataset with flags set, plus the patch
/// mask of every occluded view.
struct CorruptedDataset {
    SceneDataset data;
    std::vector<std::optional<MaskRaster>> occlusionMasks;  // per view
};

/// Corrupts one view in place. `stream` drives every random choice.
inline std::optional<MaskRaster> corrupt_view(ObservationView& view, const CorruptionSpec& spec,
                                              const ColorSpace& space, const SeedSpec& stream) {
    switch (spec.kind) {
        case CorruptionKind::none: return std::nullopt;
        case CorruptionKind::occlusion: {
            auto occ = spec.occlusion;
            occ.space = space;
            auto res = generate_occlusion(view.image, occ, stream);
            quantize_in_place(res.occludedImage, space);
            view.image = std::move(res.occludedImage);
            view.corrupted = true;
            return std::move(res.occlusionMask);
        }
        case CorruptionKind::pose: {
            // Only the recorded camera parameters change; the image stays.
            Stream rng(stream);
            const double mag = rng.normal(spec.poseOffset, spec.poseOffset / 5.0);
            const double angle = 2.0 * std::numbers::pi * rng.uniform();
            view.pose = {view.pose[0] + mag * std::cos(angle), view.pose[1] + mag * std::sin(angle)};
            view.corrupted = true;
            return std::nullopt;
        }
        case CorruptionKind::blur: {
            auto blurred = box_blur(view.image, spec.blurRadius);
            quantize_in_place(blurred, space);
            view.image = std::move(blurred);
            view.corrupted = true;
            return std::nullopt;
        }
    }
    return std::nullopt;
}

/// Ids (positions) of the views chosen for corruption: round(fraction * V)
/// views drawn without replacement, ascending.
[[nodiscard]] inline std::vector<std::size_t> corruption_subset(std::size_t views, double fraction,
                                                                const SeedSpec& seed) {
    const auto count = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(views)));
    Stream rng(substream(seed, StreamRole::corruption_subset));
    auto picked = sample_without_replacement(rng, views, std::min(count, views));
    std::sort(picked.begin(), picked.end());
    return picked;
}

/// Corrupts a seeded subset of views. Every other view is left bit-identical.
[[nodiscard]] inline CorruptedDataset apply_corruption(SceneDataset dataset, const CorruptionSpec& spec,
                                                       const SeedSpec& seed) {
    spec.validate();
    CorruptedDataset out;
    out.occlusionMasks.resize(dataset.views.size());
    if (spec.kind != CorruptionKind::none) {
        const SeedSpec apply = substream(seed, StreamRole::corruption_apply);
        for (auto pos : corruption_subset(dataset.views.size(), spec.fraction, seed)) {
            auto& view = dataset.views[pos];
            out.occlusionMasks[pos] =
                corrupt_view(view, spec, dataset.space, substream(apply, static_cast<std::uint64_t>(view.id)));
        }
    }
    out.data = std::move(dataset);
    return out;
}

}  // namespace ranrac
