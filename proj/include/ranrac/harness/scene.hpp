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
#include "ranrac/model/latent_ridge_field.hpp"

namespace ranrac {

/// Synthetic scene parameters. Two generators exist:
///   "bandlimited"  a random-Fourier colour field in (-1, 1) that lies in the
///                  span of a LatentRidgeField with the same feature seed, an
///                  elliptical object region, additive sensor noise.
///   "shapes"       a textured soft-edged ellipse on a flat background in
///                  (0, 1), seen from jittered translated viewpoints.
struct SceneParams {
    std::string generator = "bandlimited";
    int width = 128;
    int height = 128;
    int views = 1;
    double poseJitter = 0.0;  // views are offset uniformly in [-j, j] pixels
    double objectRadiusX = 25.0;
    double objectRadiusY = 22.0;
    double noiseSigma = 0.02;
    bool quantize = true;
    // bandlimited
    int featureCount = 128;
    double bandwidth = 0.75;
    double amplitude = 0.8;  // max |colour| of the noise-free field
    // shapes
    double textureFrequency = 6.0;  // cycles per unit query
    double textureAmplitude = 0.25;
    int textureTerms = 24;
    Color background{0.2, 0.25, 0.3};

    [[nodiscard]] static SceneParams bandlimited() { return {}; }

    [[nodiscard]] static SceneParams shapes() {
        SceneParams p;
        p.generator = "shapes";
        p.width = 48;
        p.height = 48;
        p.views = 40;
        p.poseJitter = 3.0;
        p.objectRadiusX = 14.4;
        p.objectRadiusY = 12.0;
        p.noiseSigma = 0.0;
        return p;
    }

    [[nodiscard]] ColorSpace space() const {
        if (generator == "bandlimited") return ColorSpace::signed_unit();
        if (generator == "shapes") return ColorSpace::unit();
        throw ConfigError("unknown scene generator '" + generator + "'");
    }

    void validate() const {
        (void)space();
        if (width <= 0 || height <= 0) throw ConfigError("scene dimensions must be positive");
        if (views <= 0) throw ConfigError("scene needs at least one view");
        if (!(poseJitter >= 0.0) || !(noiseSigma >= 0.0)) throw ConfigError("jitter and noise must be nonnegative");
        if (!(objectRadiusX > 0.0 && objectRadiusY > 0.0)) throw ConfigError("object radii must be positive");
        if (generator == "bandlimited" && featureCount <= 0) throw ConfigError("featureCount must be positive");
        if (generator == "shapes" && textureTerms <= 0) throw ConfigError("textureTerms must be positive");
    }
};

struct SceneDataset {
    std::string generator;
    ColorSpace space;
    std::vector<ObservationView> views;
    /// Noise-free render of each view at its true pose.
    std::vector<ImageRaster> groundTruth;
    /// Poses the views were actually captured from; views[i].pose may differ
    /// after pose corruption.
    std::vector<Vec2> truePoses;
    /// Feature configuration the bandlimited field was drawn from.
    std::optional<LatentRidgeConfig> fieldPrior;

    [[nodiscard]] std::size_t corrupted_count() const {
        return static_cast<std::size_t>(std::count_if(views.begin(), views.end(), [](const auto& v) { return v.corrupted; }));
    }
};

namespace detail {

/// Noise-free colour of a scene at a query coordinate (scene units).
class SceneField {
public:
    SceneField(const SceneParams& p, const SeedSpec& seed) : params_(p) {
        if (p.generator == "bandlimited") {
            LatentRidgeConfig cfg;
            cfg.featureCount = p.featureCount;
            cfg.bandwidth = p.bandwidth;
            cfg.featureSeed = substream(seed, StreamRole::features);
            prior_ = cfg;
            field_.emplace(cfg);
            latent_.latent.resize(p.featureCount, 3);
            Stream rng(substream(seed, StreamRole::scene));
            for (int k = 0; k < p.featureCount; ++k)
                for (int c = 0; c < 3; ++c) latent_.latent(k, c) = rng.normal();
            // scale against the unjittered reference view
            double peak = 0.0;
            for (int y = 0; y < p.height; ++y)
                for (int x = 0; x < p.width; ++x)
                    for (double v : field_->predict(latent_, pixel_query(x, y, p.width, p.height, {0.0, 0.0})))
                        peak = std::max(peak, std::abs(v));
            if (peak > 1e-12) latent_.latent *= p.amplitude / peak;
        } else if (p.generator == "shapes") {
            Stream rng(substream(seed, StreamRole::scene));
            const double scale = 2.0 * std::numbers::pi * p.textureFrequency;
            for (int k = 0; k < p.textureTerms; ++k) {
                Term t;
                t.fu = scale * rng.normal();
                t.fv = scale * rng.normal();
                t.phase = 2.0 * std::numbers::pi * rng.uniform();
                for (auto& a : t.amp) a = rng.normal();
                terms_.push_back(t);
            }
        } else {
            throw ConfigError("unknown scene generator '" + p.generator + "'");
        }
    }

    [[nodiscard]] Color color(const Vec2& q) const {
        if (field_) return field_->predict(latent_, q);
        const double alpha = coverage(q);
        Color tex{0.55, 0.55, 0.55};
        const double norm = params_.textureAmplitude / std::sqrt(static_cast<double>(terms_.size()) / 2.0);
        for (const auto& t : terms_) {
            const double v = std::cos(t.fu * q[0] + t.fv * q[1] + t.phase);
            for (int c = 0; c < 3; ++c) tex[c] += norm * t.amp[c] * v;
        }
        Color out{};
        for (int c = 0; c < 3; ++c)
            out[c] = params_.background[c] * (1.0 - alpha) + std::clamp(tex[c], 0.0, 1.0) * alpha;
        return out;
    }

    /// True inside the object, in view pixel coordinates at `pose`.
    [[nodiscard]] bool is_object(int x, int y, const Vec2& pose) const {
        if (field_) {
            const double dx = (x + 0.5 + pose[0] - 0.5 * params_.width) / params_.objectRadiusX;
            const double dy = (y + 0.5 + pose[1] - 0.5 * params_.height) / params_.objectRadiusY;
            return dx * dx + dy * dy < 1.0;
        }
        return coverage(pixel_query(x, y, params_.width, params_.height, pose)) > 0.5;
    }

    [[nodiscard]] const std::optional<LatentRidgeConfig>& prior() const noexcept { return prior_; }

private:
    struct Term {
        double fu = 0.0;
        double fv = 0.0;
        double phase = 0.0;
        std::array<double, 3> amp{};
    };

    /// Soft ellipse: 1 inside, smooth falloff, 0.5 on the nominal boundary.
    [[nodiscard]] double coverage(const Vec2& q) const {
        const double rx = params_.objectRadiusX / params_.width;
        const double ry = params_.objectRadiusY / params_.height;
        const double r = std::hypot((q[0] - 0.5) / rx, (q[1] - 0.5) / ry);
        const double a = std::clamp((1.15 - r) / 0.3, 0.0, 1.0);
        return a * a * (3.0 - 2.0 * a);
    }

    SceneParams params_;
    std::optional<LatentRidgeField> field_;
    LatentRidgeField::State latent_;
    std::optional<LatentRidgeConfig> prior_;
    std::vector<Term> terms_;
};

}  // namespace detail

/// Deterministic synthetic dataset: every view is rendered from the scene at
/// a seeded pose, with an object mask and (optionally) sensor noise.
[[nodiscard]] inline SceneDataset make_scene(const SceneParams& p, const SeedSpec& seed) {
    p.validate();
    const detail::SceneField field(p, seed);
    SceneDataset ds;
    ds.generator = p.generator;
    ds.space = p.space();
    ds.fieldPrior = field.prior();
    Stream poseRng(substream(substream(seed, StreamRole::scene), 1));
    for (int v = 0; v < p.views; ++v) {
        Vec2 pose{0.0, 0.0};
        if (p.poseJitter > 0.0) pose = {poseRng.uniform(-p.poseJitter, p.poseJitter), poseRng.uniform(-p.poseJitter, p.poseJitter)};
        ImageRaster truth(p.width, p.height);
        std::vector<std::uint8_t> mask(truth.size(), 0);
        for (int y = 0; y < p.height; ++y)
            for (int x = 0; x < p.width; ++x) {
                truth.at(x, y) = ds.space.clamp(field.color(pixel_query(x, y, p.width, p.height, pose)));
                mask[truth.index(x, y)] = field.is_object(x, y, pose) ? 1 : 0;
            }
        truth.objectMask = mask;
        ImageRaster observed = truth;
        if (p.noiseSigma > 0.0) {
            Stream noise(substream(substream(seed, StreamRole::sensor_noise), static_cast<std::uint64_t>(v)));
            for (auto& px : observed.pixels) {
                for (double& c : px) c += noise.normal(0.0, p.noiseSigma);
                px = ds.space.clamp(px);
            }
        }
        if (p.quantize) quantize_in_place(observed, ds.space);
        ds.views.push_back({v, std::move(observed), pose, false});
        ds.groundTruth.push_back(std::move(truth));
        ds.truePoses.push_back(pose);
    }
    return ds;
}

[[nodiscard]] inline SceneDataset make_scene(const std::string& generatorId, SceneParams p, const SeedSpec& seed) {
    p.generator = generatorId;
    return make_scene(p, seed);
}

}  // namespace ranrac
