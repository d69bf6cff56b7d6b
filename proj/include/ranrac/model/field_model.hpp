#pragma once

#include <concepts>
#include <cstddef>
#include <span>
#include <vector>

#include "ranrac/core/types.hpp"

namespace ranrac {

/// How hard an adapter works during a fit. Hypothesis inference only needs a
/// coarse model; the final consensus refit uses `full`.
enum class FitStrength { coarse, full };

/// A field model bound to a fixed list of query coordinates. Binding lets an
/// adapter precompute everything that depends on the queries only (feature
/// rows, interpolation weights) once, and reuse it across all hypotheses.
///
///   fit(ids, colors, strength)   ids index the bound query list; colors is
///                                the full colour table for that list.
///   predict_range(state, first, out)
///                                writes predictions for queries
///                                [first, first + out.size()) into out.
template <class P, class State>
concept BoundField = requires(const P& p, std::span<const std::size_t> ids, std::span<const Color> colors,
                              const State& s, std::size_t first, std::span<Color> out) {
    { p.fit(ids, colors, FitStrength::full) } -> std::same_as<State>;
    { p.predict_range(s, first, out) };
    { p.query_count() } -> std::convertible_to<std::size_t>;
};

/// The model-fitting contract the consensus engine drives: fit/predict are
/// pure functions of their arguments and the adapter configuration.
template <class M>
concept FieldModel = std::copy_constructible<typename M::State> &&
    requires(const M& m, std::span<const PixelSample> samples, const typename M::State& s, Vec2 q,
             std::span<const Vec2> queries) {
        { m.fit(samples, FitStrength::full) } -> std::same_as<typename M::State>;
        { m.predict(s, q) } -> std::same_as<Color>;
        { m.prepare(queries) } -> BoundField<typename M::State>;
    };

/// Renders a width x height view at `pose`, clamped to `space`.
template <FieldModel M>
[[nodiscard]] ImageRaster render_view(const M& model, const typename M::State& state, const Vec2& pose, int width,
                                      int height, const ColorSpace& space) {
    ImageRaster out(width, height);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            out.at(x, y) = space.clamp(model.predict(state, pixel_query(x, y, width, height, pose)));
    return out;
}

}  // namespace ranrac
