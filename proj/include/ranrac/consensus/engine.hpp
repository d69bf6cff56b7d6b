#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "ranrac/core/errors.hpp"
#include "ranrac/core/parallel.hpp"
#include "ranrac/core/random.hpp"
#include "ranrac/core/types.hpp"
#include "ranrac/model/field_model.hpp"

namespace ranrac {

/// Which items a hypothesis is scored on. `held_out` skips the hypothesis's
/// own initial set; `all` validates every item, so initial members that
/// disagree with the model fitted to them do not count.
enum class ValidationScope { held_out, all };

struct RayDomainConfig {
    std::size_t sampleCount = 90;       // M
    std::size_t hypothesisCount = 2000; // N
    double inlierMargin = 0.25;         // epsilon, Euclidean colour distance
    SeedSpec seed{};
    ColorSpace space = ColorSpace::signed_unit();
    ValidationScope scope = ValidationScope::held_out;
    unsigned workers = 0;

    void validate(std::size_t available) const {
        space.validate();
        if (sampleCount == 0) throw ConfigError("sample count M must be positive");
        if (hypothesisCount == 0) throw ConfigError("hypothesis count N must be positive");
        if (!(inlierMargin > 0.0)) throw ConfigError("inlier margin must be positive");
        if (sampleCount >= available)
            throw ConfigError("sample count M=" + std::to_string(sampleCount) + " must be below the " +
                              std::to_string(available) + " available samples");
    }
};

struct ObsDomainConfig {
    std::size_t observationCount = 25; // M
    std::size_t hypothesisCount = 50;  // N
    double pixelMargin = 0.15;         // epsilon_pix
    double imageMargin = 0.95;         // epsilon_img, fraction of counted pixels
    SeedSpec seed{};
    ColorSpace space = ColorSpace::unit();
    ValidationScope scope = ValidationScope::all;
    unsigned workers = 0;

    void validate(std::size_t available) const {
        space.validate();
        if (observationCount == 0) throw ConfigError("observation count M must be positive");
        if (hypothesisCount == 0) throw ConfigError("hypothesis count N must be positive");
        if (!(pixelMargin > 0.0)) throw ConfigError("pixel margin must be positive");
        if (!(imageMargin > 0.0 && imageMargin <= 1.0)) throw ConfigError("image margin must lie in (0, 1]");
        if (observationCount >= available)
            throw ConfigError("observation count M=" + std::to_string(observationCount) + " must be below the " +
                              std::to_string(available) + " available observations");
    }
};

template <class State>
struct Hypothesis {
    std::size_t index = 0;
    std::vector<std::size_t> initialSet;  // draw order
    State modelState{};
    std::vector<std::size_t> inlierIds;   // ascending
    long score = 0;
    double residualSum = 0.0;
};

struct HypothesisDiagnostics {
    std::size_t index = 0;
    long score = 0;
    double residualSum = 0.0;
    std::vector<std::size_t> initialSet;

    friend bool operator==(const HypothesisDiagnostics&, const HypothesisDiagnostics&) = default;
};

struct ObservationCheck {
    std::size_t pixelInlierCount = 0;
    std::size_t countedPixels = 0;
    bool isInlier = false;
    double meanResidual = 0.0;
};

struct ObservationValidation {
    std::size_t id = 0;
    ObservationCheck check;
};

template <class State>
struct ConsensusReport {
    Hypothesis<State> best;
    std::vector<std::size_t> consensusIds;  // ascending, deduplicated
    State finalModel{};
    std::vector<HypothesisDiagnostics> perHypothesis;
    /// Observation domain only: the best hypothesis's per-view records.
    std::vector<ObservationValidation> validations;
};

// ---------------------------------------------------------------------------
// Sampling

/// Initial set of hypothesis `n`: M distinct ids drawn uniformly without
/// replacement from `pool` using substream(seed, n).
[[nodiscard]] inline std::vector<std::size_t> draw_hypothesis_set(std::span<const std::size_t> pool, std::size_t m,
                                                                  const SeedSpec& seed, std::size_t n) {
    if (m > pool.size())
        throw ConfigError("cannot draw " + std::to_string(m) + " ids from a pool of " + std::to_string(pool.size()));
    Stream rng(substream(seed, static_cast<std::uint64_t>(n)));
    std::vector<std::size_t> out = sample_without_replacement(rng, pool.size(), m);
    for (auto& v : out) v = pool[v];
    return out;
}

[[nodiscard]] inline std::vector<std::vector<std::size_t>> draw_hypothesis_sets(std::span<const std::size_t> pool,
                                                                               std::size_t m, std::size_t n,
                                                                               const SeedSpec& seed) {
    if (n == 0) throw ConfigError("hypothesis count must be positive");
    std::vector<std::vector<std::size_t>> sets;
    sets.reserve(n);
    for (std::size_t i = 0; i < n; ++i) sets.push_back(draw_hypothesis_set(pool, m, seed, i));
    return sets;
}

// ---------------------------------------------------------------------------
// Validation

[[nodiscard]] inline double pixel_residual(const Color& pred, const Color& actual) noexcept {
    return color_distance(pred, actual);
}

/// Held-out ids whose residual is strictly below `margin`, ascending.
[[nodiscard]] inline std::vector<std::size_t> collect_ray_inliers(const ImageRaster& prediction,
                                                                  const ImageRaster& input,
                                                                  std::span<const std::size_t> heldOutIds,
                                                                  double margin) {
    if (!prediction.same_shape(input)) throw ConfigError("prediction and input rasters differ in size");
    std::vector<std::size_t> out;
    for (std::size_t id : heldOutIds) {
        if (id >= input.size()) throw ConfigError("held-out id " + std::to_string(id) + " outside raster");
        if (pixel_residual(prediction.pixels[id], input.pixels[id]) < margin) out.push_back(id);
    }
    std::sort(out.begin(), out.end());
    return out;
}

namespace detail {

inline ObservationCheck check_observation(std::span<const Color> pred, std::span<const Color> actual,
                                          const std::vector<std::uint8_t>* mask, double pixelMargin,
                                          double imageMargin, long id) {
    ObservationCheck c;
    double sum = 0.0;
    for (std::size_t p = 0; p < actual.size(); ++p) {
        if (mask && !(*mask)[p]) continue;
        ++c.countedPixels;
        const double r = pixel_residual(pred[p], actual[p]);
        sum += r;
        if (r < pixelMargin) ++c.pixelInlierCount;
    }
    if (c.countedPixels == 0)
        throw DegenerateError(id, "observation " + std::to_string(id) + " has no counted pixels");
    c.meanResidual = sum / static_cast<double>(c.countedPixels);
    // A fully explained observation is an inlier even at imageMargin = 1.
    c.isInlier = c.pixelInlierCount == c.countedPixels ||
                 static_cast<double>(c.pixelInlierCount) > imageMargin * static_cast<double>(c.countedPixels);
    return c;
}

}  // namespace detail

/// Two-stage observation check: pixel inliers under `pixelMargin`, then the
/// observation is an inlier when more than `imageMargin` of the counted
/// pixels are. With an object mask on `input` only object pixels count.
[[nodiscard]] inline ObservationCheck validate_observation(const ImageRaster& prediction, const ImageRaster& input,
                                                           double pixelMargin, double imageMargin, long id = -1) {
    if (!prediction.same_shape(input)) throw ConfigError("prediction and input rasters differ in size");
    return detail::check_observation(prediction.pixels, input.pixels,
                                     input.objectMask ? &*input.objectMask : nullptr, pixelMargin, imageMargin, id);
}

// ---------------------------------------------------------------------------
// Selection

/// Total order used for selection: more inliers, then smaller residual sum,
/// then smaller index.
template <class H>
[[nodiscard]] bool outranks(const H& a, const H& b) noexcept {
    if (a.score != b.score) return a.score > b.score;
    if (a.residualSum != b.residualSum) return a.residualSum < b.residualSum;
    return a.index < b.index;
}

template <class H>
[[nodiscard]] const H& select_best(std::span<const H> hypotheses) {
    if (hypotheses.empty()) throw ConfigError("select_best needs at least one hypothesis");
    const H* best = &hypotheses.front();
    for (const auto& h : hypotheses)
        if (outranks(h, *best)) best = &h;
    return *best;
}

template <class H>
[[nodiscard]] const H& select_best(const std::vector<H>& hypotheses) {
    return select_best(std::span<const H>(hypotheses));
}

// ---------------------------------------------------------------------------
// Ray domain

namespace detail {

struct RayEvaluation {
    long score = 0;
    double residualSum = 0.0;
    std::vector<std::size_t> inliers;
};

template <class Plan, class State>
RayEvaluation evaluate_ray(const Plan& plan, const State& state, std::span<const Color> colors,
                           std::span<const std::size_t> initial, const RayDomainConfig& cfg, bool keepIds) {
    const std::size_t n = colors.size();
    std::vector<Color> pred(n);
    plan.predict_range(state, 0, pred);
    std::vector<std::uint8_t> skip(n, 0);
    if (cfg.scope == ValidationScope::held_out)
        for (auto id : initial) skip[id] = 1;
    RayEvaluation ev;
    for (std::size_t i = 0; i < n; ++i) {
        if (skip[i]) continue;
        const double r = pixel_residual(cfg.space.clamp(pred[i]), colors[i]);
        if (r < cfg.inlierMargin) {
            ++ev.score;
            ev.residualSum += r;
            if (keepIds) ev.inliers.push_back(i);
        }
    }
    return ev;
}

inline std::vector<std::size_t> sorted_copy(std::span<const std::size_t> v) {
    std::vector<std::size_t> s(v.begin(), v.end());
    std::sort(s.begin(), s.end());
    return s;
}

inline std::vector<std::size_t> consensus_union(std::span<const std::size_t> initial,
                                                std::span<const std::size_t> inliers) {
    std::vector<std::size_t> out(initial.begin(), initial.end());
    out.insert(out.end(), inliers.begin(), inliers.end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

}  // namespace detail

/// Fuzzy-RANSAC over pixel samples of a single view: draw N initial sets of
/// M samples, coarse-fit each, score on the remaining samples, keep the
/// hypothesis with most inliers and refit at full strength on its initial
/// set plus inliers. Sample ids are positions in `samples`.
template <FieldModel M>
[[nodiscard]] ConsensusReport<typename M::State> run_ray_domain(std::span<const PixelSample> samples, const M& model,
                                                                const RayDomainConfig& cfg) {
    using State = typename M::State;
    cfg.validate(samples.size());
    const std::size_t n = samples.size();
    std::vector<Vec2> queries(n);
    std::vector<Color> colors(n);
    for (std::size_t i = 0; i < n; ++i) {
        queries[i] = samples[i].query;
        colors[i] = samples[i].color;
    }
    const auto plan = model.prepare(queries);
    std::vector<std::size_t> pool(n);
    for (std::size_t i = 0; i < n; ++i) pool[i] = i;

    std::vector<HypothesisDiagnostics> diags(cfg.hypothesisCount);
    parallel_for(cfg.hypothesisCount, cfg.workers, [&](std::size_t h) {
        auto initial = draw_hypothesis_set(pool, cfg.sampleCount, cfg.seed, h);
        const State state = plan.fit(detail::sorted_copy(initial), colors, FitStrength::coarse);
        const auto ev = detail::evaluate_ray(plan, state, colors, initial, cfg, false);
        diags[h] = {h, ev.score, ev.residualSum, std::move(initial)};
    });

    const auto& top = select_best(diags);
    ConsensusReport<State> report;
    report.best.index = top.index;
    report.best.initialSet = top.initialSet;
    report.best.modelState = plan.fit(detail::sorted_copy(top.initialSet), colors, FitStrength::coarse);
    auto ev = detail::evaluate_ray(plan, report.best.modelState, colors, top.initialSet, cfg, true);
    report.best.score = ev.score;
    report.best.residualSum = ev.residualSum;
    report.best.inlierIds = std::move(ev.inliers);
    report.consensusIds = detail::consensus_union(report.best.initialSet, report.best.inlierIds);
    report.finalModel = plan.fit(report.consensusIds, colors, FitStrength::full);
    report.perHypothesis = std::move(diags);
    return report;
}

// ---------------------------------------------------------------------------
// Observation domain

/// Fuzzy-RANSAC over whole posed views: hypotheses are fitted on M sampled
/// views, validated per view with the two-stage pixel/image margin, and the
/// final model is fitted on the consensus views. Ids are ObservationView::id.
template <FieldModel M>
[[nodiscard]] ConsensusReport<typename M::State> run_observation_domain(std::span<const ObservationView> observations,
                                                                        const M& model, const ObsDomainConfig& cfg) {
    using State = typename M::State;
    cfg.validate(observations.size());
    const std::size_t v = observations.size();

    std::unordered_map<std::size_t, std::size_t> position;
    std::vector<std::size_t> pool(v);
    std::vector<std::size_t> offset(v + 1, 0);
    for (std::size_t i = 0; i < v; ++i) {
        const auto& ob = observations[i];
        ob.image.validate();
        if (ob.id < 0) throw ConfigError("observation ids must be nonnegative");
        if (!std::isfinite(ob.pose[0]) || !std::isfinite(ob.pose[1]))
            throw ConfigError("observation " + std::to_string(ob.id) + " has a non-finite pose");
        pool[i] = static_cast<std::size_t>(ob.id);
        if (!position.emplace(pool[i], i).second)
            throw ConfigError("duplicate observation id " + std::to_string(ob.id));
        offset[i + 1] = offset[i] + ob.image.size();
    }
    std::vector<Vec2> queries;
    std::vector<Color> colors;
    queries.reserve(offset[v]);
    colors.reserve(offset[v]);
    for (const auto& ob : observations) {
        const auto& img = ob.image;
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x) {
                queries.push_back(pixel_query(x, y, img.width, img.height, ob.pose));
                colors.push_back(img.at(x, y));
            }
    }
    const auto plan = model.prepare(queries);

    auto pixel_ids = [&](std::span<const std::size_t> ids) {
        std::vector<std::size_t> positions;
        positions.reserve(ids.size());
        for (auto id : ids) positions.push_back(position.at(id));
        std::sort(positions.begin(), positions.end());
        std::vector<std::size_t> px;
        for (auto p : positions)
            for (std::size_t k = offset[p]; k < offset[p + 1]; ++k) px.push_back(k);
        return px;
    };

    struct Evaluation {
        long score = 0;
        double residualSum = 0.0;
        std::vector<std::size_t> inliers;
        std::vector<ObservationValidation> records;
    };
    auto evaluate = [&](const State& state, std::span<const std::size_t> initial) {
        std::vector<std::uint8_t> skip(v, 0);
        if (cfg.scope == ValidationScope::held_out)
            for (auto id : initial) skip[position.at(id)] = 1;
        Evaluation ev;
        std::vector<Color> pred;
        for (std::size_t p = 0; p < v; ++p) {
            if (skip[p]) continue;
            const auto& ob = observations[p];
            pred.resize(ob.image.size());
            plan.predict_range(state, offset[p], pred);
            for (auto& c : pred) c = cfg.space.clamp(c);
            const auto chk = detail::check_observation(pred, ob.image.pixels,
                                                       ob.image.objectMask ? &*ob.image.objectMask : nullptr,
                                                       cfg.pixelMargin, cfg.imageMargin, ob.id);
            ev.records.push_back({pool[p], chk});
            if (chk.isInlier) {
                ++ev.score;
                ev.residualSum += chk.meanResidual;
                ev.inliers.push_back(pool[p]);
            }
        }
        std::sort(ev.inliers.begin(), ev.inliers.end());
        return ev;
    };

    std::vector<HypothesisDiagnostics> diags(cfg.hypothesisCount);
    parallel_for(cfg.hypothesisCount, cfg.workers, [&](std::size_t h) {
        auto initial = draw_hypothesis_set(pool, cfg.observationCount, cfg.seed, h);
        const State state = plan.fit(pixel_ids(initial), colors, FitStrength::coarse);
        const auto ev = evaluate(state, initial);
        diags[h] = {h, ev.score, ev.residualSum, std::move(initial)};
    });

    const auto& top = select_best(diags);
    ConsensusReport<State> report;
    report.best.index = top.index;
    report.best.initialSet = top.initialSet;
    report.best.modelState = plan.fit(pixel_ids(top.initialSet), colors, FitStrength::coarse);
    auto ev = evaluate(report.best.modelState, top.initialSet);
    report.best.score = ev.score;
    report.best.residualSum = ev.residualSum;
    report.best.inlierIds = std::move(ev.inliers);
    report.validations = std::move(ev.records);
    report.consensusIds = detail::consensus_union(report.best.initialSet, report.best.inlierIds);
    report.finalModel = plan.fit(pixel_ids(report.consensusIds), colors, FitStrength::full);
    report.perHypothesis = std::move(diags);
    return report;
}

}  // namespace ranrac
