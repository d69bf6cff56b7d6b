#pragma once

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ranrac/consensus/engine.hpp"
#include "ranrac/core/errors.hpp"
#include "ranrac/core/format.hpp"
#include "ranrac/harness/corruption.hpp"
#include "ranrac/harness/metrics.hpp"
#include "ranrac/harness/pnm_io.hpp"
#include "ranrac/harness/scene.hpp"
#include "ranrac/model/grid_field.hpp"
#include "ranrac/model/latent_ridge_field.hpp"

namespace ranrac {

enum class PipelineMode { ray, obs };

struct AdapterConfig {
    double lambdaLat = 1e-3;
    int gridResolution = 64;
    double tikhonov = 1e-2;
};

struct ExperimentConfig {
    PipelineMode mode = PipelineMode::ray;
    std::string runId = "run";
    SceneParams scene = SceneParams::bandlimited();
    CorruptionSpec corruption{};
    RayDomainConfig ray{};
    ObsDomainConfig obs{};
    AdapterConfig adapter{};
    std::filesystem::path outputDir = "out";
    SeedSpec seed{1, 0};
    unsigned workers = 0;

    /// Single 128 x 128 view of the bandlimited scene, one occlusion patch at
    /// 5% image / (20%, 30%) object occlusion.
    [[nodiscard]] static ExperimentConfig ray_defaults() {
        ExperimentConfig c;
        c.runId = "ray";
        c.corruption.kind = CorruptionKind::occlusion;
        c.corruption.occlusion = OcclusionSpec::defaults_for(ColorSpace::signed_unit());
        return c;
    }

    /// 40 views of the shapes scene, 10% of them corrupted by `kind`.
    [[nodiscard]] static ExperimentConfig obs_defaults(CorruptionKind kind) {
        ExperimentConfig c;
        c.mode = PipelineMode::obs;
        c.runId = "obs-" + to_string(kind);
        c.scene = SceneParams::shapes();
        c.corruption.kind = kind;
        c.corruption.fraction = 0.1;
        c.corruption.occlusion = OcclusionSpec::defaults_for(ColorSpace::unit());
        // patch placement scaled to the smaller views
        c.corruption.occlusion.centerSpikeSigma = 4.0;
        c.corruption.occlusion.sizeSigma = 1.5;
        return c;
    }

    void validate() const {
        scene.validate();
        corruption.validate();
        if (runId.empty()) throw ConfigError("run id must not be empty");
        if (mode == PipelineMode::ray && scene.generator != "bandlimited")
            throw ConfigError("ray experiments use the bandlimited scene");
        if (mode == PipelineMode::ray && scene.views != 1) throw ConfigError("ray experiments use a single view");
        if (mode == PipelineMode::obs && scene.views < 2) throw ConfigError("observation experiments need several views");
    }
};

/// Exclusion quality against ground-truth corruption: precision is the
/// corrupted share of excluded items, recall the excluded share of corrupted
/// items. Without corrupted items recall is 1 and precision is the share of
/// clean items retained; with nothing excluded precision is 1.
struct ExclusionScore {
    double precision = 1.0;
    double recall = 1.0;
};

[[nodiscard]] inline ExclusionScore exclusion_score(const std::vector<std::uint8_t>& corrupted,
                                                    const std::vector<std::uint8_t>& excluded) {
    if (corrupted.size() != excluded.size()) throw ConfigError("exclusion score: label sizes differ");
    std::size_t nCorrupt = 0, nExcluded = 0, hit = 0;
    for (std::size_t i = 0; i < corrupted.size(); ++i) {
        nCorrupt += corrupted[i] ? 1U : 0U;
        nExcluded += excluded[i] ? 1U : 0U;
        hit += corrupted[i] && excluded[i] ? 1U : 0U;
    }
    ExclusionScore s;
    if (nCorrupt == 0) {
        const std::size_t clean = corrupted.size();
        s.recall = 1.0;
        s.precision = clean == 0 ? 1.0 : static_cast<double>(clean - nExcluded) / static_cast<double>(clean);
        return s;
    }
    s.recall = static_cast<double>(hit) / static_cast<double>(nCorrupt);
    s.precision = nExcluded == 0 ? 1.0 : static_cast<double>(hit) / static_cast<double>(nExcluded);
    return s;
}

struct MetricsRow {
    std::string runId;
    double psnrMean = 0.0;
    double psnrP5 = 0.0;
    double ssimMean = 0.0;
    double inlierPrecision = 0.0;
    double inlierRecall = 0.0;
    double naivePsnr = 0.0;   // fit on every input item
    double oraclePsnr = 0.0;  // fit on the clean items only
    double runtimeSeconds = 0.0;
};

inline constexpr const char* kMetricsCsvHeader =
    "run_id,psnr_mean,psnr_p5,ssim_mean,inlier_precision,inlier_recall,naive_psnr,oracle_psnr";

struct ConsensusRow {
    std::size_t id = 0;
    bool inConsensus = false;
    bool corrupted = false;
};

struct ExperimentResult {
    MetricsRow metrics;
    ColorSpace space;
    std::vector<ObservationView> inputs;
    std::vector<std::optional<MaskRaster>> occlusionMasks;
    std::vector<ImageRaster> reconstructions;
    std::vector<HypothesisDiagnostics> hypotheses;
    std::vector<ConsensusRow> consensus;
    std::size_t bestIndex = 0;
};

namespace detail {

struct ViewScores {
    std::vector<double> psnr;
    std::vector<double> ssim;
};

inline double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

template <FieldModel M>
ViewScores score_views(const M& model, const typename M::State& state, const SceneDataset& ds,
                       std::vector<ImageRaster>* renders) {
    ViewScores s;
    for (std::size_t i = 0; i < ds.views.size(); ++i) {
        const auto& truth = ds.groundTruth[i];
        auto img = render_view(model, state, ds.truePoses[i], truth.width, truth.height, ds.space);
        s.psnr.push_back(psnr(img, truth, ds.space.span()));
        s.ssim.push_back(ssim(img, truth, ds.space.span()));
        if (renders) renders->push_back(std::move(img));
    }
    return s;
}

inline ExperimentResult run_ray_experiment(const ExperimentConfig& cfg) {
    SceneDataset ds = make_scene(cfg.scene, cfg.seed);
    ObservationView& view = ds.views.front();
    std::optional<MaskRaster> occMask;
    if (cfg.corruption.kind == CorruptionKind::occlusion) {
        // The single input view is the occlusion target; fraction only
        // applies to multi-view datasets.
        occMask = corrupt_view(view, cfg.corruption, ds.space, substream(cfg.seed, StreamRole::occlusion));
    } else if (cfg.corruption.kind != CorruptionKind::none) {
        throw ConfigError("ray experiments support occlusion corruption only");
    }
    const auto samples = samples_from_view(view);
    std::vector<std::uint8_t> corrupted(samples.size(), 0);
    if (occMask) corrupted = occMask->bits;

    LatentRidgeConfig lc = *ds.fieldPrior;
    lc.lambdaLat = cfg.adapter.lambdaLat;
    const LatentRidgeField field(lc);

    RayDomainConfig rc = cfg.ray;
    rc.seed = substream(cfg.seed, StreamRole::hypotheses);
    rc.space = ds.space;
    rc.workers = cfg.workers;
    const auto report = run_ray_domain(std::span<const PixelSample>(samples), field, rc);

    ExperimentResult res;
    res.space = ds.space;
    const auto scores = score_views(field, report.finalModel, ds, &res.reconstructions);

    std::vector<PixelSample> clean;
    for (std::size_t i = 0; i < samples.size(); ++i)
        if (!corrupted[i]) clean.push_back(samples[i]);
    const auto naive = score_views(field, field.fit(samples, FitStrength::full), ds, nullptr);
    const auto oracle = score_views(field, field.fit(clean, FitStrength::full), ds, nullptr);

    std::vector<std::uint8_t> excluded(samples.size(), 1);
    for (auto id : report.consensusIds) excluded[id] = 0;
    const auto ex = exclusion_score(corrupted, excluded);

    res.metrics = {cfg.runId,      mean_of(scores.psnr), percentile_nearest_rank(scores.psnr, 5.0),
                   mean_of(scores.ssim), ex.precision,   ex.recall,
                   mean_of(naive.psnr),  mean_of(oracle.psnr), 0.0};
    for (std::size_t i = 0; i < samples.size(); ++i) res.consensus.push_back({i, !excluded[i], corrupted[i] != 0});
    res.inputs = std::move(ds.views);
    res.occlusionMasks = {std::move(occMask)};
    res.hypotheses = report.perHypothesis;
    res.bestIndex = report.best.index;
    return res;
}

inline ExperimentResult run_obs_experiment(const ExperimentConfig& cfg) {
    auto cd = apply_corruption(make_scene(cfg.scene, cfg.seed), cfg.corruption, cfg.seed);
    const SceneDataset& ds = cd.data;
    const GridField grid(GridConfig{cfg.adapter.gridResolution, cfg.adapter.tikhonov});

    ObsDomainConfig oc = cfg.obs;
    oc.seed = substream(cfg.seed, StreamRole::hypotheses);
    oc.space = ds.space;
    oc.workers = cfg.workers;
    const auto report = run_observation_domain(std::span<const ObservationView>(ds.views), grid, oc);

    ExperimentResult res;
    res.space = ds.space;
    const auto scores = score_views(grid, report.finalModel, ds, &res.reconstructions);

    std::vector<ObservationView> clean;
    for (const auto& v : ds.views)
        if (!v.corrupted) clean.push_back(v);
    const auto naive = score_views(grid, fit_grid(grid, ds.views, FitStrength::full), ds, nullptr);
    const auto oracle = score_views(grid, fit_grid(grid, clean, FitStrength::full), ds, nullptr);

    std::vector<std::uint8_t> corrupted(ds.views.size(), 0);
    std::vector<std::uint8_t> excluded(ds.views.size(), 1);
    for (std::size_t i = 0; i < ds.views.size(); ++i) {
        corrupted[i] = ds.views[i].corrupted ? 1 : 0;
        excluded[i] = std::binary_search(report.consensusIds.begin(), report.consensusIds.end(),
                                         static_cast<std::size_t>(ds.views[i].id))
                          ? 0
                          : 1;
    }
    const auto ex = exclusion_score(corrupted, excluded);

    res.metrics = {cfg.runId,      mean_of(scores.psnr), percentile_nearest_rank(scores.psnr, 5.0),
                   mean_of(scores.ssim), ex.precision,   ex.recall,
                   mean_of(naive.psnr),  mean_of(oracle.psnr), 0.0};
    for (std::size_t i = 0; i < ds.views.size(); ++i)
        res.consensus.push_back({static_cast<std::size_t>(ds.views[i].id), !excluded[i], corrupted[i] != 0});
    res.inputs = std::move(cd.data.views);
    res.occlusionMasks = std::move(cd.occlusionMasks);
    res.hypotheses = report.perHypothesis;
    res.bestIndex = report.best.index;
    return res;
}

inline std::string view_name(std::size_t id, const char* ext) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "view_%03zu.%s", id, ext);
    return buf;
}

}  // namespace detail

/// Runs one experiment entirely in memory. Errors keep their kind and gain
/// the run id as context.
[[nodiscard]] inline ExperimentResult run_experiment_in_memory(const ExperimentConfig& cfg) {
    const auto start = std::chrono::steady_clock::now();
    try {
        cfg.validate();
        auto res = cfg.mode == PipelineMode::ray ? detail::run_ray_experiment(cfg) : detail::run_obs_experiment(cfg);
        res.metrics.runtimeSeconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        return res;
    } catch (const Error& e) {
        throw Error(e.kind(), "run '" + cfg.runId + "': " + e.what());
    }
}

inline void write_metrics_csv(std::ostream& os, const MetricsRow& m, bool header = true) {
    if (header) os << kMetricsCsvHeader << '\n';
    os << m.runId << ',' << format_number(m.psnrMean) << ',' << format_number(m.psnrP5) << ','
       << format_number(m.ssimMean) << ',' << format_number(m.inlierPrecision) << ','
       << format_number(m.inlierRecall) << ',' << format_number(m.naivePsnr) << ',' << format_number(m.oraclePsnr)
       << '\n';
}

/// One JSON object per hypothesis: {"n", "score", "residual_sum", "initial_ids"}.
inline void write_hypotheses_ndjson(std::ostream& os, const std::vector<HypothesisDiagnostics>& hyps) {
    for (const auto& h : hyps) {
        nlohmann::ordered_json j;
        j["n"] = h.index;
        j["score"] = h.score;
        j["residual_sum"] = h.residualSum;
        j["initial_ids"] = h.initialSet;
        os << j.dump() << '\n';
    }
}

inline void write_consensus_csv(std::ostream& os, const std::vector<ConsensusRow>& rows) {
    os << "id,in_consensus,corrupted\n";
    for (const auto& r : rows) os << r.id << ',' << (r.inConsensus ? 1 : 0) << ',' << (r.corrupted ? 1 : 0) << '\n';
}

/// Writes every artifact of a finished run below `dir`:
///   inputs/view_NNN.ppm, inputs/view_NNN.pgm (occlusion patch, if any),
///   recon/view_NNN.ppm, consensus.csv, hypotheses.ndjson, metrics.csv and
///   timing.csv (the only file that varies between identical runs).
inline void write_experiment_artifacts(const ExperimentResult& res, const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir / "inputs");
    fs::create_directories(dir / "recon");
    for (std::size_t i = 0; i < res.inputs.size(); ++i) {
        const auto id = static_cast<std::size_t>(res.inputs[i].id);
        write_ppm(dir / "inputs" / detail::view_name(id, "ppm"), res.inputs[i].image, res.space);
        if (i < res.occlusionMasks.size() && res.occlusionMasks[i])
            write_pgm_mask(dir / "inputs" / detail::view_name(id, "pgm"), *res.occlusionMasks[i]);
        write_ppm(dir / "recon" / detail::view_name(id, "ppm"), res.reconstructions[i], res.space);
    }
    auto open = [&](const char* name) {
        std::ofstream os(dir / name, std::ios::binary);
        if (!os) throw ConfigError("cannot write " + (dir / name).string());
        return os;
    };
    {
        auto os = open("consensus.csv");
        write_consensus_csv(os, res.consensus);
    }
    {
        auto os = open("hypotheses.ndjson");
        write_hypotheses_ndjson(os, res.hypotheses);
    }
    {
        auto os = open("metrics.csv");
        write_metrics_csv(os, res.metrics);
    }
    {
        auto os = open("timing.csv");
        os << "run_id,runtime_seconds\n" << res.metrics.runId << ',' << format_number(res.metrics.runtimeSeconds) << '\n';
    }
}

/// Computes, then writes; nothing lands on disk if the run fails.
inline MetricsRow run_experiment(const ExperimentConfig& cfg) {
    const auto res = run_experiment_in_memory(cfg);
    write_experiment_artifacts(res, cfg.outputDir);
    return res.metrics;
}

}  // namespace ranrac
