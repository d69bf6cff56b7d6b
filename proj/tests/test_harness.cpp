#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "ranrac/harness/config.hpp"
#include "ranrac/harness/corruption.hpp"
#include "ranrac/harness/dataset_io.hpp"
#include "ranrac/harness/experiment.hpp"
#include "ranrac/harness/metrics.hpp"
#include "ranrac/harness/pnm_io.hpp"
#include "ranrac/harness/scene.hpp"
#include "ranrac/model/grid_field.hpp"

using namespace ranrac;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("ranrac_test_harness_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Deterministic test images, also reproduced in the SSIM reference script:
// a(x, y, c) = 0.5 + 0.4 sin(0.3x + 0.7y + c)
// b(x, y, c) = clip(a + 0.15 cos(0.9x - 0.4yc), 0, 1)
std::pair<ImageRaster, ImageRaster> formula_pair() {
    ImageRaster a(24, 20), b(24, 20);
    for (int y = 0; y < 20; ++y)
        for (int x = 0; x < 24; ++x)
            for (int c = 0; c < 3; ++c) {
                const double v = 0.5 + 0.4 * std::sin(0.3 * x + 0.7 * y + c);
                a.at(x, y)[c] = v;
                b.at(x, y)[c] = std::clamp(v + 0.15 * std::cos(0.9 * x - 0.4 * y * c), 0.0, 1.0);
            }
    return {a, b};
}

ExperimentConfig small_obs_config(CorruptionKind kind) {
    auto cfg = ExperimentConfig::obs_defaults(kind);
    cfg.scene.width = 24;
    cfg.scene.height = 24;
    cfg.scene.objectRadiusX = 7.2;
    cfg.scene.objectRadiusY = 6.0;
    cfg.scene.views = 20;
    cfg.adapter.gridResolution = 32;
    cfg.obs.observationCount = 10;
    cfg.obs.hypothesisCount = 8;
    cfg.runId = "small";
    return cfg;
}

}  // namespace

// ---------------------------------------------------------------------------
// metrics

TEST(Psnr, IdenticalIsCap) {
    const ImageRaster a(8, 8, {0.1, 0.2, 0.3});
    EXPECT_EQ(psnr(a, a, 1.0), 99.0);
}

TEST(Psnr, UniformErrorTwentyDb) {
    const ImageRaster a(8, 8, {0.5, 0.5, 0.5});
    const ImageRaster b(8, 8, {0.6, 0.4, 0.6});
    EXPECT_NEAR(psnr(a, b, 1.0), 20.0, 1e-9);
}

TEST(Psnr, MatchesScalarLoop) {
    Stream rng({1, 7});
    ImageRaster a(13, 9), b(13, 9);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (int c = 0; c < 3; ++c) {
            a.pixels[i][c] = rng.uniform(-1, 1);
            b.pixels[i][c] = rng.uniform(-1, 1);
        }
    long double se = 0.0L;
    int n = 0;
    for (int y = 0; y < 9; ++y)
        for (int x = 0; x < 13; ++x)
            for (int c = 0; c < 3; ++c) {
                const long double d = static_cast<long double>(a.at(x, y)[c]) - b.at(x, y)[c];
                se += d * d;
                ++n;
            }
    const double want = 10.0 * std::log10(4.0 / static_cast<double>(se / n));
    EXPECT_NEAR(psnr(a, b, 2.0), want, 1e-9);
}

TEST(Psnr, ShapeMismatchIsError) {
    EXPECT_THROW((void)psnr(ImageRaster(4, 4), ImageRaster(4, 5), 1.0), ConfigError);
}

TEST(Ssim, IdenticalIsOne) {
    const auto [a, b] = formula_pair();
    EXPECT_EQ(ssim(a, a), 1.0);
}

TEST(Ssim, ConstantOffsetBetweenZeroAndOne) {
    const ImageRaster a(16, 16, {0.5, 0.5, 0.5});
    const ImageRaster b(16, 16, {0.55, 0.55, 0.55});
    const double s = ssim(a, b);
    EXPECT_LT(s, 1.0);
    EXPECT_GT(s, 0.0);
}

TEST(Ssim, Symmetric) {
    const auto [a, b] = formula_pair();
    EXPECT_LE(std::abs(ssim(a, b) - ssim(b, a)), 1e-12);
}

TEST(Ssim, MatchesReferenceImplementation) {
    // skimage.metrics.structural_similarity(a, b, channel_axis=-1,
    //   gaussian_weights=True, sigma=1.5, use_sample_covariance=False, data_range=...)
    const auto [a, b] = formula_pair();
    EXPECT_NEAR(ssim(a, b, 1.0), 0.9179254241703463, 1e-6);
    ImageRaster sa = a, sb = b;
    for (auto& p : sa.pixels)
        for (auto& v : p) v = 2 * v - 1;
    for (auto& p : sb.pixels)
        for (auto& v : p) v = 2 * v - 1;
    EXPECT_NEAR(ssim(sa, sb, 2.0), 0.7975685442528876, 1e-6);
}

TEST(Ssim, TooSmallIsError) {
    EXPECT_THROW((void)ssim(ImageRaster(10, 30), ImageRaster(10, 30)), ConfigError);
}

TEST(Percentile, NearestRank) {
    EXPECT_EQ(percentile_nearest_rank({5, 1, 4, 2, 3}, 5), 1.0);
    EXPECT_EQ(percentile_nearest_rank({5, 1, 4, 2, 3}, 50), 3.0);
    std::vector<double> v;
    for (int i = 1; i <= 40; ++i) v.push_back(i);
    EXPECT_EQ(percentile_nearest_rank(v, 5), 2.0);
}

// ---------------------------------------------------------------------------
// PNM I/O

TEST(Pnm, QuantizedRasterRoundTripsExactly) {
    const auto dir = scratch("pnm");
    for (const ColorSpace cs : {ColorSpace::unit(), ColorSpace::signed_unit()}) {
        Stream rng({2, 2});
        ImageRaster img(7, 5);
        for (auto& p : img.pixels)
            for (auto& v : p) v = rng.uniform(cs.low, cs.high);
        quantize_in_place(img, cs);
        write_ppm(dir / "a.ppm", img, cs);
        EXPECT_EQ(read_ppm(dir / "a.ppm", cs).pixels, img.pixels);
    }
    MaskRaster m(9, 4);
    m.bits[3] = m.bits[20] = 1;
    write_pgm_mask(dir / "m.pgm", m);
    EXPECT_EQ(read_pgm_mask(dir / "m.pgm"), m);
    const auto bytes = slurp(dir / "m.pgm");
    EXPECT_EQ(bytes.substr(0, 2), "P5");
    EXPECT_EQ(static_cast<unsigned char>(bytes[bytes.size() - 36 + 3]), 255);
}

TEST(Pnm, TruncatedFileIsError) {
    const auto dir = scratch("pnm_bad");
    std::ofstream(dir / "bad.ppm", std::ios::binary) << "P6\n4 4\n255\nabc";
    EXPECT_THROW((void)read_ppm(dir / "bad.ppm", ColorSpace::unit()), ConfigError);
}

// ---------------------------------------------------------------------------
// scenes and corruption

TEST(MakeScene, SameSeedSameDataset) {
    for (const auto& p : {SceneParams::bandlimited(), SceneParams::shapes()}) {
        const auto a = make_scene(p, {3, 0});
        const auto b = make_scene(p, {3, 0});
        EXPECT_EQ(a.views, b.views);
        EXPECT_EQ(a.groundTruth, b.groundTruth);
        EXPECT_NE(a.views, make_scene(p, {4, 0}).views);
    }
}

TEST(MakeScene, ZeroBandwidthIsConstant) {
    SceneParams p = SceneParams::bandlimited();
    p.bandwidth = 0.0;
    p.width = 32;
    p.height = 32;
    const auto ds = make_scene(p, {5, 0});
    const auto& t = ds.groundTruth[0];
    for (const auto& px : t.pixels) EXPECT_EQ(px, t.pixels[0]);
}

TEST(MakeScene, UnknownGeneratorIsConfigError) {
    EXPECT_THROW((void)make_scene("voronoi", SceneParams::bandlimited(), {1, 0}), ConfigError);
}

TEST(MakeScene, CleanFitGeneralisesToHeldOutView) {
    SceneParams p = SceneParams::shapes();
    p.views = 33;
    const auto ds = make_scene(p, {6, 0});
    const std::vector<ObservationView> train(ds.views.begin(), ds.views.begin() + 32);
    const GridField grid(GridConfig{64, 1e-2});
    const auto state = fit_grid(grid, train, FitStrength::full);
    const auto& truth = ds.groundTruth[32];
    const auto img = render_view(grid, state, ds.truePoses[32], truth.width, truth.height, ds.space);
    EXPECT_GE(psnr(img, truth, ds.space.span()), 40.0);
}

TEST(ApplyCorruption, FractionZeroUnchanged) {
    const auto ds = make_scene(SceneParams::shapes(), {7, 0});
    const auto cd = apply_corruption(ds, CorruptionSpec{CorruptionKind::blur, 0.0, 10.0, 3, {}}, {7, 0});
    EXPECT_EQ(cd.data.views, ds.views);
    EXPECT_EQ(cd.data.corrupted_count(), 0U);
}

TEST(ApplyCorruption, TenPercentOfFortyIsFour) {
    const auto ds = make_scene(SceneParams::shapes(), {8, 0});
    for (auto kind : {CorruptionKind::occlusion, CorruptionKind::pose, CorruptionKind::blur}) {
        CorruptionSpec spec;
        spec.kind = kind;
        spec.occlusion = OcclusionSpec::defaults_for(ColorSpace::unit());
        EXPECT_EQ(apply_corruption(ds, spec, {8, 0}).data.corrupted_count(), 4U) << to_string(kind);
    }
}

TEST(ApplyCorruption, BlurIsLocalToFlaggedViews) {
    const auto ds = make_scene(SceneParams::shapes(), {9, 0});
    const auto cd = apply_corruption(ds, CorruptionSpec{CorruptionKind::blur, 0.1, 10.0, 3, {}}, {9, 0});
    for (std::size_t i = 0; i < ds.views.size(); ++i) {
        if (cd.data.views[i].corrupted)
            EXPECT_NE(cd.data.views[i].image, ds.views[i].image);
        else
            EXPECT_EQ(cd.data.views[i], ds.views[i]);
        EXPECT_EQ(cd.data.views[i].pose, ds.views[i].pose);
    }
}

TEST(ApplyCorruption, PoseMovesOnlyRecordedPose) {
    const auto ds = make_scene(SceneParams::shapes(), {10, 0});
    const auto cd = apply_corruption(ds, CorruptionSpec{CorruptionKind::pose, 0.1, 10.0, 3, {}}, {10, 0});
    for (std::size_t i = 0; i < ds.views.size(); ++i) {
        EXPECT_EQ(cd.data.views[i].image, ds.views[i].image);
        EXPECT_EQ(cd.data.truePoses[i], ds.truePoses[i]);
        if (cd.data.views[i].corrupted) {
            const double dx = cd.data.views[i].pose[0] - ds.views[i].pose[0];
            const double dy = cd.data.views[i].pose[1] - ds.views[i].pose[1];
            EXPECT_GT(std::hypot(dx, dy), 2.0);
        }
    }
}

TEST(ApplyCorruption, FractionOneRejected) {
    const auto ds = make_scene(SceneParams::shapes(), {11, 0});
    EXPECT_THROW((void)apply_corruption(ds, CorruptionSpec{CorruptionKind::blur, 1.0, 10.0, 3, {}}, {11, 0}),
                 ConfigError);
}

TEST(BoxBlur, ConstantImageFixedAndMeanPreservedInside) {
    const ImageRaster flat(9, 9, {0.3, 0.3, 0.3});
    const auto out = box_blur(flat, 2);
    for (const auto& p : out.pixels)
        for (int c = 0; c < 3; ++c) EXPECT_NEAR(p[c], 0.3, 1e-15);
    ImageRaster spike(9, 9);
    spike.at(4, 4) = {1, 1, 1};
    EXPECT_NEAR(box_blur(spike, 1).at(4, 4)[0], 1.0 / 9.0, 1e-15);
    EXPECT_NEAR(box_blur(spike, 1).at(3, 5)[0], 1.0 / 9.0, 1e-15);
    EXPECT_EQ(box_blur(spike, 1).at(2, 4)[0], 0.0);
}

TEST(DatasetIo, RoundTrip) {
    const auto dir = scratch("dataset");
    auto spec = CorruptionSpec{CorruptionKind::occlusion, 0.1, 10.0, 3, OcclusionSpec::defaults_for(ColorSpace::unit())};
    const auto cd = apply_corruption(make_scene(SceneParams::shapes(), {12, 0}), spec, {12, 0});
    write_dataset(dir, cd);
    const auto back = read_dataset(dir);
    EXPECT_EQ(back.data.generator, cd.data.generator);
    EXPECT_EQ(back.data.views, cd.data.views);
    EXPECT_EQ(back.data.truePoses, cd.data.truePoses);
    EXPECT_EQ(back.occlusionMasks, cd.occlusionMasks);
    ASSERT_EQ(back.data.groundTruth.size(), cd.data.groundTruth.size());
    for (std::size_t v = 0; v < cd.data.groundTruth.size(); ++v)
        for (std::size_t i = 0; i < cd.data.groundTruth[v].size(); ++i)
            for (int c = 0; c < 3; ++c)
                EXPECT_NEAR(back.data.groundTruth[v].pixels[i][c], cd.data.groundTruth[v].pixels[i][c], 0.5 / 255 + 1e-12);
}

// ---------------------------------------------------------------------------
// config

TEST(Config, ParsesSectionsAndKeepsDefaults) {
    std::istringstream in(
        "[experiment]\nmode = obs\nrun_id = t1\nseed = 17\n"
        "[corruption]\nkind = pose\npose_offset = 8\n"
        "[engine]\nsample_count = 20\nimage_margin = 0.9\n");
    const auto cfg = parse_experiment_config(in);
    EXPECT_EQ(cfg.mode, PipelineMode::obs);
    EXPECT_EQ(cfg.runId, "t1");
    EXPECT_EQ(cfg.seed.masterSeed, 17U);
    EXPECT_EQ(cfg.corruption.kind, CorruptionKind::pose);
    EXPECT_EQ(cfg.corruption.poseOffset, 8.0);
    EXPECT_EQ(cfg.obs.observationCount, 20U);
    EXPECT_EQ(cfg.obs.hypothesisCount, 50U);
    EXPECT_EQ(cfg.obs.imageMargin, 0.9);
    EXPECT_EQ(cfg.obs.pixelMargin, 0.15);
    EXPECT_EQ(cfg.scene.generator, "shapes");
}

TEST(Config, RayDefaults) {
    std::istringstream in("[experiment]\nmode = ray\n");
    const auto cfg = parse_experiment_config(in);
    EXPECT_EQ(cfg.ray.sampleCount, 90U);
    EXPECT_EQ(cfg.ray.hypothesisCount, 2000U);
    EXPECT_EQ(cfg.ray.inlierMargin, 0.25);
}

TEST(Config, UnknownKeyOrSectionRejected) {
    std::istringstream a("[engine]\nsample_cont = 20\n");
    EXPECT_THROW((void)parse_experiment_config(a), ConfigError);
    std::istringstream b("[engien]\nsample_count = 20\n");
    EXPECT_THROW((void)parse_experiment_config(b), ConfigError);
}

TEST(Config, BadValuesRejected) {
    std::istringstream a("[engine]\nsample_count = many\n");
    EXPECT_THROW((void)parse_experiment_config(a), ConfigError);
    std::istringstream b("[experiment]\nmode = both\n");
    EXPECT_THROW((void)parse_experiment_config(b), ConfigError);
    std::istringstream c("[experiment]\nmode = obs\n[corruption]\nfraction = 1\n");
    EXPECT_THROW((void)parse_experiment_config(c), ConfigError);
    EXPECT_THROW((void)load_experiment_config("/nonexistent/ranrac.ini"), ConfigError);
}

TEST(Config, ConvergeSection) {
    std::istringstream in("[converge]\ntotal = 4096\noccluded = 1024\nm_from = 10\nm_to = 30\nm_step = 10\n");
    const auto c = parse_converge_config(in);
    EXPECT_EQ(c.total, 4096);
    EXPECT_EQ(c.entries().size(), 3U);
    std::istringstream half("[converge]\np = 0.99\n");
    EXPECT_THROW((void)parse_converge_config(half), ConfigError);
}

TEST(Config, SamplesParse) {
    for (const char* name : {"ray_occlusion.ini", "obs_occlusion.ini", "obs_pose.ini", "obs_blur.ini"})
        EXPECT_NO_THROW((void)load_experiment_config(fs::path(RANRAC_SAMPLES_DIR) / "configs" / name)) << name;
}

// ---------------------------------------------------------------------------
// experiments

TEST(Exclusion, Conventions) {
    EXPECT_EQ(exclusion_score({0, 0, 0, 0}, {0, 0, 0, 0}).recall, 1.0);
    EXPECT_EQ(exclusion_score({0, 0, 0, 0}, {0, 0, 0, 0}).precision, 1.0);
    EXPECT_EQ(exclusion_score({0, 0, 0, 0}, {1, 0, 0, 0}).precision, 0.75);
    EXPECT_EQ(exclusion_score({1, 1, 0, 0}, {0, 0, 0, 0}).precision, 1.0);
    EXPECT_EQ(exclusion_score({1, 1, 0, 0}, {0, 0, 0, 0}).recall, 0.0);
    const auto s = exclusion_score({1, 1, 0, 0}, {1, 0, 1, 0});
    EXPECT_EQ(s.precision, 0.5);
    EXPECT_EQ(s.recall, 0.5);
}

TEST(Experiment, FractionZeroRecallOne) {
    auto cfg = small_obs_config(CorruptionKind::blur);
    cfg.corruption.fraction = 0.0;
    const auto res = run_experiment_in_memory(cfg);
    EXPECT_EQ(res.metrics.inlierRecall, 1.0);
    std::size_t kept = 0;
    for (const auto& r : res.consensus) kept += r.inConsensus ? 1U : 0U;
    EXPECT_EQ(res.metrics.inlierPrecision, static_cast<double>(kept) / 20.0);
}

TEST(Experiment, ArtifactsByteIdenticalAcrossRunsAndWorkers) {
    const auto base = scratch("determinism");
    auto cfg = small_obs_config(CorruptionKind::occlusion);
    std::vector<fs::path> dirs;
    for (unsigned w : {1U, 1U, 2U, 8U}) {
        cfg.workers = w;
        cfg.outputDir = base / ("run" + std::to_string(dirs.size()));
        (void)run_experiment(cfg);
        dirs.push_back(cfg.outputDir);
    }
    for (const char* f : {"consensus.csv", "hypotheses.ndjson", "metrics.csv", "recon/view_000.ppm"})
        for (std::size_t i = 1; i < dirs.size(); ++i) EXPECT_EQ(slurp(dirs[i] / f), slurp(dirs[0] / f)) << f;
    EXPECT_EQ(slurp(dirs[0] / "metrics.csv").substr(0, std::string(kMetricsCsvHeader).size()), kMetricsCsvHeader);
}

TEST(Experiment, NdjsonSchema) {
    std::ostringstream os;
    write_hypotheses_ndjson(os, {{3, 7, 0.5, {4, 1}}});
    EXPECT_EQ(os.str(), "{\"n\":3,\"score\":7,\"residual_sum\":0.5,\"initial_ids\":[4,1]}\n");
}

TEST(Experiment, ErrorsCarryRunContextAndKind) {
    auto cfg = small_obs_config(CorruptionKind::occlusion);
    cfg.corruption.occlusion.bandLow = 0.98;
    cfg.corruption.occlusion.bandHigh = 0.99;
    cfg.corruption.occlusion.maxAttempts = 3;
    cfg.runId = "ctx";
    try {
        (void)run_experiment(cfg);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.exit_code(), 4);
        EXPECT_NE(std::string(e.what()).find("run 'ctx'"), std::string::npos);
    }
}

TEST(Experiment, RayModeRejectsViewCorruption) {
    auto cfg = ExperimentConfig::ray_defaults();
    cfg.corruption.kind = CorruptionKind::blur;
    try {
        (void)run_experiment_in_memory(cfg);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.exit_code(), 2);
    }
}
