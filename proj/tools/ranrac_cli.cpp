// ranrac command-line front end. Every subcommand is a thin wrapper over the
// header library; see README.md for the artifact layout.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ranrac/ranrac.hpp"

namespace fs = std::filesystem;
using namespace ranrac;

namespace {

struct Common {
    std::string config;
    std::uint64_t seed = 1;
    std::string out;
    unsigned workers = 0;
    std::string format = "csv";
    std::string in;
};

void add_common(CLI::App* sub, Common& c, bool needsIn = false) {
    sub->add_option("--config", c.config, "INI configuration file")->check(CLI::ExistingFile);
    sub->add_option("--seed", c.seed, "master seed")->capture_default_str();
    sub->add_option("--out", c.out, "output directory");
    sub->add_option("--workers", c.workers, "worker threads (0 = all cores)")->capture_default_str();
    sub->add_option("--format", c.format, "stdout format")->check(CLI::IsMember({"csv", "ndjson"}))->capture_default_str();
    auto* in = sub->add_option("--in", c.in, "input path");
    if (needsIn) in->required();
}

ColorSpace parse_space(const std::string& s) {
    if (s == "unit") return ColorSpace::unit();
    if (s == "signed") return ColorSpace::signed_unit();
    throw ConfigError("unknown colour space '" + s + "' (expected unit|signed)");
}

ExperimentConfig experiment_from(const Common& c, PipelineMode mode, const std::string& kind) {
    ExperimentConfig cfg;
    if (!c.config.empty()) {
        cfg = load_experiment_config(c.config);
        if (cfg.mode != mode) throw ConfigError("config mode does not match the subcommand");
    } else {
        cfg = mode == PipelineMode::ray ? ExperimentConfig::ray_defaults()
                                        : ExperimentConfig::obs_defaults(parse_corruption_kind(kind.empty() ? "occlusion" : kind));
    }
    if (!kind.empty() && mode == PipelineMode::obs) cfg.corruption.kind = parse_corruption_kind(kind);
    cfg.seed.masterSeed = c.seed;
    if (!c.out.empty()) cfg.outputDir = c.out;
    cfg.workers = c.workers;
    cfg.validate();
    return cfg;
}

void print_metrics(const MetricsRow& m, const std::string& format) {
    if (format == "csv") {
        write_metrics_csv(std::cout, m);
        return;
    }
    nlohmann::ordered_json j;
    j["run_id"] = m.runId;
    j["psnr_mean"] = m.psnrMean;
    j["psnr_p5"] = m.psnrP5;
    j["ssim_mean"] = m.ssimMean;
    j["inlier_precision"] = m.inlierPrecision;
    j["inlier_recall"] = m.inlierRecall;
    j["naive_psnr"] = m.naivePsnr;
    j["oracle_psnr"] = m.oraclePsnr;
    j["runtime_seconds"] = m.runtimeSeconds;
    std::cout << j.dump() << '\n';
}

void print_sweep(std::ostream& os, const std::vector<SweepRow>& rows, const std::string& format) {
    if (format == "csv") {
        write_sweep_csv(os, rows);
        return;
    }
    for (const auto& r : rows) {
        nlohmann::ordered_json j;
        j["param"] = r.param;
        j["expected"] = r.expected;
        j["mc_mean"] = r.mcMean ? nlohmann::json(*r.mcMean) : nlohmann::json(nullptr);
        j["mc_stderr"] = r.mcStdError ? nlohmann::json(*r.mcStdError) : nlohmann::json(nullptr);
        os << j.dump() << '\n';
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ranrac: fuzzy RANSAC over stand-in field models"};
    app.require_subcommand(1);

    Common occ, scene, corrupt, ray, obs, conv, met;
    std::string occMask, occSpace = "unit";
    auto* cOcc = app.add_subcommand("occlude", "add one rejection-sampled noise patch to an image");
    add_common(cOcc, occ, true);
    cOcc->add_option("--mask", occMask, "object mask (PGM)")->required()->check(CLI::ExistingFile);
    cOcc->add_option("--space", occSpace, "colour space of the image: unit|signed")->capture_default_str();

    auto* cScene = app.add_subcommand("make-scene", "synthesise a dataset directory");
    add_common(cScene, scene);
    std::string sceneMode = "obs";
    cScene->add_option("--mode", sceneMode, "scene defaults: ray|obs")->check(CLI::IsMember({"ray", "obs"}))->capture_default_str();

    auto* cCorrupt = app.add_subcommand("corrupt", "corrupt a seeded subset of a dataset's views");
    add_common(cCorrupt, corrupt, true);
    std::string corruptKind;
    cCorrupt->add_option("--kind", corruptKind, "none|occlusion|pose|blur (overrides the config)");

    auto* cRay = app.add_subcommand("run-ray", "ray-domain consensus on one occluded view");
    add_common(cRay, ray);

    auto* cObs = app.add_subcommand("run-obs", "observation-domain consensus on a multi-view dataset");
    add_common(cObs, obs);
    std::string obsKind;
    cObs->add_option("--kind", obsKind, "corruption family: none|occlusion|pose|blur (default occlusion)");

    auto* cConv = app.add_subcommand("converge", "clean-set expectation and iteration-bound sweeps");
    add_common(cConv, conv);
    long trials = -1;
    cConv->add_option("--trials", trials, "Monte Carlo trials per row (overrides the config)");

    auto* cMet = app.add_subcommand("metrics", "PSNR and SSIM between two PPM rasters");
    add_common(cMet, met, true);
    std::string ref, metSpace = "unit";
    cMet->add_option("--ref", ref, "reference PPM")->required()->check(CLI::ExistingFile);
    cMet->add_option("--space", metSpace, "colour space: unit|signed")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*cOcc) {
            const ColorSpace space = parse_space(occSpace);
            ImageRaster img = read_ppm(occ.in, space);
            img.objectMask = read_pgm_mask(occMask).bits;
            OcclusionSpec spec = OcclusionSpec::defaults_for(space);
            if (!occ.config.empty()) {
                auto cfg = load_experiment_config(occ.config);
                spec = cfg.corruption.occlusion;
                spec.space = space;
            }
            auto res = generate_occlusion(img, spec, substream(SeedSpec{occ.seed, 0}, StreamRole::occlusion));
            const fs::path dir = occ.out.empty() ? fs::path(".") : fs::path(occ.out);
            fs::create_directories(dir);
            write_ppm(dir / "occluded.ppm", res.occludedImage, space);
            write_pgm_mask(dir / "occlusion.pgm", res.occlusionMask);
            if (occ.format == "csv") {
                std::cout << "image_occlusion,object_occlusion,attempts\n"
                          << format_number(res.achievedImageOcclusion) << ','
                          << format_number(res.achievedObjectOcclusion) << ',' << res.attempts << '\n';
            } else {
                nlohmann::ordered_json j;
                j["image_occlusion"] = res.achievedImageOcclusion;
                j["object_occlusion"] = res.achievedObjectOcclusion;
                j["attempts"] = res.attempts;
                std::cout << j.dump() << '\n';
            }
        } else if (*cScene) {
            auto cfg = experiment_from(scene, sceneMode == "ray" ? PipelineMode::ray : PipelineMode::obs,
                                       sceneMode == "ray" ? "" : "none");
            CorruptedDataset cd;
            cd.data = make_scene(cfg.scene, cfg.seed);
            cd.occlusionMasks.resize(cd.data.views.size());
            write_dataset(cfg.outputDir, cd);
            std::cout << "wrote " << cd.data.views.size() << " views to " << cfg.outputDir.string() << '\n';
        } else if (*cCorrupt) {
            auto base = read_dataset(corrupt.in);
            CorruptionSpec spec = ExperimentConfig::obs_defaults(CorruptionKind::occlusion).corruption;
            if (!corrupt.config.empty()) spec = load_experiment_config(corrupt.config).corruption;
            if (!corruptKind.empty()) spec.kind = parse_corruption_kind(corruptKind);
            auto cd = apply_corruption(base.data, spec, SeedSpec{corrupt.seed, 0});
            for (std::size_t i = 0; i < cd.occlusionMasks.size(); ++i)
                if (!cd.occlusionMasks[i]) cd.occlusionMasks[i] = base.occlusionMasks[i];
            const fs::path dir = corrupt.out.empty() ? fs::path(corrupt.in) : fs::path(corrupt.out);
            write_dataset(dir, cd);
            std::cout << "corrupted " << cd.data.corrupted_count() << " of " << cd.data.views.size() << " views\n";
        } else if (*cRay) {
            print_metrics(run_experiment(experiment_from(ray, PipelineMode::ray, "")), ray.format);
        } else if (*cObs) {
            print_metrics(run_experiment(experiment_from(obs, PipelineMode::obs, obsKind)), obs.format);
        } else if (*cConv) {
            ConvergeConfig cc;
            if (!conv.config.empty()) {
                std::ifstream in(conv.config);
                cc = parse_converge_config(in, conv.config);
            }
            if (trials >= 0) cc.trials = trials;
            SweepOptions opt;
            opt.trials = cc.trials;
            opt.seed = substream(SeedSpec{conv.seed, 0}, StreamRole::monte_carlo);
            opt.workers = conv.workers;
            const auto rows = sweep(cc.entries(), opt);
            if (!conv.out.empty()) {
                fs::create_directories(conv.out);
                std::ofstream os(fs::path(conv.out) / (conv.format == "csv" ? "converge.csv" : "converge.ndjson"));
                print_sweep(os, rows, conv.format);
            } else {
                print_sweep(std::cout, rows, conv.format);
            }
        } else if (*cMet) {
            const ColorSpace space = parse_space(metSpace);
            const auto a = read_ppm(met.in, space);
            const auto b = read_ppm(ref, space);
            const double p = psnr(a, b, space.span());
            const double s = ssim(a, b, space.span());
            if (met.format == "csv") {
                std::cout << "psnr,ssim\n" << format_number(p) << ',' << format_number(s) << '\n';
            } else {
                nlohmann::ordered_json j;
                j["psnr"] = p;
                j["ssim"] = s;
                std::cout << j.dump() << '\n';
            }
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.exit_code();
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
