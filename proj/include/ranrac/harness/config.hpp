#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "ranrac/analytics/convergence.hpp"
#include "ranrac/core/errors.hpp"
#include "ranrac/harness/experiment.hpp"

namespace ranrac {

// Experiment files are INI-style:
//
//   [experiment]  mode = ray|obs, run_id, seed, output_dir, workers
//   [scene]       generator, width, height, views, pose_jitter, noise_sigma,
//                 object_radius_x, object_radius_y, feature_count, bandwidth,
//                 amplitude, texture_frequency, texture_amplitude, texture_terms
//   [corruption]  kind = none|occlusion|pose|blur, fraction, pose_offset,
//                 blur_radius, target_image_occlusion, band_low, band_high,
//                 center_spike_offset, center_spike_sigma, size_sigma,
//                 noise_sigma, max_attempts
//   [engine]      sample_count, hypothesis_count, inlier_margin, pixel_margin,
//                 image_margin, scope = held_out|all
//   [adapter]     lambda_lat, grid_resolution, tikhonov
//
// Unset keys keep the defaults of the selected mode; unknown sections or
// keys are errors. A [converge] section configures the `converge` command.

namespace detail {

using boost::property_tree::ptree;

class IniReader {
public:
    explicit IniReader(ptree tree) : tree_(std::move(tree)) {}

    void check_known(const std::map<std::string, std::set<std::string>>& known) const {
        for (const auto& [section, body] : tree_) {
            auto it = known.find(section);
            if (it == known.end()) throw ConfigError("unknown config section [" + section + "]");
            if (!body.data().empty()) throw ConfigError("config key '" + section + "' outside any section");
            for (const auto& [key, value] : body)
                if (!it->second.count(key)) throw ConfigError("unknown key '" + key + "' in [" + section + "]");
        }
    }

    [[nodiscard]] bool has_section(const std::string& s) const { return tree_.find(s) != tree_.not_found(); }

    template <class T>
    void get(const std::string& section, const std::string& key, T& out) const {
        const auto v = tree_.get_optional<std::string>(ptree::path_type(section + "/" + key, '/'));
        if (!v) return;
        std::istringstream is(*v);
        T parsed{};
        if constexpr (std::is_same_v<T, std::string>) {
            parsed = *v;
        } else if constexpr (std::is_same_v<T, bool>) {
            if (*v == "true" || *v == "1") parsed = true;
            else if (*v == "false" || *v == "0") parsed = false;
            else throw ConfigError("[" + section + "] " + key + ": expected true/false, got '" + *v + "'");
        } else {
            is >> parsed;
            if (!is || !(is >> std::ws).eof())
                throw ConfigError("[" + section + "] " + key + ": cannot parse '" + *v + "'");
            if constexpr (std::is_unsigned_v<T>)
                if (v->find('-') != std::string::npos)
                    throw ConfigError("[" + section + "] " + key + ": must be nonnegative");
        }
        out = parsed;
    }

private:
    ptree tree_;
};

inline IniReader read_ini(std::istream& in, const std::string& source) {
    ptree tree;
    try {
        boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(source + ": " + e.message() + " (line " + std::to_string(e.line()) + ")");
    }
    return IniReader(std::move(tree));
}

inline ValidationScope parse_scope(const std::string& s) {
    if (s == "held_out") return ValidationScope::held_out;
    if (s == "all") return ValidationScope::all;
    throw ConfigError("unknown validation scope '" + s + "' (expected held_out|all)");
}

}  // namespace detail

[[nodiscard]] inline ExperimentConfig parse_experiment_config(std::istream& in, const std::string& source = "config") {
    const auto ini = detail::read_ini(in, source);
    ini.check_known({
        {"experiment", {"mode", "run_id", "seed", "output_dir", "workers"}},
        {"scene",
         {"generator", "width", "height", "views", "pose_jitter", "noise_sigma", "object_radius_x",
          "object_radius_y", "feature_count", "bandwidth", "amplitude", "texture_frequency", "texture_amplitude",
          "texture_terms"}},
        {"corruption",
         {"kind", "fraction", "pose_offset", "blur_radius", "target_image_occlusion", "band_low", "band_high",
          "center_spike_offset", "center_spike_sigma", "size_sigma", "noise_sigma", "max_attempts"}},
        {"engine", {"sample_count", "hypothesis_count", "inlier_margin", "pixel_margin", "image_margin", "scope"}},
        {"adapter", {"lambda_lat", "grid_resolution", "tikhonov"}},
        {"converge",
         {"total", "occluded", "iterations", "m_from", "m_to", "m_step", "trials", "p", "t", "m"}},
    });

    std::string mode = "ray";
    ini.get("experiment", "mode", mode);
    std::string kind;
    ini.get("corruption", "kind", kind);
    ExperimentConfig cfg;
    if (mode == "ray") {
        cfg = ExperimentConfig::ray_defaults();
    } else if (mode == "obs") {
        cfg = ExperimentConfig::obs_defaults(kind.empty() ? CorruptionKind::occlusion : parse_corruption_kind(kind));
    } else {
        throw ConfigError("unknown experiment mode '" + mode + "' (expected ray|obs)");
    }
    if (!kind.empty()) cfg.corruption.kind = parse_corruption_kind(kind);

    std::string out = cfg.outputDir.string();
    ini.get("experiment", "run_id", cfg.runId);
    ini.get("experiment", "seed", cfg.seed.masterSeed);
    ini.get("experiment", "output_dir", out);
    ini.get("experiment", "workers", cfg.workers);
    cfg.outputDir = out;

    auto& s = cfg.scene;
    ini.get("scene", "generator", s.generator);
    ini.get("scene", "width", s.width);
    ini.get("scene", "height", s.height);
    ini.get("scene", "views", s.views);
    ini.get("scene", "pose_jitter", s.poseJitter);
    ini.get("scene", "noise_sigma", s.noiseSigma);
    ini.get("scene", "object_radius_x", s.objectRadiusX);
    ini.get("scene", "object_radius_y", s.objectRadiusY);
    ini.get("scene", "feature_count", s.featureCount);
    ini.get("scene", "bandwidth", s.bandwidth);
    ini.get("scene", "amplitude", s.amplitude);
    ini.get("scene", "texture_frequency", s.textureFrequency);
    ini.get("scene", "texture_amplitude", s.textureAmplitude);
    ini.get("scene", "texture_terms", s.textureTerms);

    auto& c = cfg.corruption;
    auto& o = c.occlusion;
    ini.get("corruption", "fraction", c.fraction);
    ini.get("corruption", "pose_offset", c.poseOffset);
    ini.get("corruption", "blur_radius", c.blurRadius);
    ini.get("corruption", "target_image_occlusion", o.targetImageOcclusion);
    ini.get("corruption", "band_low", o.bandLow);
    ini.get("corruption", "band_high", o.bandHigh);
    ini.get("corruption", "center_spike_offset", o.centerSpikeOffset);
    ini.get("corruption", "center_spike_sigma", o.centerSpikeSigma);
    ini.get("corruption", "size_sigma", o.sizeSigma);
    ini.get("corruption", "noise_sigma", o.noiseSigma);
    ini.get("corruption", "max_attempts", o.maxAttempts);

    std::string scope;
    if (cfg.mode == PipelineMode::ray) {
        ini.get("engine", "sample_count", cfg.ray.sampleCount);
        ini.get("engine", "hypothesis_count", cfg.ray.hypothesisCount);
        ini.get("engine", "inlier_margin", cfg.ray.inlierMargin);
        ini.get("engine", "scope", scope);
        if (!scope.empty()) cfg.ray.scope = detail::parse_scope(scope);
    } else {
        ini.get("engine", "sample_count", cfg.obs.observationCount);
        ini.get("engine", "hypothesis_count", cfg.obs.hypothesisCount);
        ini.get("engine", "pixel_margin", cfg.obs.pixelMargin);
        ini.get("engine", "image_margin", cfg.obs.imageMargin);
        ini.get("engine", "scope", scope);
        if (!scope.empty()) cfg.obs.scope = detail::parse_scope(scope);
    }
    ini.get("adapter", "lambda_lat", cfg.adapter.lambdaLat);
    ini.get("adapter", "grid_resolution", cfg.adapter.gridResolution);
    ini.get("adapter", "tikhonov", cfg.adapter.tikhonov);
    cfg.validate();
    return cfg;
}

[[nodiscard]] inline ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    return parse_experiment_config(in, path.string());
}

/// [converge] section: an M sweep of clean-set expectations at a fixed pool,
/// or (when p and t are given) a single iteration-bound query.
struct ConvergeConfig {
    long total = 100;
    long occluded = 20;
    long iterations = 1;
    long mFrom = 1;
    long mTo = 10;
    long mStep = 1;
    long trials = 0;
    std::optional<IterationQuery> iterationQuery;

    [[nodiscard]] std::vector<SweepEntry> entries() const {
        if (iterationQuery) return {{"M=" + std::to_string(iterationQuery->sampleSize), *iterationQuery}};
        return sample_size_sweep(total, occluded, iterations, mFrom, mTo, mStep);
    }
};

[[nodiscard]] inline ConvergeConfig parse_converge_config(std::istream& in, const std::string& source = "config") {
    const auto ini = detail::read_ini(in, source);
    ini.check_known({{"converge", {"total", "occluded", "iterations", "m_from", "m_to", "m_step", "trials", "p", "t", "m"}},
                     {"experiment", {"mode", "run_id", "seed", "output_dir", "workers"}}});
    ConvergeConfig c;
    ini.get("converge", "total", c.total);
    ini.get("converge", "occluded", c.occluded);
    ini.get("converge", "iterations", c.iterations);
    ini.get("converge", "m_from", c.mFrom);
    ini.get("converge", "m_to", c.mTo);
    ini.get("converge", "m_step", c.mStep);
    ini.get("converge", "trials", c.trials);
    double p = -1.0, t = -1.0;
    long m = 1;
    ini.get("converge", "p", p);
    ini.get("converge", "t", t);
    ini.get("converge", "m", m);
    if ((p >= 0.0) != (t >= 0.0)) throw ConfigError("[converge] p and t must be given together");
    if (p >= 0.0) c.iterationQuery = IterationQuery{p, t, m};
    return c;
}

}  // namespace ranrac
