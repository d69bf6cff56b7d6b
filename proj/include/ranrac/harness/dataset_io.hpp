#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ranrac/core/errors.hpp"
#include "ranrac/core/format.hpp"
#include "ranrac/harness/corruption.hpp"
#include "ranrac/harness/pnm_io.hpp"
#include "ranrac/harness/scene.hpp"

namespace ranrac {

// On-disk dataset layout:
//   meta.csv        generator,low,high
//   views.csv       id,pose_x,pose_y,true_pose_x,true_pose_y,corrupted
//   view_NNN.ppm    observed image
//   truth_NNN.ppm   noise-free render (8-bit, so approximate)
//   object_NNN.pgm  object mask
//   occlusion_NNN.pgm  patch mask, only for occluded views

namespace detail {

inline std::string numbered(const char* stem, int id, const char* ext) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%s_%03d.%s", stem, id, ext);
    return buf;
}

inline double parse_double(const std::string& s, const std::string& where) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("bad number '" + s + "' in " + where);
    }
}

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
}

}  // namespace detail

inline void write_dataset(const std::filesystem::path& dir, const CorruptedDataset& cd) {
    namespace fs = std::filesystem;
    const auto& ds = cd.data;
    fs::create_directories(dir);
    std::ofstream meta(dir / "meta.csv");
    meta << "generator,low,high\n" << ds.generator << ',' << format_number(ds.space.low) << ','
         << format_number(ds.space.high) << '\n';
    std::ofstream views(dir / "views.csv");
    views << "id,pose_x,pose_y,true_pose_x,true_pose_y,corrupted\n";
    for (std::size_t i = 0; i < ds.views.size(); ++i) {
        const auto& v = ds.views[i];
        views << v.id << ',' << format_number(v.pose[0]) << ',' << format_number(v.pose[1]) << ','
              << format_number(ds.truePoses[i][0]) << ',' << format_number(ds.truePoses[i][1]) << ','
              << (v.corrupted ? 1 : 0) << '\n';
        write_ppm(dir / detail::numbered("view", v.id, "ppm"), v.image, ds.space);
        write_ppm(dir / detail::numbered("truth", v.id, "ppm"), ds.groundTruth[i], ds.space);
        if (v.image.objectMask)
            write_pgm_mask(dir / detail::numbered("object", v.id, "pgm"), object_mask_of(v.image));
        if (i < cd.occlusionMasks.size() && cd.occlusionMasks[i])
            write_pgm_mask(dir / detail::numbered("occlusion", v.id, "pgm"), *cd.occlusionMasks[i]);
    }
    if (!views || !meta) throw ConfigError("failed writing dataset to " + dir.string());
}

[[nodiscard]] inline CorruptedDataset read_dataset(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    CorruptedDataset cd;
    auto& ds = cd.data;
    std::ifstream meta(dir / "meta.csv");
    std::string line;
    if (!meta || !std::getline(meta, line) || !std::getline(meta, line))
        throw ConfigError("missing or empty " + (dir / "meta.csv").string());
    const auto m = detail::split_csv(line);
    if (m.size() != 3) throw ConfigError("meta.csv needs generator,low,high");
    ds.generator = m[0];
    ds.space = {detail::parse_double(m[1], "meta.csv"), detail::parse_double(m[2], "meta.csv")};
    ds.space.validate();

    std::ifstream views(dir / "views.csv");
    if (!views || !std::getline(views, line)) throw ConfigError("missing " + (dir / "views.csv").string());
    while (std::getline(views, line)) {
        if (line.empty()) continue;
        const auto c = detail::split_csv(line);
        if (c.size() != 6) throw ConfigError("views.csv rows need 6 columns: " + line);
        ObservationView v;
        v.id = static_cast<int>(detail::parse_double(c[0], "views.csv"));
        v.pose = {detail::parse_double(c[1], "views.csv"), detail::parse_double(c[2], "views.csv")};
        const Vec2 truePose{detail::parse_double(c[3], "views.csv"), detail::parse_double(c[4], "views.csv")};
        v.corrupted = c[5] == "1";
        v.image = read_ppm(dir / detail::numbered("view", v.id, "ppm"), ds.space);
        const auto objPath = dir / detail::numbered("object", v.id, "pgm");
        if (fs::exists(objPath)) v.image.objectMask = read_pgm_mask(objPath).bits;
        ImageRaster truth = read_ppm(dir / detail::numbered("truth", v.id, "ppm"), ds.space);
        truth.objectMask = v.image.objectMask;
        const auto occPath = dir / detail::numbered("occlusion", v.id, "pgm");
        cd.occlusionMasks.push_back(fs::exists(occPath) ? std::optional(read_pgm_mask(occPath)) : std::nullopt);
        ds.groundTruth.push_back(std::move(truth));
        ds.truePoses.push_back(truePose);
        ds.views.push_back(std::move(v));
    }
    if (ds.views.empty()) throw ConfigError("dataset " + dir.string() + " has no views");
    return cd;
}

}  // namespace ranrac
