#pragma once

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "ranrac/core/errors.hpp"
#include "ranrac/core/types.hpp"
#include "ranrac/model/field_model.hpp"

namespace ranrac {

struct GridConfig {
    int resolution = 64;
    /// Weight of the squared adjacent-node difference penalty.
    double tikhonov = 1e-2;

    void validate() const {
        if (resolution <= 0) throw ConfigError("grid resolution must be positive");
        if (!(tikhonov >= 0.0)) throw ConfigError("tikhonov weight must be nonnegative");
    }
};

/// G x G grid of RGB coefficients over the unit query square, interpolated
/// bilinearly. Node (i, j) sits at ((i + 0.5) / G, (j + 0.5) / G); queries
/// outside the node hull take the nearest border value. With G equal to a
/// view's pixel resolution and zero pose, nodes coincide with pixel centres.
class GridField {
public:
    struct State {
        int resolution = 0;
        std::vector<Color> coefficients;  // row-major, index j * G + i
    };

    struct Stencil {
        std::array<int, 4> node{};
        std::array<double, 4> weight{};
    };

    explicit GridField(GridConfig cfg = {}) : cfg_(cfg) { cfg_.validate(); }

    [[nodiscard]] const GridConfig& config() const noexcept { return cfg_; }
    [[nodiscard]] int resolution() const noexcept { return cfg_.resolution; }

    [[nodiscard]] Stencil stencil(const Vec2& q) const noexcept {
        const int g = cfg_.resolution;
        Stencil s;
        if (g == 1) {
            s.node = {0, 0, 0, 0};
            s.weight = {1.0, 0.0, 0.0, 0.0};
            return s;
        }
        auto axis = [g](double t, int& i0, double& f) {
            double u = t * g - 0.5;
            u = std::clamp(u, 0.0, static_cast<double>(g - 1));
            i0 = std::min(static_cast<int>(std::floor(u)), g - 2);
            f = u - i0;
        };
        int i0 = 0;
        int j0 = 0;
        double fu = 0.0;
        double fv = 0.0;
        axis(q[0], i0, fu);
        axis(q[1], j0, fv);
        s.node = {j0 * g + i0, j0 * g + i0 + 1, (j0 + 1) * g + i0, (j0 + 1) * g + i0 + 1};
        s.weight = {(1 - fu) * (1 - fv), fu * (1 - fv), (1 - fu) * fv, fu * fv};
        return s;
    }

    [[nodiscard]] static Color interpolate(const State& s, const Stencil& st) noexcept {
        Color c{0.0, 0.0, 0.0};
        for (int k = 0; k < 4; ++k) {
            const Color& n = s.coefficients[static_cast<std::size_t>(st.node[k])];
            for (int ch = 0; ch < 3; ++ch) c[ch] += st.weight[k] * n[ch];
        }
        return c;
    }

    [[nodiscard]] Color predict(const State& s, const Vec2& q) const { return interpolate(s, stencil(q)); }

    class Plan {
    public:
        Plan(const GridField& field, std::span<const Vec2> queries) : cfg_(field.cfg_) {
            stencils_.reserve(queries.size());
            for (const auto& q : queries) stencils_.push_back(field.stencil(q));
        }

        [[nodiscard]] std::size_t query_count() const noexcept { return stencils_.size(); }

        /// Coarse fits keep every 4th id of the list.
        [[nodiscard]] State fit(std::span<const std::size_t> ids, std::span<const Color> colors,
                                FitStrength strength) const {
            const int g = cfg_.resolution;
            const auto dim = static_cast<Eigen::Index>(g) * g;
            const std::size_t stride = strength == FitStrength::coarse ? 4 : 1;
            if (ids.empty()) throw ConfigError("grid fit needs at least one sample");

            std::vector<Eigen::Triplet<double>> triplets;
            triplets.reserve(ids.size() / stride * 16 + static_cast<std::size_t>(dim) * 8);
            Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(dim, 3);
            std::vector<double> dataDiag(static_cast<std::size_t>(dim), 0.0);
            for (std::size_t k = 0; k < ids.size(); k += stride) {
                const Stencil& st = stencils_[ids[k]];
                const Color& c = colors[ids[k]];
                for (int a = 0; a < 4; ++a) {
                    const double wa = st.weight[a];
                    if (wa == 0.0) continue;
                    dataDiag[static_cast<std::size_t>(st.node[a])] += wa * wa;
                    for (int ch = 0; ch < 3; ++ch) rhs(st.node[a], ch) += wa * c[ch];
                    for (int b = 0; b < 4; ++b)
                        if (st.weight[b] != 0.0) triplets.emplace_back(st.node[a], st.node[b], wa * st.weight[b]);
                }
            }
            if (cfg_.tikhonov == 0.0) {
                for (Eigen::Index n = 0; n < dim; ++n)
                    if (!(dataDiag[static_cast<std::size_t>(n)] > 0.0))
                        throw RankDeficiencyError("grid node (" + std::to_string(n % g) + ", " +
                                                  std::to_string(n / g) +
                                                  ") is unconstrained and the smoothness weight is zero");
            } else {
                const double t = cfg_.tikhonov;
                auto couple = [&](int p, int q) {
                    triplets.emplace_back(p, p, t);
                    triplets.emplace_back(q, q, t);
                    triplets.emplace_back(p, q, -t);
                    triplets.emplace_back(q, p, -t);
                };
                for (int j = 0; j < g; ++j)
                    for (int i = 0; i < g; ++i) {
                        if (i + 1 < g) couple(j * g + i, j * g + i + 1);
                        if (j + 1 < g) couple(j * g + i, (j + 1) * g + i);
                    }
            }
            Eigen::SparseMatrix<double> normal(dim, dim);
            normal.setFromTriplets(triplets.begin(), triplets.end());

            Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt(normal);
            if (llt.info() != Eigen::Success) {
                if (cfg_.tikhonov == 0.0)
                    throw RankDeficiencyError("grid normal matrix is singular and the smoothness weight is zero");
                double trace = 0.0;
                for (Eigen::Index n = 0; n < dim; ++n) trace += normal.coeff(n, n);
                const double jitter = 1e-10 * trace / static_cast<double>(dim);
                for (Eigen::Index n = 0; n < dim; ++n) normal.coeffRef(n, n) += jitter;
                llt.compute(normal);
                if (llt.info() != Eigen::Success)
                    throw RankDeficiencyError("grid normal matrix not positive definite (no data constraint?)");
            }
            const Eigen::MatrixXd sol = llt.solve(rhs);
            State s;
            s.resolution = g;
            s.coefficients.resize(static_cast<std::size_t>(dim));
            for (Eigen::Index n = 0; n < dim; ++n)
                s.coefficients[static_cast<std::size_t>(n)] = {sol(n, 0), sol(n, 1), sol(n, 2)};
            return s;
        }

        void predict_range(const State& s, std::size_t first, std::span<Color> out) const {
            for (std::size_t k = 0; k < out.size(); ++k) out[k] = interpolate(s, stencils_[first + k]);
        }

    private:
        GridConfig cfg_;
        std::vector<Stencil> stencils_;
    };

    [[nodiscard]] Plan prepare(std::span<const Vec2> queries) const { return Plan(*this, queries); }

    [[nodiscard]] State fit(std::span<const PixelSample> samples, FitStrength strength) const {
        std::vector<Vec2> queries;
        std::vector<Color> colors;
        queries.reserve(samples.size());
        colors.reserve(samples.size());
        for (const auto& s : samples) {
            queries.push_back(s.query);
            colors.push_back(s.color);
        }
        std::vector<std::size_t> ids(samples.size());
        for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
        return prepare(queries).fit(ids, colors, strength);
    }

private:
    GridConfig cfg_;
};

static_assert(FieldModel<GridField>);

/// Fits any field model to the pixels of a set of posed observations. Pixels
/// enter in view order, row-major within a view, so the grid's coarse stride
/// keeps every 4th pixel of each view.
template <FieldModel M>
[[nodiscard]] typename M::State fit_observations(const M& model, std::span<const ObservationView> observations,
                                                 FitStrength strength) {
    if (observations.empty()) throw ConfigError("fit needs at least one observation");
    std::vector<PixelSample> samples;
    for (const auto& v : observations) {
        auto s = samples_from_view(v);
        samples.insert(samples.end(), s.begin(), s.end());
    }
    return model.fit(samples, strength);
}

[[nodiscard]] inline GridField::State fit_grid(const GridField& grid, std::span<const ObservationView> observations,
                                               FitStrength strength) {
    return fit_observations(grid, observations, strength);
}

}  // namespace ranrac
