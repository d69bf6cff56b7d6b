#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "ranrac/core/errors.hpp"
#include "ranrac/core/random.hpp"
#include "ranrac/core/types.hpp"
#include "ranrac/model/field_model.hpp"

namespace ranrac {

struct LatentRidgeConfig {
    int featureCount = 128;
    /// Standard deviation of the random frequencies, in cycles per unit query.
    double bandwidth = 0.75;
    /// Gaussian prior strength on the latent code.
    double lambdaLat = 1e-3;
    SeedSpec featureSeed{};

    void validate() const {
        if (featureCount <= 0) throw ConfigError("featureCount must be positive");
        if (!(bandwidth >= 0.0)) throw ConfigError("bandwidth must be nonnegative");
        if (!(lambdaLat >= 0.0)) throw ConfigError("lambdaLat must be nonnegative");
    }
};

namespace detail {

/// Solves (A) X = B for symmetric positive definite A by Cholesky. When
/// `unregularised` is set a numerically singular factor is a rank error;
/// otherwise a failed factorisation is retried once with trace-scaled jitter.
inline Eigen::MatrixXd solve_spd(Eigen::MatrixXd a, const Eigen::MatrixXd& b, bool unregularised) {
    const auto n = a.rows();
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    auto singular = [&](const Eigen::LLT<Eigen::MatrixXd>& f) {
        if (f.info() != Eigen::Success) return true;
        if (!unregularised) return false;
        const Eigen::VectorXd d = f.matrixLLT().diagonal();
        const double lo = d.minCoeff();
        const double hi = d.maxCoeff();
        return !(lo > 0.0) || (lo * lo) < 1e-13 * (hi * hi);
    };
    if (singular(llt)) {
        if (unregularised)
            throw RankDeficiencyError("normal matrix is rank deficient (no prior, singular design)");
        const double jitter = 1e-10 * a.trace() / static_cast<double>(n);
        a.diagonal().array() += jitter;
        llt.compute(a);
        if (llt.info() != Eigen::Success)
            throw RankDeficiencyError("normal matrix not positive definite after jitter");
    }
    return llt.solve(b);
}

}  // namespace detail

/// Linear-in-features colour field: c(q) = Z^T phi(q) with random Fourier
/// features phi_k(q) = cos(w_k . q + b_k). Fitting the latent Z is a ridge
/// regression (data term plus Gaussian prior lambdaLat * ||Z||_F^2), solved in
/// closed form through the normal equations.
class LatentRidgeField {
public:
    struct State {
        Eigen::MatrixXd latent;  // K x 3
    };

    explicit LatentRidgeField(LatentRidgeConfig cfg = {}) : cfg_(cfg) {
        cfg_.validate();
        const auto k = static_cast<Eigen::Index>(cfg_.featureCount);
        frequencies_.resize(k, 2);
        phases_.resize(k);
        Stream rng(cfg_.featureSeed);
        const double scale = 2.0 * std::numbers::pi * cfg_.bandwidth;
        for (Eigen::Index i = 0; i < k; ++i) {
            frequencies_(i, 0) = scale * rng.normal();
            frequencies_(i, 1) = scale * rng.normal();
            phases_(i) = 2.0 * std::numbers::pi * rng.uniform();
        }
    }

    [[nodiscard]] const LatentRidgeConfig& config() const noexcept { return cfg_; }
    [[nodiscard]] int feature_count() const noexcept { return cfg_.featureCount; }
    [[nodiscard]] const Eigen::MatrixX2d& frequencies() const noexcept { return frequencies_; }
    [[nodiscard]] const Eigen::VectorXd& phases() const noexcept { return phases_; }

    [[nodiscard]] LatentRidgeField with_lambda(double lambda) const {
        auto cfg = cfg_;
        cfg.lambdaLat = lambda;
        return LatentRidgeField(cfg);
    }

    [[nodiscard]] Eigen::VectorXd features(const Vec2& q) const {
        Eigen::VectorXd phi(frequencies_.rows());
        write_features(q, phi.data());
        return phi;
    }

    [[nodiscard]] Color predict(const State& s, const Vec2& q) const {
        const Eigen::VectorXd phi = features(q);
        const Eigen::Vector3d c = s.latent.transpose() * phi;
        return {c(0), c(1), c(2)};
    }

    class Plan {
    public:
        Plan(const LatentRidgeField& field, std::span<const Vec2> queries)
            : lambda_(field.cfg_.lambdaLat),
              design_(static_cast<Eigen::Index>(queries.size()), field.frequencies_.rows()) {
            Eigen::VectorXd row(field.frequencies_.rows());
            for (std::size_t i = 0; i < queries.size(); ++i) {
                field.write_features(queries[i], row.data());
                design_.row(static_cast<Eigen::Index>(i)) = row.transpose();
            }
        }

        [[nodiscard]] std::size_t query_count() const noexcept { return static_cast<std::size_t>(design_.rows()); }

        /// Coarse fits use a deterministic evenly strided subsample of at most
        /// 4K of the given ids.
        [[nodiscard]] State fit(std::span<const std::size_t> ids, std::span<const Color> colors,
                                FitStrength strength) const {
            const auto k = design_.cols();
            std::vector<std::size_t> used = select(ids, strength, static_cast<std::size_t>(4 * k));
            if (used.empty()) throw ConfigError("latent fit needs at least one sample");
            if (lambda_ == 0.0 && used.size() < static_cast<std::size_t>(k))
                throw RankDeficiencyError("latent fit without prior needs at least K=" + std::to_string(k) +
                                          " samples, got " + std::to_string(used.size()));
            const auto m = static_cast<Eigen::Index>(used.size());
            Eigen::MatrixXd a(m, k);
            Eigen::MatrixXd c(m, 3);
            for (Eigen::Index r = 0; r < m; ++r) {
                const std::size_t id = used[static_cast<std::size_t>(r)];
                a.row(r) = design_.row(static_cast<Eigen::Index>(id));
                const Color& col = colors[id];
                c(r, 0) = col[0];
                c(r, 1) = col[1];
                c(r, 2) = col[2];
            }
            Eigen::MatrixXd normal = Eigen::MatrixXd::Zero(k, k);
            normal.selfadjointView<Eigen::Lower>().rankUpdate(a.transpose());
            normal.triangularView<Eigen::StrictlyUpper>() = normal.transpose();
            normal.diagonal().array() += lambda_;
            const Eigen::MatrixXd rhs = a.transpose() * c;
            return State{detail::solve_spd(std::move(normal), rhs, lambda_ == 0.0)};
        }

        void predict_range(const State& s, std::size_t first, std::span<Color> out) const {
            const auto rows = static_cast<Eigen::Index>(out.size());
            const Eigen::MatrixXd pred = design_.middleRows(static_cast<Eigen::Index>(first), rows) * s.latent;
            for (Eigen::Index r = 0; r < rows; ++r)
                out[static_cast<std::size_t>(r)] = {pred(r, 0), pred(r, 1), pred(r, 2)};
        }

        [[nodiscard]] const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>& design() const noexcept {
            return design_;
        }

    private:
        static std::vector<std::size_t> select(std::span<const std::size_t> ids, FitStrength strength,
                                               std::size_t cap) {
            if (strength == FitStrength::full || ids.size() <= cap) return {ids.begin(), ids.end()};
            std::vector<std::size_t> out(cap);
            for (std::size_t i = 0; i < cap; ++i) out[i] = ids[i * ids.size() / cap];
            return out;
        }

        double lambda_;
        Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> design_;
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

    /// Ridge objective sum_m ||Z^T phi(q_m) - c_m||^2 + lambda ||Z||_F^2.
    [[nodiscard]] double objective(const State& s, std::span<const PixelSample> samples) const {
        double total = cfg_.lambdaLat * s.latent.squaredNorm();
        for (const auto& smp : samples) {
            const Color p = predict(s, smp.query);
            for (int c = 0; c < 3; ++c) total += (p[c] - smp.color[c]) * (p[c] - smp.color[c]);
        }
        return total;
    }

private:
    void write_features(const Vec2& q, double* out) const {
        for (Eigen::Index i = 0; i < frequencies_.rows(); ++i)
            out[i] = std::cos(frequencies_(i, 0) * q[0] + frequencies_(i, 1) * q[1] + phases_(i));
    }

    LatentRidgeConfig cfg_;
    Eigen::MatrixX2d frequencies_;
    Eigen::VectorXd phases_;
};

static_assert(FieldModel<LatentRidgeField>);

}  // namespace ranrac
