#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "ranrac/core/errors.hpp"
#include "ranrac/core/types.hpp"

namespace ranrac {

inline constexpr double kPsnrCap = 99.0;

/// 10 log10(peak^2 / MSE) over all pixels and channels; identical images
/// return kPsnrCap.
[[nodiscard]] inline double psnr(const ImageRaster& a, const ImageRaster& b, double peak) {
    if (!a.same_shape(b)) throw ConfigError("psnr: raster dimensions differ");
    if (!(peak > 0.0)) throw ConfigError("psnr: peak must be positive");
    double sum = 0.0;
    for (std::size_t i = 0; i < a.pixels.size(); ++i)
        for (int c = 0; c < 3; ++c) {
            const double d = a.pixels[i][c] - b.pixels[i][c];
            sum += d * d;
        }
    const double mse = sum / (3.0 * static_cast<double>(a.pixels.size()));
    if (mse == 0.0) return kPsnrCap;
    return 10.0 * std::log10(peak * peak / mse);
}

namespace detail {

inline constexpr int kSsimRadius = 5;  // 11 x 11 window
inline constexpr double kSsimSigma = 1.5;

inline std::array<double, 2 * kSsimRadius + 1> ssim_kernel() {
    std::array<double, 2 * kSsimRadius + 1> k{};
    double sum = 0.0;
    for (int i = -kSsimRadius; i <= kSsimRadius; ++i) {
        k[static_cast<std::size_t>(i + kSsimRadius)] = std::exp(-(i * i) / (2.0 * kSsimSigma * kSsimSigma));
        sum += k[static_cast<std::size_t>(i + kSsimRadius)];
    }
    for (auto& v : k) v /= sum;
    return k;
}

/// Gaussian-weighted local mean over every fully contained 11 x 11 window.
inline std::vector<double> window_mean(const std::vector<double>& img, int w, int h) {
    const auto k = ssim_kernel();
    const int ow = w - 2 * kSsimRadius;
    const int oh = h - 2 * kSsimRadius;
    std::vector<double> rows(static_cast<std::size_t>(ow) * static_cast<std::size_t>(h));
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < ow; ++x) {
            double s = 0.0;
            for (int t = 0; t <= 2 * kSsimRadius; ++t)
                s += k[static_cast<std::size_t>(t)] * img[static_cast<std::size_t>(y) * w + x + t];
            rows[static_cast<std::size_t>(y) * ow + x] = s;
        }
    std::vector<double> out(static_cast<std::size_t>(ow) * static_cast<std::size_t>(oh));
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
            double s = 0.0;
            for (int t = 0; t <= 2 * kSsimRadius; ++t)
                s += k[static_cast<std::size_t>(t)] * rows[static_cast<std::size_t>(y + t) * ow + x];
            out[static_cast<std::size_t>(y) * ow + x] = s;
        }
    return out;
}

}  // namespace detail

/// Single-scale SSIM: 11 x 11 Gaussian window (sigma 1.5), population
/// covariances, K1 = 0.01, K2 = 0.03, mean over fully contained windows and
/// then over channels.
[[nodiscard]] inline double ssim(const ImageRaster& a, const ImageRaster& b, double dataRange = 1.0) {
    if (!a.same_shape(b)) throw ConfigError("ssim: raster dimensions differ");
    const int w = a.width;
    const int h = a.height;
    if (w < 2 * detail::kSsimRadius + 1 || h < 2 * detail::kSsimRadius + 1)
        throw ConfigError("ssim: image smaller than the 11x11 window");
    const double c1 = (0.01 * dataRange) * (0.01 * dataRange);
    const double c2 = (0.03 * dataRange) * (0.03 * dataRange);
    const std::size_t n = a.pixels.size();
    double total = 0.0;
    for (int ch = 0; ch < 3; ++ch) {
        std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = a.pixels[i][ch];
            y[i] = b.pixels[i][ch];
            xx[i] = x[i] * x[i];
            yy[i] = y[i] * y[i];
            xy[i] = x[i] * y[i];
        }
        const auto mx = detail::window_mean(x, w, h);
        const auto my = detail::window_mean(y, w, h);
        const auto mxx = detail::window_mean(xx, w, h);
        const auto myy = detail::window_mean(yy, w, h);
        const auto mxy = detail::window_mean(xy, w, h);
        double sum = 0.0;
        for (std::size_t i = 0; i < mx.size(); ++i) {
            const double vx = mxx[i] - mx[i] * mx[i];
            const double vy = myy[i] - my[i] * my[i];
            const double cov = mxy[i] - mx[i] * my[i];
            const double num = (2.0 * mx[i] * my[i] + c1) * (2.0 * cov + c2);
            const double den = (mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2);
            sum += num / den;
        }
        total += sum / static_cast<double>(mx.size());
    }
    return total / 3.0;
}

/// Nearest-rank percentile (p in (0, 100]).
[[nodiscard]] inline double percentile_nearest_rank(std::vector<double> values, double p) {
    if (values.empty()) throw ConfigError("percentile of an empty list");
    std::sort(values.begin(), values.end());
    const auto rank = static_cast<long>(std::ceil(p / 100.0 * static_cast<double>(values.size())));
    const auto idx = std::clamp<long>(rank - 1, 0, static_cast<long>(values.size()) - 1);
    return values[static_cast<std::size_t>(idx)];
}

}  // namespace ranrac
