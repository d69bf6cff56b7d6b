#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <numbers>
#include <unordered_map>
#include <vector>

namespace ranrac {

/// Identifies one random stream: a run-wide master seed plus a substream key.
struct SeedSpec {
    std::uint64_t masterSeed = 0;
    std::uint64_t streamKey = 0;

    friend constexpr auto operator<=>(const SeedSpec&, const SeedSpec&) = default;
};

namespace detail {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

/// SplitMix64 finaliser (Stafford variant 13). A bijection on 64-bit words.
[[nodiscard]] constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace detail

/// Child stream `index` of `seed`. For a fixed parent the map index -> key is
/// a composition of bijections, hence injective over all 64-bit indices.
[[nodiscard]] constexpr SeedSpec substream(const SeedSpec& seed, std::uint64_t index) noexcept {
    const std::uint64_t salt = detail::mix64(seed.streamKey + detail::kGolden);
    return {seed.masterSeed, detail::mix64(salt ^ index)};
}

/// Top-level substream roles. Keeping them in one place prevents two
/// subsystems from consuming the same stream.
enum class StreamRole : std::uint64_t {
    hypotheses = 1,
    features = 2,
    scene = 3,
    corruption_subset = 4,
    corruption_apply = 5,
    occlusion = 6,
    monte_carlo = 7,
    sensor_noise = 8,
    test = 99,
};

[[nodiscard]] constexpr SeedSpec substream(const SeedSpec& seed, StreamRole role) noexcept {
    return substream(seed, static_cast<std::uint64_t>(role));
}

/// Counter-based generator: the n-th output is mix64(key + n * golden), with
/// key derived from (masterSeed, streamKey). Output depends only on the seed
/// and the draw count, never on scheduling.
class Stream {
public:
    explicit constexpr Stream(const SeedSpec& seed) noexcept
        : key_(detail::mix64(seed.masterSeed ^ detail::mix64(seed.streamKey ^ 0xD1B54A32D192ED03ULL))) {}

    constexpr std::uint64_t next() noexcept { return detail::mix64(key_ + (++counter_) * detail::kGolden); }

    [[nodiscard]] constexpr std::uint64_t draws() const noexcept { return counter_; }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    /// Unbiased integer in [0, n). n must be positive.
    std::uint64_t below(std::uint64_t n) noexcept {
        // Lemire's multiply-shift with rejection.
        std::uint64_t x = next();
        __uint128_t m = static_cast<__uint128_t>(x) * n;
        auto low = static_cast<std::uint64_t>(m);
        if (low < n) {
            const std::uint64_t threshold = (0 - n) % n;
            while (low < threshold) {
                x = next();
                m = static_cast<__uint128_t>(x) * n;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    bool bernoulli(double p) noexcept { return uniform() < p; }

    /// Standard normal via Box-Muller (one variate per call).
    double normal() noexcept {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    double normal(double mean, double sigma) noexcept { return mean + sigma * normal(); }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

/// `count` distinct positions drawn uniformly without replacement from
/// [0, poolSize), in draw order. Sparse Fisher-Yates: O(count) memory.
[[nodiscard]] inline std::vector<std::size_t> sample_without_replacement(Stream& rng, std::size_t poolSize,
                                                                         std::size_t count) {
    std::vector<std::size_t> out;
    out.reserve(count);
    std::unordered_map<std::size_t, std::size_t> swapped;
    auto value_at = [&](std::size_t i) {
        auto it = swapped.find(i);
        return it == swapped.end() ? i : it->second;
    };
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(poolSize - i));
        const std::size_t vi = value_at(i);
        const std::size_t vj = value_at(j);
        out.push_back(vj);
        swapped[j] = vi;
    }
    return out;
}

}  // namespace ranrac
