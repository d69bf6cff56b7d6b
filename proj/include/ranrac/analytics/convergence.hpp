#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include "ranrac/core/errors.hpp"
#include "ranrac/core/format.hpp"
#include "ranrac/core/parallel.hpp"
#include "ranrac/core/random.hpp"

namespace ranrac {

/// Pool of `totalSamples` with `occludedSamples` marked; N draws of M samples.
struct CleanSetQuery {
    long totalSamples = 0;
    long occludedSamples = 0;
    long sampleSize = 0;
    long iterations = 1;

    void validate() const {
        if (totalSamples <= 0) throw ConfigError("total sample count must be positive");
        if (occludedSamples < 0 || occludedSamples > totalSamples)
            throw ConfigError("occluded sample count must lie in [0, total]");
        if (sampleSize <= 0 || sampleSize > totalSamples) throw ConfigError("sample size must lie in [1, total]");
        if (iterations <= 0) throw ConfigError("iteration count must be positive");
    }
};

struct IterationQuery {
    double successProbability = 0.99;
    double cleanRatio = 0.5;
    long sampleSize = 1;

    void validate() const {
        if (!(successProbability > 0.0 && successProbability < 1.0))
            throw ConfigError("success probability must lie strictly inside (0, 1)");
        if (!(cleanRatio >= 0.0 && cleanRatio <= 1.0)) throw ConfigError("clean ratio must lie in [0, 1]");
        if (sampleSize <= 0) throw ConfigError("sample size must be positive");
    }
};

/// Expected number of all-clean initial sets in N iterations, using the
/// classical product N * prod_{m=1..M} (s - s_occ - m) / (s - m). A
/// nonpositive factor means M clean samples cannot be drawn; the expectation
/// is then 0.
[[nodiscard]] inline double expected_clean_sets(const CleanSetQuery& q) {
    q.validate();
    const double s = static_cast<double>(q.totalSamples);
    const double clean = static_cast<double>(q.totalSamples - q.occludedSamples);
    double prod = 1.0;
    for (long m = 1; m <= q.sampleSize; ++m) {
        const double num = clean - static_cast<double>(m);
        const double den = s - static_cast<double>(m);
        if (num <= 0.0 || den <= 0.0) return 0.0;
        prod *= num / den;
    }
    return static_cast<double>(q.iterations) * prod;
}

/// Exact expectation for uniform draws without replacement from the whole
/// pool (hypergeometric): N * prod_{m=0..M-1} (s - s_occ - m) / (s - m).
[[nodiscard]] inline double exact_clean_sets(const CleanSetQuery& q) {
    q.validate();
    const double s = static_cast<double>(q.totalSamples);
    const double clean = static_cast<double>(q.totalSamples - q.occludedSamples);
    double prod = 1.0;
    for (long m = 0; m < q.sampleSize; ++m) {
        const double num = clean - static_cast<double>(m);
        if (num <= 0.0) return 0.0;
        prod *= num / (s - static_cast<double>(m));
    }
    return static_cast<double>(q.iterations) * prod;
}

/// Smallest N with N >= log(1 - p) / log(1 - t^M), at least 1.
[[nodiscard]] inline long required_iterations(const IterationQuery& q) {
    q.validate();
    if (q.cleanRatio == 0.0) throw ConfigError("no clean samples exist (clean ratio is 0)");
    if (q.cleanRatio == 1.0) return 1;
    const double tm = std::pow(q.cleanRatio, static_cast<double>(q.sampleSize));
    if (!(tm > 0.0)) throw ConfigError("clean-set probability t^M underflows to 0");
    const double bound = std::log1p(-q.successProbability) / std::log1p(-tm);
    const double n = std::ceil(bound);
    return n < 1.0 ? 1L : static_cast<long>(n);
}

struct MonteCarloEstimate {
    double mean = 0.0;
    double stdError = 0.0;
};

namespace detail {

inline constexpr std::size_t kMonteCarloShards = 64;

template <class TrialFn>
MonteCarloEstimate shard_monte_carlo(long trials, const SeedSpec& seed, unsigned workers, TrialFn trial) {
    struct Sums {
        std::uint64_t sum = 0;
        std::uint64_t sumSq = 0;
    };
    std::vector<Sums> shards(kMonteCarloShards);
    const auto total = static_cast<std::uint64_t>(trials);
    parallel_for(kMonteCarloShards, workers, [&](std::size_t k) {
        const std::uint64_t lo = total * k / kMonteCarloShards;
        const std::uint64_t hi = total * (k + 1) / kMonteCarloShards;
        Stream rng(substream(seed, static_cast<std::uint64_t>(k)));
        Sums s;
        for (std::uint64_t t = lo; t < hi; ++t) {
            const std::uint64_t v = trial(rng);
            s.sum += v;
            s.sumSq += v * v;
        }
        shards[k] = s;
    });
    __extension__ using i128 = __int128;  // sums of squares overflow 64 bits at large trial counts
    i128 sum = 0;
    i128 sumSq = 0;
    for (const auto& s : shards) {
        sum += s.sum;
        sumSq += s.sumSq;
    }
    const auto t = static_cast<i128>(trials);
    MonteCarloEstimate est;
    est.mean = static_cast<double>(static_cast<long double>(sum) / static_cast<long double>(t));
    const i128 num = t * sumSq - sum * sum;  // t * (t - 1) * sample variance
    const long double var =
        static_cast<long double>(num) / (static_cast<long double>(t) * static_cast<long double>(t - 1));
    est.stdError = static_cast<double>(std::sqrt(var / static_cast<long double>(t)));
    return est;
}

}  // namespace detail

/// Simulates `trials` runs of N uniform without-replacement draws of M from a
/// pool with s_occ marked samples, counting all-clean draws per run. Trials
/// are split into a fixed number of shards with their own substreams, so the
/// result does not depend on `workers`.
[[nodiscard]] inline MonteCarloEstimate monte_carlo_clean_sets(const CleanSetQuery& q, long trials,
                                                               const SeedSpec& seed, unsigned workers = 0) {
    q.validate();
    if (trials < 100) throw ConfigError("Monte Carlo needs at least 100 trials");
    const auto total = static_cast<std::uint64_t>(q.totalSamples);
    const auto clean = static_cast<std::uint64_t>(q.totalSamples - q.occludedSamples);
    const auto m = static_cast<std::uint64_t>(q.sampleSize);
    const auto n = static_cast<std::uint64_t>(q.iterations);
    return detail::shard_monte_carlo(trials, seed, workers, [=](Stream& rng) -> std::uint64_t {
        std::uint64_t count = 0;
        for (std::uint64_t it = 0; it < n; ++it) {
            // Urn draw: the next sample is clean with probability
            // remainingClean / remaining, exactly as a uniform pick would be.
            std::uint64_t remaining = total;
            std::uint64_t remainingClean = clean;
            bool allClean = true;
            for (std::uint64_t k = 0; k < m; ++k) {
                if (rng.below(remaining) >= remainingClean) {
                    allClean = false;
                    break;
                }
                --remaining;
                --remainingClean;
            }
            count += allClean ? 1U : 0U;
        }
        return count;
    });
}

/// Fraction of `trials` in which at least one of `iterations` sets of M
/// independently drawn samples (each clean with probability t) is all clean.
[[nodiscard]] inline MonteCarloEstimate simulate_iteration_success(const IterationQuery& q, long iterations,
                                                                   long trials, const SeedSpec& seed,
                                                                   unsigned workers = 0) {
    q.validate();
    if (iterations <= 0) throw ConfigError("iteration count must be positive");
    if (trials < 100) throw ConfigError("simulation needs at least 100 trials");
    const double t = q.cleanRatio;
    const long m = q.sampleSize;
    return detail::shard_monte_carlo(trials, seed, workers, [=](Stream& rng) -> std::uint64_t {
        for (long it = 0; it < iterations; ++it) {
            bool allClean = true;
            for (long k = 0; k < m && allClean; ++k) allClean = rng.uniform() < t;
            if (allClean) return 1;
        }
        return 0;
    });
}

// ---------------------------------------------------------------------------
// Sweeps

struct SweepEntry {
    std::string param;
    std::variant<CleanSetQuery, IterationQuery> query;
};

struct SweepRow {
    std::string param;
    double expected = 0.0;
    std::optional<double> mcMean;
    std::optional<double> mcStdError;
};

struct SweepOptions {
    long trials = 0;  // 0 disables the Monte Carlo columns
    SeedSpec seed{};
    unsigned workers = 0;
};

/// Clean-set rows carry the product-formula expectation (and Monte Carlo estimates
/// when trials > 0); iteration rows carry the required N (and the simulated
/// success frequency at that N).
[[nodiscard]] inline std::vector<SweepRow> sweep(const std::vector<SweepEntry>& entries, const SweepOptions& opt = {}) {
    std::vector<SweepRow> rows;
    rows.reserve(entries.size());
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto& e = entries[i];
        SweepRow row;
        row.param = e.param;
        const SeedSpec rowSeed = substream(opt.seed, static_cast<std::uint64_t>(i));
        if (const auto* c = std::get_if<CleanSetQuery>(&e.query)) {
            row.expected = expected_clean_sets(*c);
            if (opt.trials > 0) {
                const auto mc = monte_carlo_clean_sets(*c, opt.trials, rowSeed, opt.workers);
                row.mcMean = mc.mean;
                row.mcStdError = mc.stdError;
            }
        } else {
            const auto& iq = std::get<IterationQuery>(e.query);
            const long n = required_iterations(iq);
            row.expected = static_cast<double>(n);
            if (opt.trials > 0) {
                const auto mc = simulate_iteration_success(iq, n, opt.trials, rowSeed, opt.workers);
                row.mcMean = mc.mean;
                row.mcStdError = mc.stdError;
            }
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

/// Entries for M = from, from + step, ..., to at fixed pool and N.
[[nodiscard]] inline std::vector<SweepEntry> sample_size_sweep(long total, long occluded, long iterations, long from,
                                                               long to, long step) {
    if (step <= 0) throw ConfigError("sweep step must be positive");
    std::vector<SweepEntry> out;
    for (long m = from; m <= to; m += step)
        out.push_back({std::to_string(m), CleanSetQuery{total, occluded, m, iterations}});
    return out;
}

inline constexpr const char* kSweepCsvHeader = "param,expected,mc_mean,mc_stderr";

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
    os << kSweepCsvHeader << '\n';
    for (const auto& r : rows) {
        os << r.param << ',' << format_number(r.expected) << ',';
        if (r.mcMean) os << format_number(*r.mcMean);
        os << ',';
        if (r.mcStdError) os << format_number(*r.mcStdError);
        os << '\n';
    }
}

}  // namespace ranrac
