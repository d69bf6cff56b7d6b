#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "ranrac/analytics/convergence.hpp"

using namespace ranrac;

namespace {

// Brute-force oracle: probability that M uniform draws without replacement
// are all clean, C(clean, M) / C(s, M) with exact integer binomials.
__extension__ typedef unsigned __int128 u128;

u128 choose(long n, long k) {
    u128 c = 1;
    for (long i = 0; i < k; ++i) c = c * static_cast<u128>(n - i) / static_cast<u128>(i + 1);
    return c;
}

double hypergeometric_clean(long s, long occ, long m) {
    const long clean = s - occ;
    if (clean < m) return 0.0;
    return static_cast<double>(static_cast<long double>(choose(clean, m)) / static_cast<long double>(choose(s, m)));
}

}  // namespace

TEST(ExpectedCleanSets, NoOccluders) {
    EXPECT_EQ(expected_clean_sets({100, 0, 5, 7}), 7.0);
}

TEST(ExpectedCleanSets, AllOccluded) {
    EXPECT_EQ(expected_clean_sets({100, 100, 1, 10}), 0.0);
}

TEST(ExpectedCleanSets, PairExample) {
    const double v = expected_clean_sets({100, 20, 2, 1});
    EXPECT_NEAR(v, (79.0 / 99.0) * (78.0 / 98.0), 1e-15);
    EXPECT_NEAR(v, 0.63513, 5e-6);
}

TEST(ExpectedCleanSets, InfeasibleClampsToZero) {
    EXPECT_EQ(expected_clean_sets({10, 8, 3, 4}), 0.0);
    EXPECT_EQ(expected_clean_sets({10, 8, 2, 4}), 0.0);  // factor (2 - 2) / 8
}

TEST(ExpectedCleanSets, InvalidQueriesRejected) {
    EXPECT_THROW((void)expected_clean_sets({10, 11, 1, 1}), ConfigError);
    EXPECT_THROW((void)expected_clean_sets({10, 1, 0, 1}), ConfigError);
    EXPECT_THROW((void)expected_clean_sets({10, 1, 1, 0}), ConfigError);
}

TEST(ExactCleanSets, MatchesBinomialOracle) {
    for (long s : {10L, 100L, 4096L})
        for (long occ : {0L, 1L, s / 5, s / 2})
            for (long m : {1L, 2L, 5L, 9L})
                EXPECT_NEAR(exact_clean_sets({s, occ, m, 3}), 3.0 * hypergeometric_clean(s, occ, m), 1e-12)
                    << s << ' ' << occ << ' ' << m;
}

TEST(RequiredIterations, LogRatioExactlyOne) {
    EXPECT_EQ(required_iterations({0.5, 0.5, 1}), 1);
}

TEST(RequiredIterations, Examples) {
    EXPECT_EQ(required_iterations({0.99, 0.8, 2}), 5);
    EXPECT_EQ(required_iterations({0.999, 0.5, 1}), 10);
}

TEST(RequiredIterations, MatchesDirectBound) {
    for (double p : {0.5, 0.9, 0.99})
        for (double t : {0.3, 0.7, 0.95})
            for (long m : {1L, 3L, 8L}) {
                const double bound = std::log(1 - p) / std::log(1 - std::pow(t, m));
                const long n = required_iterations({p, t, m});
                EXPECT_GE(static_cast<double>(n), bound - 1e-9);
                EXPECT_LT(static_cast<double>(n) - 1.0, bound);
            }
}

TEST(RequiredIterations, EdgeRatios) {
    EXPECT_THROW((void)required_iterations({0.9, 0.0, 3}), ConfigError);
    EXPECT_EQ(required_iterations({0.9, 1.0, 3}), 1);
    EXPECT_THROW((void)required_iterations({1.0, 0.5, 3}), ConfigError);
}

TEST(MonteCarlo, NoOccludersIsExact) {
    const auto mc = monte_carlo_clean_sets({50, 0, 5, 9}, 1000, {1, 0});
    EXPECT_EQ(mc.mean, 9.0);
    EXPECT_EQ(mc.stdError, 0.0);
}

TEST(MonteCarlo, AllOccludedIsZero) {
    const auto mc = monte_carlo_clean_sets({50, 50, 1, 9}, 1000, {1, 0});
    EXPECT_EQ(mc.mean, 0.0);
}

TEST(MonteCarlo, TooFewTrialsRejected) {
    EXPECT_THROW((void)monte_carlo_clean_sets({50, 5, 1, 1}, 99, {1, 0}), ConfigError);
}

TEST(MonteCarlo, WorkerCountIndependent) {
    const CleanSetQuery q{200, 40, 4, 3};
    const auto a = monte_carlo_clean_sets(q, 5000, {3, 0}, 1);
    const auto b = monte_carlo_clean_sets(q, 5000, {3, 0}, 8);
    EXPECT_EQ(a.mean, b.mean);
    EXPECT_EQ(a.stdError, b.stdError);
}

TEST(MonteCarlo, AgreesWithBinomialOracle) {
    for (const CleanSetQuery q : {CleanSetQuery{100, 20, 2, 1}, CleanSetQuery{4096, 1024, 10, 5},
                                  CleanSetQuery{60, 30, 3, 2}}) {
        const auto mc = monte_carlo_clean_sets(q, 200000, {5, 0});
        const double want = static_cast<double>(q.iterations) * hypergeometric_clean(q.totalSamples, q.occludedSamples,
                                                                                     q.sampleSize);
        EXPECT_LE(std::abs(mc.mean - want), 3.0 * mc.stdError + 1e-12) << q.totalSamples;
    }
}

TEST(MonteCarlo, PairExampleWithinThreeStandardErrors) {
    const auto mc = monte_carlo_clean_sets({100, 20, 2, 1}, 1'000'000, {1, 0});
    EXPECT_LE(std::abs(mc.mean - 0.63513), 3.0 * mc.stdError) << "mean " << mc.mean << " stderr " << mc.stdError;
}

TEST(IterationSimulation, ExamplesReachTargetProbability) {
    for (const IterationQuery q : {IterationQuery{0.99, 0.8, 2}, IterationQuery{0.999, 0.5, 1}}) {
        const long n = required_iterations(q);
        const auto sim = simulate_iteration_success(q, n, 100000, {2, 0});
        const double sigma = std::sqrt(q.successProbability * (1 - q.successProbability) / 1e5);
        EXPECT_GE(sim.mean, q.successProbability - 3 * sigma);
    }
}

TEST(Sweep, EmptyAndSingle) {
    EXPECT_TRUE(sweep({}).empty());
    const auto rows = sweep({{"x", CleanSetQuery{100, 0, 5, 7}}});
    ASSERT_EQ(rows.size(), 1U);
    EXPECT_EQ(rows[0].param, "x");
    EXPECT_EQ(rows[0].expected, 7.0);
    EXPECT_FALSE(rows[0].mcMean.has_value());
}

TEST(Sweep, SampleSizeSweepNonincreasing) {
    const auto rows = sweep(sample_size_sweep(4096, 1024, 2000, 10, 280, 10));
    ASSERT_EQ(rows.size(), 28U);
    for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_LE(rows[i].expected, rows[i - 1].expected);
}

TEST(Sweep, IterationRowsCarryRequiredN) {
    const auto rows = sweep({{"p", IterationQuery{0.99, 0.8, 2}}}, {1000, {1, 0}, 1});
    ASSERT_EQ(rows.size(), 1U);
    EXPECT_EQ(rows[0].expected, 5.0);
    ASSERT_TRUE(rows[0].mcMean.has_value());
    EXPECT_GT(*rows[0].mcMean, 0.9);
}

TEST(Sweep, CsvLayout) {
    std::ostringstream os;
    write_sweep_csv(os, sweep({{"2", CleanSetQuery{100, 0, 2, 3}}}));
    EXPECT_EQ(os.str(), "param,expected,mc_mean,mc_stderr\n2,3,,\n");
}
