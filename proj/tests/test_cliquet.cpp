#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "deephedge/cliquet.hpp"
#include "deephedge/errors.hpp"

using namespace deephedge;

namespace {

// Path whose completed periods return the given values and which is flat in between jumps.
std::vector<double> path_with_period_returns(const std::vector<double>& returns, int period,
                                             double start = 1.0) {
    std::vector<double> x{start};
    for (double r : returns) {
        const double level = x.back();
        for (int k = 1; k < period; ++k) x.push_back(level);
        x.push_back(level * (1.0 + r));
    }
    return x;
}

}  // namespace

TEST(Cliquet, FlatPathPaysNothing) {
    const std::vector<double> x(241, 1.3);
    const CliquetSpec spec;
    for (long t : {0L, 19L, 20L, 120L, 240L}) EXPECT_EQ(cliquet_payout(x, t, spec), 0.0);
}

TEST(Cliquet, AllPeriodsCapped) {
    const auto x = path_with_period_returns(std::vector<double>(12, 0.10), 20);
    ASSERT_EQ(x.size(), 241u);
    // Correctly rounded 12 * 0.035, one ulp above the literal 0.42.
    EXPECT_EQ(cliquet_payout(x, 240, CliquetSpec{}), 12 * 0.035);
    EXPECT_EQ(payout_series(x, CliquetSpec{}).back(), std::nextafter(0.42, 1.0));
}

TEST(Cliquet, OuterFloorApplies) {
    std::vector<double> returns(12, 0.0);
    returns[3] = -0.05;
    const auto x = path_with_period_returns(returns, 20);
    EXPECT_EQ(cliquet_payout(x, 240, CliquetSpec{}), 0.0);
    CliquetSpec unfloored;
    unfloored.floor_at_zero = false;
    EXPECT_NEAR(cliquet_payout(x, 240, unfloored), -0.05, 1e-15);
}

TEST(Cliquet, FloorIsOnTheSumNotPerPeriod) {
    const auto x = path_with_period_returns({0.03, -0.02}, 20);
    EXPECT_NEAR(cliquet_payout(x, 40, CliquetSpec{}), 0.01, 1e-15);
}

TEST(Cliquet, IndexErrors) {
    const std::vector<double> x(21, 1.0);
    EXPECT_THROW(cliquet_payout(x, -1, CliquetSpec{}), IndexError);
    EXPECT_THROW(cliquet_payout(x, 21, CliquetSpec{}), IndexError);
}

TEST(Cliquet, SpecValidation) {
    CliquetSpec bad;
    bad.cap = 0.0;
    EXPECT_THROW(bad.validate(), ParameterError);
    CliquetSpec spec;
    EXPECT_NO_THROW(spec.validate_for(240));
    EXPECT_THROW(spec.validate_for(250), ParameterError);
}

TEST(PayoutSeries, ZeroBeforeFirstReset) {
    std::mt19937_64 rng(5);
    std::lognormal_distribution<double> step(0.0, 0.05);
    std::vector<double> x{1.0};
    for (int t = 0; t < 240; ++t) x.push_back(x.back() * step(rng));
    const auto psi = payout_series(x, CliquetSpec{});
    for (int t = 0; t < 20; ++t) EXPECT_EQ(psi[t], 0.0);
}

TEST(PayoutSeries, StaircaseForCappedGains) {
    const auto x = path_with_period_returns(std::vector<double>(12, 0.10), 20);
    const auto psi = payout_series(x, CliquetSpec{});
    for (int t = 0; t <= 240; ++t) EXPECT_NEAR(psi[t], 0.035 * (t / 20), 1e-14) << t;
}

TEST(PayoutSeries, Properties) {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> z(0.0, 0.02);
    const CliquetSpec spec;
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> x{1.0};
        for (int t = 0; t < 240; ++t) x.push_back(x.back() * std::exp(z(rng)));
        const auto psi = payout_series(x, spec);
        ASSERT_EQ(psi.back(), cliquet_payout(x, 240, spec));
        std::vector<double> scaled(x);
        for (auto& v : scaled) v *= 3.7;
        const auto psi_scaled = payout_series(scaled, spec);
        for (int t = 0; t <= 240; ++t) {
            ASSERT_GE(psi[t], 0.0);
            ASSERT_LE(psi[t], (t / spec.period) * spec.cap + 1e-15);
            ASSERT_EQ(psi[t], psi[spec.period * (t / spec.period)]);
            ASSERT_NEAR(psi_scaled[t], psi[t], 1e-12);
        }
    }
}
