#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "deephedge/errors.hpp"
#include "deephedge/heston.hpp"

using namespace deephedge;

namespace {

// Fourth-order Runge-Kutta on dm/dt = kappa (theta - m); the mean of the
// square-root diffusion solves this ODE.
double mean_variance_ode(const HestonParams& p, double horizon, int substeps = 100000) {
    const double h = horizon / substeps;
    double m = p.v0;
    auto rhs = [&](double x) { return p.kappa * (p.theta - x); };
    for (int i = 0; i < substeps; ++i) {
        const double k1 = rhs(m);
        const double k2 = rhs(m + 0.5 * h * k1);
        const double k3 = rhs(m + 0.5 * h * k2);
        const double k4 = rhs(m + h * k3);
        m += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    return m;
}

struct SampleStats {
    double mean;
    double std_error;
};

template <typename F>
SampleStats column_stats(const PathSet& paths, F&& value) {
    const auto n = static_cast<double>(paths.n_paths());
    double sum = 0.0;
    double sq = 0.0;
    for (Eigen::Index p = 0; p < paths.n_paths(); ++p) {
        const double x = value(p);
        sum += x;
        sq += x * x;
    }
    const double mean = sum / n;
    const double var = (sq - n * mean * mean) / (n - 1.0);
    return {mean, std::sqrt(var / n)};
}

}  // namespace

TEST(CorrelatedNormals, IndependentWhenRhoZero) {
    NormalStream stream(11);
    double sxy = 0, sxx = 0, syy = 0, sx = 0, sy = 0;
    const int n = 1'000'000;
    for (int i = 0; i < n; ++i) {
        const auto z = correlated_normals(stream, 0.0);
        sx += z.spot;
        sy += z.variance;
        sxy += z.spot * z.variance;
        sxx += z.spot * z.spot;
        syy += z.variance * z.variance;
    }
    const double cov = sxy / n - (sx / n) * (sy / n);
    const double corr = cov / std::sqrt((sxx / n - sx * sx / n / n) * (syy / n - sy * sy / n / n));
    EXPECT_NEAR(corr, 0.0, 0.01);
}

TEST(CorrelatedNormals, MatchesRequestedCorrelation) {
    NormalStream stream(12);
    double sxy = 0, sxx = 0, syy = 0, sx = 0, sy = 0;
    const int n = 1'000'000;
    for (int i = 0; i < n; ++i) {
        const auto z = correlated_normals(stream, -0.5);
        sx += z.spot;
        sy += z.variance;
        sxy += z.spot * z.variance;
        sxx += z.spot * z.spot;
        syy += z.variance * z.variance;
    }
    const double cov = sxy / n - (sx / n) * (sy / n);
    const double corr = cov / std::sqrt((sxx / n - sx * sx / n / n) * (syy / n - sy * sy / n / n));
    EXPECT_NEAR(corr, -0.5, 0.01);
}

TEST(CorrelatedNormals, PerfectCorrelationCopiesDraw) {
    NormalStream stream(13);
    for (int i = 0; i < 10000; ++i) {
        const auto z = correlated_normals(stream, 1.0);
        ASSERT_EQ(z.spot, z.variance);
    }
}

TEST(CorrelatedNormals, RejectsRhoOutsideUnitInterval) {
    NormalStream stream(1);
    EXPECT_THROW(correlated_normals(stream, 1.5), ParameterError);
}

TEST(HestonParams, Validation) {
    HestonParams p;
    EXPECT_NO_THROW(p.validate());
    for (auto mutate : std::vector<std::function<void(HestonParams&)>>{
             [](HestonParams& q) { q.v0 = -0.1; }, [](HestonParams& q) { q.theta = -0.1; },
             [](HestonParams& q) { q.xi = -1; }, [](HestonParams& q) { q.kappa = -1; },
             [](HestonParams& q) { q.rho = -1.01; }, [](HestonParams& q) { q.s0 = 0.0; },
             [](HestonParams& q) { q.mu = NAN; }}) {
        HestonParams q;
        mutate(q);
        EXPECT_THROW(q.validate(), ParameterError);
    }
}

TEST(SimulatePaths, ErrorsOnBadInput) {
    HestonParams p;
    EXPECT_THROW(simulate_paths(p, 0, 10, 0.1, 1), EmptyInputError);
    EXPECT_THROW(simulate_paths(p, 1, 10, 0.0, 1), ParameterError);
    p.rho = 2.0;
    EXPECT_THROW(simulate_paths(p, 1, 10, 0.1, 1), ParameterError);
}

TEST(SimulatePaths, ZeroStepsIsInitialColumn) {
    HestonParams p;
    p.s0 = 2.5;
    const auto paths = simulate_paths(p, 7, 0, 1.0 / 240, 3);
    ASSERT_EQ(paths.spot.cols(), 1);
    for (Eigen::Index i = 0; i < 7; ++i) {
        EXPECT_EQ(paths.spot(i, 0), 2.5);
        EXPECT_EQ(paths.variance(i, 0), p.v0);
    }
}

TEST(SimulatePaths, ShapePositivityAndInitialValues) {
    HestonParams p;
    const auto paths = simulate_paths(p, 500, 240, 1.0 / 240, 5);
    ASSERT_EQ(paths.spot.rows(), 500);
    ASSERT_EQ(paths.spot.cols(), 241);
    EXPECT_GT(paths.spot.minCoeff(), 0.0);
    EXPECT_TRUE(paths.spot.allFinite());
    EXPECT_TRUE(paths.variance.allFinite());
    for (Eigen::Index i = 0; i < 500; ++i) {
        EXPECT_EQ(paths.spot(i, 0), p.s0);
        EXPECT_EQ(paths.variance(i, 0), p.v0);
    }
}

TEST(SimulatePaths, PositivityUnderExtremeVolOfVol) {
    HestonParams p;
    p.xi = 3.0;
    p.v0 = 0.5;
    p.theta = 0.5;
    const auto paths = simulate_paths(p, 200, 240, 1.0 / 240, 9);
    EXPECT_GT(paths.spot.minCoeff(), 0.0);
    EXPECT_LT(paths.variance.minCoeff(), 0.0);  // raw state dips below zero; sqrt uses max(v, 0)
}

TEST(SimulatePaths, DeterministicAcrossRunsAndThreads) {
    HestonParams p;
    const auto a = simulate_paths(p, 300, 50, 1.0 / 240, 42, 1);
    const auto b = simulate_paths(p, 300, 50, 1.0 / 240, 42, 1);
    const auto c = simulate_paths(p, 300, 50, 1.0 / 240, 42, 4);
    EXPECT_TRUE(a.spot == b.spot && a.variance == b.variance);
    EXPECT_TRUE(a.spot == c.spot && a.variance == c.variance);
    const auto d = simulate_paths(p, 300, 50, 1.0 / 240, 43, 1);
    EXPECT_FALSE(a.spot == d.spot);
}

TEST(SimulatePaths, PathDependsOnlyOnSeedAndIndex) {
    HestonParams p;
    const auto few = simulate_paths(p, 3, 60, 1.0 / 240, 8);
    const auto many = simulate_paths(p, 50, 60, 1.0 / 240, 8);
    EXPECT_TRUE(few.spot == many.spot.topRows(3));
}

TEST(SimulatePaths, TerminalVarianceMeanMatchesMomentOde) {
    HestonParams p;
    const double horizon = 1.0;
    const double ode = mean_variance_ode(p, horizon);
    const double closed = p.theta + (p.v0 - p.theta) * std::exp(-p.kappa * horizon);
    ASSERT_NEAR(ode, closed, 1e-14);

    const auto paths = simulate_paths(p, 20000, 240, horizon / 240, 2024);
    const auto s = column_stats(paths, [&](Eigen::Index i) { return paths.variance(i, 240); });
    EXPECT_LT(std::abs(s.mean - ode), 3.0 * s.std_error) << "mean " << s.mean << " se " << s.std_error;
}

TEST(SimulatePaths, SpotIsDriftMartingale) {
    HestonParams p;
    const auto paths = simulate_paths(p, 20000, 240, 1.0 / 240, 77);
    const auto s = column_stats(paths, [&](Eigen::Index i) { return paths.spot(i, 240) / p.s0; });
    EXPECT_LT(std::abs(s.mean - std::exp(p.mu)), 3.0 * s.std_error);
}

TEST(SimulatePaths, ConstantVarianceGivesGeometricBrownianLogMean) {
    HestonParams p;
    p.xi = 0.0;
    p.v0 = p.theta;
    const auto paths = simulate_paths(p, 20000, 240, 1.0 / 240, 31);
    EXPECT_TRUE((paths.variance.array() == p.theta).all());
    const auto s = column_stats(paths, [&](Eigen::Index i) { return std::log(paths.spot(i, 240) / p.s0); });
    EXPECT_LT(std::abs(s.mean - (p.mu - p.theta / 2.0)), 3.0 * s.std_error);
}

TEST(PathCsv, RoundTripIsExact) {
    HestonParams p;
    const auto paths = simulate_paths(p, 25, 40, 1.0 / 240, 99);
    std::stringstream buf;
    write_paths_csv(paths, buf);
    std::string header;
    std::getline(buf, header);
    EXPECT_EQ(header, "path_id,step,spot,variance");
    buf.seekg(0);
    const auto back = read_paths_csv(buf, paths.dt);
    EXPECT_TRUE(back.spot == paths.spot);
    EXPECT_TRUE(back.variance == paths.variance);
}

TEST(PathCsv, RejectsMalformedInput) {
    std::stringstream wrong_header("a,b,c,d\n0,0,1,0.1\n");
    EXPECT_THROW(read_paths_csv(wrong_header, 0.1), IoError);
    std::stringstream incomplete("path_id,step,spot,variance\n0,0,1,0.1\n0,1,1,0.1\n1,0,1,0.1\n");
    EXPECT_THROW(read_paths_csv(incomplete, 0.1), IoError);
    std::stringstream garbage("path_id,step,spot,variance\n0,0,x,0.1\n");
    EXPECT_THROW(read_paths_csv(garbage, 0.1), IoError);
}
