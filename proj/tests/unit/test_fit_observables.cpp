#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "snse/error.hpp"
#include "snse/fit.hpp"
#include "snse/observables.hpp"

using namespace snse;

TEST(Fit, ExactPowerLaw)
{
    std::vector<double> x{1, 2, 4, 8, 16}, y;
    for (double v : x)
        y.push_back(3.0 * std::pow(v, -1.5));
    auto f = fit_rate(x, y);
    EXPECT_NEAR(f.slope, -1.5, 1e-12);
    EXPECT_NEAR(f.intercept, std::log(3.0), 1e-12);
    EXPECT_NEAR(f.r_squared, 1.0, 1e-12);
    EXPECT_NEAR(f.ci_halfwidth, 0.0, 1e-10);
}

TEST(Fit, SemiLog)
{
    std::vector<double> t{0, 1, 2, 3}, y;
    for (double v : t)
        y.push_back(2.0 * std::exp(-0.25 * v));
    FitOptions o;
    o.log_x = false;
    EXPECT_NEAR(fit_rate(t, y, o).slope, -0.25, 1e-12);
}

TEST(Fit, DegenerateInputs)
{
    std::vector<double> x{1, 1, 2}, y{1, 2, 3};
    EXPECT_THROW(fit_rate(x, y), FitError);
    std::vector<double> x2{1, 2, 3}, y2{1, -2, 3};
    EXPECT_THROW(fit_rate(x2, y2), FitError);
    std::vector<double> x3{1, 2}, y3{1, 2};
    EXPECT_THROW(fit_rate(x3, y3), FitError);
}

TEST(Fit, BootstrapCoverageCalibration)
{
    // noisy power laws: the 95% half-width should cover the true slope most of the time
    std::mt19937_64 rng(53);
    std::normal_distribution<double> n(0.0, 0.05);
    int covered = 0;
    int const trials = 200;
    std::vector<double> x;
    for (int i = 0; i < 12; ++i)
        x.push_back(std::pow(2.0, i));
    for (int t = 0; t < trials; ++t) {
        std::vector<double> y;
        for (double v : x)
            y.push_back(std::pow(v, 0.5) * std::exp(n(rng)));
        FitOptions o;
        o.seed = static_cast<std::uint64_t>(t);
        auto f = fit_rate(x, y, o);
        covered += std::abs(f.slope - 0.5) <= f.ci_halfwidth;
    }
    EXPECT_GE(covered, static_cast<int>(0.85 * trials));
    EXPECT_LE(covered, trials);
}

TEST(Observables, ValuesAndNames)
{
    DistanceParams dp{0.1, 0.5, 0.25};
    auto g = GridSpec::make(4);
    auto x = SpectralField::mode(g, {1, 0}, cplx(0.3, 0.1));
    double const e = norm_squared(x);
    EXPECT_NEAR(clipped_energy(0.5, dp)(x), std::min(e, 0.25), 1e-15);
    EXPECT_NEAR(smoothed_energy(2.0, dp)(x), std::exp(-e / 4.0), 1e-15);
    EXPECT_NEAR(low_mode_coefficient({1, 0}, dp)(x), 0.3, 1e-15);
    EXPECT_EQ(constant_observable(2.5)(x), 2.5);
    EXPECT_EQ(parse_observable("clipped-energy:1", dp).kind, ObservableKind::ClippedEnergy);
    EXPECT_EQ(parse_observable("low-mode:1,2", dp).k0, (WaveVector{1, 2}));
    EXPECT_THROW(parse_observable("energy", dp), ConfigError);
    EXPECT_THROW(parse_observable("clipped-energy:-1", dp), ConfigError);
    EXPECT_FALSE(low_mode_coefficient({1, 0}, DistanceParams{0.1, 0.5, 0.0}).lipschitz.has_value());
}

TEST(Observables, DeclaredLipschitzConstantsHold)
{
    // |phi(x) - phi(y)| <= L rho_{eps,s,alpha}(x, y) on pairs at many scales
    DistanceParams dp{0.1, 0.5, 0.25};
    std::mt19937_64 rng(59);
    std::uniform_real_distribution<double> u(-6.0, 1.5);
    auto g = GridSpec::make(4);
    std::vector<ObservableSpec> obs{clipped_energy(1.0, dp), clipped_energy(0.3, dp), smoothed_energy(1.0, dp),
                                    smoothed_energy(0.2, dp), low_mode_coefficient({1, 0}, dp),
                                    low_mode_coefficient({1, 1}, dp)};
    for (auto const& o : obs) {
        ASSERT_TRUE(o.lipschitz.has_value()) << o.name();
        for (int t = 0; t < 3000; ++t) {
            auto x = oracle::random_field(g, rng, 0.0, std::pow(10.0, u(rng)));
            auto y = x + oracle::random_field(g, rng, 0.0, std::pow(10.0, u(rng)));
            double const lhs = std::abs(o(x) - o(y));
            double const rhs = *o.lipschitz * rho_weighted(x, y, dp);
            EXPECT_LE(lhs, rhs * (1 + 1e-12) + 1e-300) << o.name();
        }
    }
}
