#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "snse/error.hpp"
#include "snse/spectral_field.hpp"

using namespace snse;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST(Grid, ShellsCountDistinctEigenvaluesWithTies)
{
    // eigenvalues of -Laplacian on the torus: 1, 2, 4, 5, 8, 9, 10, 13, ...
    int const expected[] = {1, 2, 4, 5, 8, 9, 10, 13, 16, 17, 18, 20, 25, 26, 29, 32};
    for (int i = 0; i < 16; ++i)
        EXPECT_EQ(shell_eigenvalue(i + 1), expected[i]);
    EXPECT_EQ(shell_count_up_to(5), 4);
    EXPECT_EQ(shell_count_up_to(6), 4);
}

TEST(Grid, Examples)
{
    struct Row
    {
        int N, lambda, kmax, M;
        std::size_t modes;
    };
    for (auto r : {Row{4, 5, 2, 8, 10}, Row{8, 13, 3, 10, 22}, Row{16, 32, 5, 16, 50}}) {
        auto g = GridSpec::make(r.N);
        EXPECT_EQ(g->cutoff_eigenvalue(), r.lambda) << r.N;
        EXPECT_EQ(g->max_wavenumber(), r.kmax) << r.N;
        EXPECT_EQ(g->padded_resolution(), r.M) << r.N;
        EXPECT_EQ(g->size(), r.modes) << r.N;
        EXPECT_EQ(g->dimension(), 2 * r.modes);
    }
    // (3,4) and (5,0) share |k|^2 = 25 and enter together
    auto g = GridSpec::make(shell_count_up_to(25));
    EXPECT_TRUE(g->is_active({3, 4}));
    EXPECT_TRUE(g->is_active({5, 0}));
    EXPECT_TRUE(g->is_active({-4, 3}));
    EXPECT_EQ(g->next_eigenvalue(), 26);
}

TEST(Grid, StoredHalfIsLexicographic)
{
    auto g = GridSpec::make(8);
    auto m = g->modes();
    for (std::size_t i = 1; i < m.size(); ++i)
        EXPECT_TRUE(m[i - 1].kx < m[i].kx || (m[i - 1].kx == m[i].kx && m[i - 1].ky < m[i].ky));
    for (auto k : m)
        EXPECT_TRUE(GridSpec::in_stored_half(k));
}

TEST(Field, ConjugateSymmetryAndInactiveModes)
{
    auto g = GridSpec::make(4);
    SpectralField f(g);
    f.set_coeff({1, -1}, cplx(1.0, 2.0));
    EXPECT_EQ(f.coeff({-1, 1}), cplx(1.0, -2.0));
    EXPECT_EQ(f.coeff({1, -1}), cplx(1.0, 2.0));
    EXPECT_EQ(f.coeff({7, 7}), cplx{});
    EXPECT_THROW(f.set_coeff({3, 3}, 1.0), StructuralError);
    EXPECT_THROW(f.set_coeff({0, 0}, 1.0), StructuralError);
}

TEST(Field, ArithmeticRequiresSameGrid)
{
    SpectralField a(GridPtr(GridSpec::make(4))), b(GridPtr(GridSpec::make(8)));
    EXPECT_THROW(a += b, StructuralError);
    EXPECT_THROW((void)inner(a, b), StructuralError);
}

TEST(Field, NormMatchesRealSpaceQuadrature)
{
    std::mt19937_64 rng(3);
    auto g = GridSpec::make(8);
    auto f = oracle::random_field(g, rng);
    auto x = to_real(f);
    double const M = g->padded_resolution();
    double s = 0.0;
    for (double v : x)
        s += v * v;
    double const quad = 4.0 * kPi * kPi * s / (M * M);
    EXPECT_NEAR(norm_squared(f), quad, 1e-12 * quad);
    EXPECT_NEAR(norm_squared(f), oracle::l2_sq(f), 1e-13 * quad);
}

TEST(Field, SingleModeRealValues)
{
    auto g = GridSpec::make(4);
    // xi = cos(x + 2y): coefficient 1/2 at (1,2)
    auto f = SpectralField::mode(g, {1, 2}, 0.5);
    auto x = to_real(f);
    int const M = g->padded_resolution();
    double err = 0.0;
    for (int i = 0; i < M; ++i)
        for (int j = 0; j < M; ++j)
            err = std::max(err, std::abs(x[i * M + j] - std::cos(2 * kPi * i / M + 2 * 2 * kPi * j / M)));
    EXPECT_LT(err, 1e-14);
    EXPECT_NEAR(norm_squared(f), 2 * kPi * kPi, 1e-12);
}

TEST(Field, RealSpaceRoundTrip)
{
    std::mt19937_64 rng(5);
    auto g = GridSpec::make(16);
    auto f = oracle::random_field(g, rng);
    auto back = from_real(g, to_real(f));
    EXPECT_LT(norm(back - f), 1e-13 * norm(f));
}

TEST(Field, SobolevWeights)
{
    auto g = GridSpec::make(8);
    auto f = SpectralField::mode(g, {2, 1}, cplx(0.3, -0.4));
    double const l2 = norm_squared(f);
    EXPECT_NEAR(sobolev_norm_squared(f, 1.0), 5.0 * l2, 1e-13);
    EXPECT_NEAR(sobolev_norm_squared(f, -0.5), std::pow(5.0, -0.5) * l2, 1e-13);
}

TEST(Field, ProjectAndResample)
{
    std::mt19937_64 rng(7);
    auto big = GridSpec::make(16);
    auto small = GridSpec::make(4);
    auto f = oracle::random_field(big, rng);
    auto p = project(f, 4);
    auto r = resample(f, small);
    for (auto k : big->modes())
        EXPECT_EQ(p.coeff(k), k.eigenvalue() <= 5 ? f.coeff(k) : cplx{});
    EXPECT_EQ(resample(r, big), p);
    EXPECT_EQ(project(f, 16), f);
}

TEST(BiotSavart, CurlRecoversVorticityAndIsDivergenceFree)
{
    std::mt19937_64 rng(11);
    auto g = GridSpec::make(16);
    auto xi = oracle::random_field(g, rng);
    auto u = biot_savart(xi);
    EXPECT_LT(norm(curl(u) - xi), 1e-14 * norm(xi));
    EXPECT_LT(max_divergence(u), 1e-14);
}

TEST(BiotSavart, CosineVorticityGivesSineVelocity)
{
    // xi = cos x  =>  u = (0, sin x): curl u = d_x u2 = cos x
    auto g = GridSpec::make(4);
    auto xi = SpectralField::mode(g, {1, 0}, 0.5);
    auto u = biot_savart(xi);
    EXPECT_NEAR(std::abs(u.u1.coeff({1, 0})), 0.0, 1e-15);
    EXPECT_NEAR(u.u2.coeff({1, 0}).real(), 0.0, 1e-15);
    EXPECT_NEAR(u.u2.coeff({1, 0}).imag(), -0.5, 1e-15);
}

TEST(Advect, MatchesConvolutionOracle)
{
    std::mt19937_64 rng(13);
    for (int N : {1, 2, 4, 6}) {
        auto g = GridSpec::make(N);
        auto a = oracle::random_field(g, rng, 0.5);
        auto b = oracle::random_field(g, rng, 0.5);
        auto fast = advect(a, b);
        auto slow = oracle::convolution_advect(a, b);
        double scale = 0.0;
        for (auto z : slow.coeffs())
            scale = std::max(scale, std::abs(z));
        for (std::size_t i = 0; i < fast.coeffs().size(); ++i)
            EXPECT_NEAR(std::abs(fast.coeffs()[i] - slow.coeffs()[i]), 0.0, 1e-12 * std::max(1.0, scale)) << N;
    }
}

TEST(Advect, SkewSymmetry)
{
    std::mt19937_64 rng(17);
    auto g = GridSpec::make(16);
    for (int t = 0; t < 10; ++t) {
        auto a = oracle::random_field(g, rng);
        auto b = oracle::random_field(g, rng);
        auto c = oracle::random_field(g, rng);
        EXPECT_LT(std::abs(inner(advect(a, b), b)), 1e-12 * norm(a) * norm_squared(b));
        // (B(a,b), c) = -(B(a,c), b)
        double const lhs = inner(advect(a, b), c), rhs = -inner(advect(a, c), b);
        EXPECT_NEAR(lhs, rhs, 1e-11 * (std::abs(lhs) + 1.0));
    }
}

TEST(Advect, AdvectorReuseMatchesOneShot)
{
    std::mt19937_64 rng(19);
    auto g = GridSpec::make(8);
    auto a = oracle::random_field(g, rng);
    Advector adv(a);
    for (int t = 0; t < 3; ++t) {
        auto b = oracle::random_field(g, rng);
        EXPECT_EQ(adv.apply(b), advect(a, b));
    }
}
