#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "snse/error.hpp"
#include "snse/forcing.hpp"
#include "snse/random.hpp"

using namespace snse;

TEST(Philox, KnownAnswerVectors)
{
    // Reference vectors of the Random123 distribution (philox4x32, 10 rounds).
    using A4 = std::array<std::uint32_t, 4>;
    EXPECT_EQ(philox4x32({0, 0, 0, 0}, {0, 0}), (A4{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
    EXPECT_EQ(philox4x32({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}),
              (A4{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
    EXPECT_EQ(philox4x32({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}),
              (A4{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(Philox, NormalMoments)
{
    double s1 = 0.0, s2 = 0.0, s4 = 0.0;
    int const n = 200000;
    auto const key = splitmix64(42);
    for (std::uint32_t i = 0; i < n / 2; ++i) {
        auto z = normal_pair(key, {i, 0, 0, 0});
        for (double v : z) {
            s1 += v;
            s2 += v * v;
            s4 += v * v * v * v;
        }
    }
    EXPECT_NEAR(s1 / n, 0.0, 0.01);
    EXPECT_NEAR(s2 / n, 1.0, 0.015);
    EXPECT_NEAR(s4 / n, 3.0, 0.08);
}

TEST(Noise, CoarseIsSumOfFine)
{
    NoiseStream s{9, 3, 8, 0.04, 6};
    auto c = coarse_increment(s, 17);
    std::vector<double> sum(6, 0.0);
    for (int j = 0; j < 8; ++j) {
        auto f = fine_increment(s, 17, j);
        for (int k = 0; k < 6; ++k)
            sum[k] += f[k];
    }
    EXPECT_EQ(c, sum);  // bitwise: same summation order
    std::vector<double> blk(6);
    block_increment(s, 17, 2, 6, blk);
    std::vector<double> part(6, 0.0);
    for (int j = 2; j < 6; ++j) {
        auto f = fine_increment(s, 17, j);
        for (int k = 0; k < 6; ++k)
            part[k] += f[k];
    }
    EXPECT_EQ(blk, part);
    EXPECT_EQ(sample_increment(s, 17, Level{}), c);
    EXPECT_EQ(sample_increment(s, 17, Level{5}), fine_increment(s, 17, 5));
}

TEST(Noise, FineVarianceAndIndependenceOfTrajectories)
{
    NoiseStream s{1, 0, 4, 0.1, 2};
    NoiseStream t = s;
    t.trajectory_id = 1;
    double v = 0.0, cross = 0.0;
    int const n = 20000;
    for (int i = 0; i < n; ++i) {
        auto a = fine_increment(s, i, 1);
        auto b = fine_increment(t, i, 1);
        v += a[0] * a[0];
        cross += a[0] * b[0];
    }
    EXPECT_NEAR(v / n, 0.1 / 4, 0.1 / 4 * 0.05);
    EXPECT_NEAR(cross / n, 0.0, 0.1 / 4 * 0.05);
    EXPECT_EQ(fine_increment(s, 5, 1), fine_increment(s, 5, 1));
}

TEST(Noise, Validation)
{
    NoiseStream s{1, 0, 0, 0.1, 2};
    EXPECT_THROW(s.validate(), StructuralError);
    s.fine_factor = 2;
    s.delta = -1.0;
    EXPECT_THROW(s.validate(), StructuralError);
}

TEST(Eigenfunctions, OrderAndNormalization)
{
    auto e = real_eigenfunctions(6);
    ASSERT_EQ(e.size(), 6u);
    // shell 1: (0,1) and (1,0) in stored-half lexicographic order, cos before sin
    EXPECT_EQ(e[0].k, (WaveVector{0, 1}));
    EXPECT_FALSE(e[0].is_sine);
    EXPECT_TRUE(e[1].is_sine);
    EXPECT_EQ(e[2].k, (WaveVector{1, 0}));
    EXPECT_EQ(e[4].k.eigenvalue(), 2);
    EXPECT_EQ(real_eigenfunctions_in_shells(4).size(), 20u);
    auto g = GridSpec::make(8);
    for (auto const& f : real_eigenfunctions_in_shells(4))
        EXPECT_NEAR(norm_squared(real_eigenfunction_field(g, f)), 1.0, 1e-14);
}

TEST(ForcingBasis, LowModeShellsPreset)
{
    auto s = ForcingBasis::low_mode_shells(4, 0.5);
    EXPECT_EQ(s.dimension(), 20u);
    EXPECT_NEAR(s.trace_l2(), 0.5, 1e-14);
    EXPECT_NEAR(s.pseudo_inverse_norm(), std::sqrt(40.0), 1e-10);
}

TEST(ForcingBasis, ApplyThenPseudoInverseIsIdentity)
{
    auto s = ForcingBasis::low_mode({0.3, 0.5, 0.7, 0.2, 0.1, 0.9});
    std::vector<double> eta{1.0, -2.0, 0.5, 0.25, 3.0, -1.5};
    auto f = s.apply(eta);
    auto back = s.pseudo_inverse_apply(f);
    for (std::size_t k = 0; k < eta.size(); ++k)
        EXPECT_NEAR(back[k], eta[k], 1e-10);
    // applying on a finer grid changes nothing
    auto fine = s.apply(eta, GridSpec::make(16));
    EXPECT_NEAR(norm(fine), norm(f), 1e-14);
}

TEST(ForcingBasis, OutOfRangeRaises)
{
    auto s = ForcingBasis::low_mode({1.0, 1.0});
    auto f = SpectralField::mode(GridSpec::make(4), {2, 0}, 1.0);
    EXPECT_THROW(s.pseudo_inverse_apply(f), RangeError);
}

TEST(ForcingBasis, Nondegeneracy)
{
    auto s = ForcingBasis::low_mode_shells(4, 0.5);
    auto ok = s.check_nondegeneracy(4, 1.0, 0.01, 0.0);
    EXPECT_TRUE(ok.range_satisfied);
    EXPECT_TRUE(ok.uncovered.empty());
    auto bad = s.check_nondegeneracy(5, 1.0, 0.01, 0.0);
    EXPECT_FALSE(bad.range_satisfied);
    EXPECT_EQ(bad.uncovered.size(), 4u);  // shell |k|^2 = 8: (2,2), (2,-2), cos and sin
    // eigenvalue inequality lambda_{K+1} >= (c/nu) max{1/delta0, ...}
    auto big_c = s.check_nondegeneracy(4, 1.0, 0.01, 1.0);
    EXPECT_FALSE(big_c.eigenvalue_satisfied);  // 8 < 100
    EXPECT_DOUBLE_EQ(big_c.eigenvalue_lhs, 8.0);
    EXPECT_NEAR(big_c.eigenvalue_rhs, 100.0, 1e-12);
}

TEST(ForcingBasis, ZeroAmplitudeBasisIsUsable)
{
    auto s = ForcingBasis::low_mode({0.0, 0.0});
    std::vector<double> eta{1.0, 1.0};
    EXPECT_EQ(norm(s.apply(eta)), 0.0);
}
