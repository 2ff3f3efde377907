#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>

#include "oracles.hpp"
#include "snse/error.hpp"
#include "snse/integrator.hpp"
#include "snse/studies.hpp"

using namespace snse;

namespace {

SchemeParams params(int N, double delta, SolverPolicy solver = SolverPolicy::Auto)
{
    SchemeParams p;
    p.nu = 1.0;
    p.delta = delta;
    p.cutoff = N;
    p.solver = solver;
    return p;
}

Eigen::VectorXd pack(SpectralField const& f)
{
    Eigen::VectorXd v(2 * f.coeffs().size());
    for (std::size_t i = 0; i < f.coeffs().size(); ++i) {
        v[2 * i] = f.coeffs()[i].real();
        v[2 * i + 1] = f.coeffs()[i].imag();
    }
    return v;
}

SpectralField unpack(GridPtr g, Eigen::VectorXd const& v)
{
    SpectralField f(g);
    for (std::size_t i = 0; i < f.coeffs().size(); ++i)
        f.coeffs()[i] = cplx(v[2 * i], v[2 * i + 1]);
    return f;
}

}  // namespace

TEST(Step, SingleModeDecayIsExact)
{
    auto sigma = ForcingBasis::low_mode({0.0});
    for (WaveVector k : {WaveVector{1, 0}, WaveVector{1, 1}, WaveVector{3, 4}})
        for (double delta : {0.1, 0.01}) {
            auto p = params(shell_count_up_to(25), delta);
            auto xi = SpectralField::mode(GridSpec::make(p.cutoff), k, cplx(0.7, -0.2));
            std::vector<double> dW{0.0};
            auto r = semi_implicit_step(xi, dW, p, sigma);
            auto expect = (1.0 / (1.0 + delta * k.eigenvalue())) * xi;
            EXPECT_LE(norm(r.xi - expect), 1e-12 * norm(expect)) << k.kx << "," << k.ky << " " << delta;
        }
}

TEST(Step, MatchesDenseLinearSolve)
{
    std::mt19937_64 rng(23);
    auto g = GridSpec::make(4);
    auto sigma = ForcingBasis::low_mode_shells(2, 0.5);
    auto prev = oracle::random_field(g, rng, 0.0, 0.5);
    std::vector<double> dW(sigma.dimension());
    std::normal_distribution<double> n(0.0, 0.3);
    for (auto& w : dW)
        w = n(rng);
    auto p = params(4, 0.1);

    std::size_t const dim = 2 * g->size();
    Eigen::MatrixXd L(dim, dim);
    for (std::size_t c = 0; c < dim; ++c) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(dim);
        e[c] = 1.0;
        auto x = unpack(g, e);
        auto Lx = oracle::convolution_advect(prev, x);
        Lx *= p.delta;
        auto modes = g->modes();
        for (std::size_t i = 0; i < modes.size(); ++i)
            Lx.coeffs()[i] += (1.0 + p.delta * p.nu * modes[i].eigenvalue()) * x.coeffs()[i];
        L.col(static_cast<Eigen::Index>(c)) = pack(Lx);
    }
    auto rhs = prev + sigma.apply(dW, g);
    Eigen::VectorXd sol = L.fullPivLu().solve(pack(rhs));
    auto expect = unpack(g, sol);

    for (auto policy : {SolverPolicy::FixedPoint, SolverPolicy::Krylov, SolverPolicy::Auto}) {
        auto r = semi_implicit_step(prev, dW, params(4, 0.1, policy), sigma);
        EXPECT_LE(norm(r.xi - expect), 1e-11 * norm(expect)) << to_string(policy);
    }
}

TEST(Step, EnergyIdentityPerStep)
{
    auto sigma = ForcingBasis::low_mode_shells(4, 0.5);
    auto g = GridSpec::make(16);
    InitialSpec init;
    auto xi = make_initial(init, g);
    NoiseStream s{5, 0, 1, 0.02, sigma.dimension()};
    auto p = params(16, 0.02);
    for (int n = 0; n < 50; ++n) {
        auto dW = coarse_increment(s, n);
        auto r = semi_implicit_step(xi, dW, p, sigma);
        EXPECT_LE(std::abs(energy_identity_defect(xi, r.xi, dW, p, sigma)), 1e-10);
        xi = r.xi;
    }
}

TEST(Step, NoiseFreeDecayBound)
{
    auto sigma = ForcingBasis::low_mode({0.0});
    auto g = GridSpec::make(16);
    InitialSpec init;
    init.energy = 50.0;
    auto xi0 = make_initial(init, g);
    auto p = params(16, 0.05);
    NoiseStream s{1, 0, 1, p.delta, 1};
    auto tr = simulate(xi0, 1000, p, sigma, s, {});
    double const e0 = std::sqrt(tr.energy[0]);
    for (std::size_t n = 0; n < tr.energy.size(); ++n)
        EXPECT_LE(std::sqrt(tr.energy[n]), e0 / std::pow(1.0 + p.delta, static_cast<double>(n)) * (1.0 + 1e-10));
}

TEST(Step, FixedPointBudgetExhaustionRaises)
{
    auto sigma = ForcingBasis::low_mode({0.0});
    InitialSpec init;
    init.energy = 1e4;
    auto g = GridSpec::make(16);
    auto p = params(16, 1.0, SolverPolicy::FixedPoint);
    p.max_iterations = 2;
    std::vector<double> dW{0.0};
    EXPECT_THROW(semi_implicit_step(make_initial(init, g), dW, p, sigma), SolverError);
    p.solver = SolverPolicy::Auto;
    p.max_iterations = 200;
    EXPECT_NO_THROW(semi_implicit_step(make_initial(init, g), dW, p, sigma));
}

TEST(Params, Validation)
{
    auto p = params(16, 0.1);
    p.delta0 = 0.05;
    try {
        p.validate();
        FAIL();
    } catch (ConfigError const& e) {
        EXPECT_EQ(e.field(), "delta");
    }
    p = params(16, 0.1);
    p.nu = 0.0;
    EXPECT_THROW(p.validate(), ConfigError);
    EXPECT_EQ(solver_policy_from_string("krylov"), SolverPolicy::Krylov);
    EXPECT_THROW(solver_policy_from_string("newton"), ConfigError);
}

TEST(Simulate, SplitRunEquivalence)
{
    auto sigma = ForcingBasis::low_mode_shells(4, 0.5);
    auto g = GridSpec::make(8);
    auto xi0 = make_initial({}, g);
    auto p = params(8, 0.01);
    NoiseStream s{3, 2, 1, 0.01, sigma.dimension()};
    RecordOptions all;
    all.stride = 0;
    auto straight = simulate(xi0, 20, p, sigma, s, all);
    auto first = simulate(xi0, 10, p, sigma, s, all);
    RecordOptions resume;
    resume.stride = 0;
    resume.first_step = 10;
    auto second = simulate(first.final_state(), 10, p, sigma, s, resume);
    EXPECT_EQ(second.final_state(), straight.final_state());
    EXPECT_EQ(second.steps.back(), 20);
}

TEST(Simulate, ReplayIsBitIdentical)
{
    auto sigma = ForcingBasis::low_mode_shells(4, 0.5);
    auto g = GridSpec::make(16);
    auto p = params(16, 0.01);
    NoiseStream s{8, 0, 1, 0.01, sigma.dimension()};
    auto a = simulate(make_initial({}, g), 50, p, sigma, s);
    auto b = simulate(make_initial({}, g), 50, p, sigma, s);
    ASSERT_EQ(a.states.size(), b.states.size());
    for (std::size_t i = 0; i < a.states.size(); ++i)
        EXPECT_EQ(a.states[i], b.states[i]);
    EXPECT_EQ(a.energy, b.energy);
}

TEST(Simulate, TapeMapAddressesFineBlocks)
{
    NoiseStream s{1, 0, 16, 0.02, 4};
    TapeMap m(s, 0.02 / 4);  // 4 steps per coarse step, blocks of 4 fine sub-steps
    EXPECT_EQ(m.steps_per_coarse(), 4);
    auto t = m.slot(6);
    EXPECT_EQ(t.n, 1);
    EXPECT_EQ(t.j0, 8);
    EXPECT_EQ(t.j1, 12);
    // a run at delta / 4 sees the same Brownian path as the coarse run
    auto sigma = ForcingBasis::low_mode_shells(4, 0.5);
    NoiseStream c{1, 0, 16, 0.02, sigma.dimension()};
    std::vector<double> sum(sigma.dimension(), 0.0), blk(sigma.dimension());
    TapeMap fine(c, 0.02 / 16);
    for (int step = 0; step < 16; ++step) {
        auto sl = fine.slot(step);
        block_increment(c, sl.n, sl.j0, sl.j1, blk);
        for (std::size_t k = 0; k < sum.size(); ++k)
            sum[k] += blk[k];
    }
    auto coarse = coarse_increment(c, 0);
    for (std::size_t k = 0; k < sum.size(); ++k)
        EXPECT_NEAR(sum[k], coarse[k], 1e-15);
}

TEST(Simulate, MomentProbeAndLogMeanExp)
{
    std::vector<double> v{1000.0, 1000.0 + std::log(3.0)};
    EXPECT_NEAR(log_mean_exp(v), 1000.0 + std::log(2.0), 1e-12);
    auto sigma = ForcingBasis::low_mode({0.0});
    auto g = GridSpec::make(4);
    auto xi0 = SpectralField::mode(g, {1, 0}, 0.5);
    auto p = params(4, 0.1);
    NoiseStream s{1, 0, 1, 0.1, 1};
    auto tr = simulate(xi0, 3, p, sigma, s);
    auto m = moment_probe(tr, 0.5);
    ASSERT_EQ(m.size(), 4u);
    // single mode |k| = 1: enstrophy equals energy
    double expect = 0.5 * tr.energy[2] + 0.5 * p.delta * (tr.enstrophy[1] + tr.enstrophy[2]);
    EXPECT_NEAR(m[2], expect, 1e-14);
}
