#include <gtest/gtest.h>

#include <cmath>

#include "snse/error.hpp"
#include "snse/studies.hpp"

using namespace snse;

namespace {

template <class C>
C with_defaults(C cfg)
{
    cfg.forcing = std::make_shared<ForcingBasis const>(ForcingBasis::low_mode_shells(4, 0.5));
    cfg.threads = 2;
    return cfg;
}

std::string field_of(auto&& fn)
{
    try {
        fn();
    } catch (ConfigError const& e) {
        return e.field();
    }
    return "<none>";
}

}  // namespace

TEST(Initial, PowerLawNestsAcrossGrids)
{
    InitialSpec s;
    auto big = make_initial(s, GridSpec::make(16));
    auto small = make_initial(s, GridSpec::make(4));
    EXPECT_EQ(resample(big, GridSpec::make(4)), small);
    EXPECT_NEAR(norm_squared(big), 1.0, 1e-12);  // norm_shells = 16
    s.kind = "mode";
    s.k = {5, 5};
    EXPECT_EQ(norm_squared(make_initial(s, GridSpec::make(4))), 0.0);  // inactive: dropped
    s.kind = "low-modes";
    s.shells = 2;
    s.energy = 0.25;
    auto lm = make_initial(s, GridSpec::make(8));
    EXPECT_NEAR(norm_squared(lm), 0.25, 1e-14);
    EXPECT_EQ(project(lm, 2), lm);
    s.kind = "bogus";
    EXPECT_THROW(make_initial(s, GridSpec::make(4)), ConfigError);
}

TEST(Studies, ValidationNamesTheField)
{
    HolderConfig h = with_defaults(HolderConfig{});
    h.lags = {0.0004, 0.01, 0.1};
    EXPECT_EQ(field_of([&] { holder_study(h); }), "lags");
    h.lags = {0.002, 0.0021};
    EXPECT_EQ(field_of([&] { holder_study(h); }), "lags");

    BiasConfig b = with_defaults(BiasConfig{});
    b.burn_in = b.proxy_time;
    EXPECT_EQ(field_of([&] { stationary_bias_study(b); }), "burn_in");

    WeakConfig w = with_defaults(WeakConfig{});
    w.grid = {{4, 0.02}};
    w.distance = DistanceParams{0.1, 0.5, 0.0};
    w.observables = {low_mode_coefficient({1, 0}, w.distance)};
    w.require_lipschitz = true;
    EXPECT_EQ(field_of([&] { weak_error_study(w); }), "observables");

    TemporalConfig t = with_defaults(TemporalConfig{});
    t.deltas = {0.1, 0.03, 0.01, 0.005};
    EXPECT_NE(field_of([&] { temporal_order_study(t); }), "<none>");

    ContractionConfig c = with_defaults(ContractionConfig{});
    c.grid = {{1, 0.01}};
    c.gap_shells = 2;
    EXPECT_EQ(field_of([&] { contraction_study(c); }), "gap_shells");
}

TEST(Studies, WeakSelfComparisonIsZero)
{
    WeakConfig w = with_defaults(WeakConfig{});
    w.reference = {8, 0.01};
    w.grid = {{4, 0.02}, {8, 0.01}};
    w.horizon = 0.2;
    w.paths = 4;
    w.distance = DistanceParams{0.1, 0.5, 0.25};
    w.observables = {clipped_energy(1.0, w.distance), low_mode_coefficient({1, 0}, w.distance)};
    auto r = weak_error_study(w);
    ASSERT_EQ(r.errors.size(), 2u);
    for (auto const& e : r.errors) {
        EXPECT_GT(e[0], 0.0);
        EXPECT_EQ(e[1], 0.0);
    }
}

TEST(Studies, LinearContractionRate)
{
    // without advection the synchronous gap on the first shell shrinks by 1/(1 + delta nu) per step
    ContractionConfig c = with_defaults(ContractionConfig{});
    c.grid = {{2, 0.02}, {3, 0.01}};
    c.horizon = 2.0;
    c.record_every = 0.1;
    c.fit_from = 0.0;
    c.paths = 4;
    c.exact_max = 4;
    c.advection = false;
    c.distance = DistanceParams{0.1, 1.0, 0.0};
    c.cost = CostKind::Rho;
    c.initial.kind = "zero";
    c.gap = 0.01;
    c.gap_shells = 1;
    auto r = contraction_study(c);
    ASSERT_EQ(r.series.size(), 2u);
    for (auto const& s : r.series) {
        double const expect = std::log(1.0 + s.theta.delta) / s.theta.delta;
        EXPECT_NEAR(s.C2, expect, 1e-9 * expect);
        EXPECT_NEAR(s.coupled.front(), 0.1, 1e-12);  // rho = |gap| / eps
        for (std::size_t i = 0; i < s.exact.size(); ++i)
            EXPECT_LE(s.exact[i], s.coupled[i] * (1 + 1e-12));
    }
}

TEST(Studies, TemporalNoiseFreeOrderIsOne)
{
    // deterministic dynamics: the strong error of the implicit step is first order
    TemporalConfig t;
    t.forcing = std::make_shared<ForcingBasis const>(ForcingBasis::low_mode_shells(4, 0.0));
    t.cutoff = 8;
    t.deltas = {0.04, 0.02, 0.01, 0.005};
    t.ref_factor = 8;
    t.horizon = 0.4;
    t.paths = 1;
    t.p = 1.0;
    auto r = temporal_order_study(t);
    EXPECT_NEAR(r.order, 1.0, 0.1);
}

TEST(Studies, ReportJsonShape)
{
    CertifyConfig c;
    c.triples = 200;
    auto r = certify_metric_study(c);
    auto j = r.report.to_json();
    EXPECT_EQ(j["schema"], "snse-lab/1");
    EXPECT_EQ(j["kind"], r.report.kind);
    EXPECT_TRUE(j["passed"].get<bool>());
    CsvTable tab{"t", {"a", "b"}, {{0.1, 2.0}}};
    EXPECT_EQ(tab.to_csv(), "a,b\n0.10000000000000001,2\n");
}
