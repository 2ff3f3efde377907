#include "snse/studies.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <set>

#include "snse/error.hpp"
#include "snse/parallel.hpp"
#include "snse/random.hpp"

namespace snse {
namespace {

constexpr double kL2Weight = 2.0 * 4.0 * std::numbers::pi * std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

/// a / b as an integer, or ConfigError naming `field`.
std::int64_t exact_ratio(double a, double b, std::string const& field)
{
    double const r = a / b;
    auto const n = static_cast<std::int64_t>(std::llround(r));
    if (n < 1 || std::abs(static_cast<double>(n) - r) > 1e-9 * r)
        throw ConfigError(field, std::to_string(a) + " is not an integer multiple of " + std::to_string(b));
    return n;
}

NoiseStream stream_for(StudyCommon const& c, std::uint64_t trajectory, int fine_factor, double delta)
{
    NoiseStream s;
    s.seed = c.seed;
    s.trajectory_id = trajectory;
    s.fine_factor = fine_factor;
    s.delta = delta;
    s.dimension = c.forcing->dimension();
    return s;
}

double mean_of(std::vector<double> const& v)
{
    double s = 0.0;
    for (double x : v)
        s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double stderr_of(std::vector<double> const& v)
{
    if (v.size() < 2)
        return 0.0;
    double const m = mean_of(v);
    double s = 0.0;
    for (double x : v)
        s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

nlohmann::json thetas_json(std::vector<Theta> const& g)
{
    auto a = nlohmann::json::array();
    for (auto const& t : g)
        a.push_back({{"N", t.cutoff}, {"delta", t.delta}});
    return a;
}

}  // namespace

// Reports ----------------------------------------------------------------------------------

std::string CsvTable::to_csv() const
{
    std::string out;
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (i)
            out += ',';
        out += columns[i];
    }
    out += '\n';
    char buf[40];
    for (auto const& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i)
                out += ',';
            std::snprintf(buf, sizeof buf, "%.17g", row[i]);
            out += buf;
        }
        out += '\n';
    }
    return out;
}

Check band_check(std::string id, std::string description, double value, double lo, double hi)
{
    return {std::move(id), std::move(description), value, lo, hi, value >= lo && value <= hi};
}

bool StudyReport::all_passed() const
{
    return std::all_of(checks.begin(), checks.end(), [](Check const& c) { return c.passed; });
}

nlohmann::json StudyReport::to_json() const
{
    nlohmann::json j;
    j["schema"] = "snse-lab/1";
    j["kind"] = kind;
    j["summary"] = summary;
    auto cs = nlohmann::json::array();
    for (auto const& c : checks)
        cs.push_back({{"id", c.id}, {"description", c.description}, {"value", c.value}, {"lo", c.lo},
                      {"hi", c.hi}, {"passed", c.passed}});
    j["checks"] = cs;
    j["passed"] = all_passed();
    return j;
}

nlohmann::json to_json(RateFit const& f)
{
    return {{"slope", f.slope}, {"intercept", f.intercept}, {"r_squared", f.r_squared},
            {"ci_halfwidth", f.ci_halfwidth}, {"xs", f.xs}, {"ys", f.ys}};
}

// Shared configuration -----------------------------------------------------------------------

SchemeParams StudyCommon::scheme(int cutoff, double delta) const
{
    SchemeParams p;
    p.nu = nu;
    p.delta = delta;
    p.cutoff = cutoff;
    p.solver = solver;
    p.delta0 = delta0;
    return p;
}

void StudyCommon::validate() const
{
    if (!forcing)
        throw ConfigError("forcing", "no forcing basis configured");
    if (!(nu > 0.0))
        throw ConfigError("nu", "must be positive");
}

nlohmann::json InitialSpec::to_json() const
{
    return {{"kind", kind},         {"energy", energy}, {"exponent", exponent},   {"shells", shells},
            {"norm_shells", norm_shells}, {"k", {k.kx, k.ky}}, {"amplitude", amplitude}, {"seed", seed}};
}

SpectralField make_initial(InitialSpec const& spec, GridPtr grid)
{
    SpectralField f(grid);
    if (spec.kind == "zero")
        return f;
    if (spec.kind == "mode") {
        if (grid->is_active(spec.k))
            f.set_coeff(spec.k, spec.amplitude);
        return f;
    }
    std::uint64_t const key = splitmix64(spec.seed);
    auto draw = [&](WaveVector k) {
        return normal_pair(key, {static_cast<std::uint32_t>(k.kx + 65536), static_cast<std::uint32_t>(k.ky),
                                 0x5eedu, 0u});
    };
    if (spec.kind == "power-law") {
        if (!(spec.energy >= 0.0))
            throw ConfigError("initial.energy", "must be non-negative");
        double total = 0.0;
        for (auto k : GridSpec::make(spec.norm_shells)->modes())
            total += kL2Weight * std::pow(static_cast<double>(k.eigenvalue()), -spec.exponent);
        double const c = std::sqrt(spec.energy / total);
        auto modes = grid->modes();
        auto coeffs = f.coeffs();
        for (std::size_t i = 0; i < coeffs.size(); ++i) {
            auto const z = draw(modes[i]);
            double const phase = std::atan2(z[1], z[0]);
            coeffs[i] = std::polar(c * std::pow(static_cast<double>(modes[i].eigenvalue()), -0.5 * spec.exponent), phase);
        }
        return f;
    }
    if (spec.kind == "low-modes") {
        int const lam = shell_eigenvalue(spec.shells);
        double total = 0.0;
        for (auto k : GridSpec::make(spec.shells)->modes()) {
            auto const z = draw(k);
            total += kL2Weight * (z[0] * z[0] + z[1] * z[1]);
        }
        double const c = total > 0.0 ? std::sqrt(spec.energy / total) : 0.0;
        auto modes = grid->modes();
        auto coeffs = f.coeffs();
        for (std::size_t i = 0; i < coeffs.size(); ++i)
            if (modes[i].eigenvalue() <= lam) {
                auto const z = draw(modes[i]);
                coeffs[i] = c * cplx(z[0], z[1]);
            }
        return f;
    }
    throw ConfigError("initial.kind", "unknown initial condition '" + spec.kind + "'");
}

double embedded_distance_sq(SpectralField const& coarse, SpectralField const& fine)
{
    if (coarse.grid().cutoff() > fine.grid().cutoff())
        return embedded_distance_sq(fine, coarse);
    auto modes = fine.grid().modes();
    auto c = fine.coeffs();
    double s = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i)
        s += std::norm(c[i] - coarse.coeff(modes[i]));
    return kL2Weight * s;
}

// Temporal order ----------------------------------------------------------------------------------

TemporalResult temporal_order_study(TemporalConfig const& cfg)
{
    cfg.validate();
    if (cfg.deltas.size() < 4)
        throw ConfigError("deltas", "temporal study needs at least 4 rungs");
    if (cfg.paths < 1)
        throw ConfigError("paths", "must be >= 1");
    if (!(cfg.p > 0.0))
        throw ConfigError("p", "must be positive");
    if (cfg.ref_factor < 1)
        throw ConfigError("ref_factor", "must be >= 1");
    double const dmax = *std::max_element(cfg.deltas.begin(), cfg.deltas.end());
    double const dmin = *std::min_element(cfg.deltas.begin(), cfg.deltas.end());
    if (!(dmin > 0.0))
        throw ConfigError("deltas", "steps must be positive");
    auto const R = static_cast<int>(exact_ratio(dmax, dmin, "deltas") * cfg.ref_factor);
    double const dref = dmin / cfg.ref_factor;
    auto const n_coarse = exact_ratio(cfg.horizon, dmax, "horizon");
    std::vector<std::int64_t> per(cfg.deltas.size());
    for (std::size_t r = 0; r < per.size(); ++r) {
        per[r] = exact_ratio(cfg.deltas[r], dmin, "deltas");
        exact_ratio(dmax, cfg.deltas[r], "deltas");  // every rung must tile the coarsest step
    }

    StudyCommon common = cfg;
    if (common.delta0 <= 0.0)
        common.delta0 = dmax;
    auto const grid = GridSpec::make(cfg.cutoff);
    auto const xi0 = make_initial(cfg.initial, grid);
    auto const& sigma = *cfg.forcing;

    auto sups = parallel_map(static_cast<std::size_t>(cfg.paths), cfg.threads, [&](std::size_t i) {
        auto const stream = stream_for(common, i, R, dmax);
        std::vector<SpectralField> ref;
        ref.reserve(static_cast<std::size_t>(n_coarse * R / cfg.ref_factor) + 1);
        RecordOptions ro;
        ro.stride = 0;
        ro.observer = [&](std::int64_t step, SpectralField const& x) {
            if (step % cfg.ref_factor == 0)
                ref.push_back(x);
        };
        simulate(xi0, n_coarse * R, common.scheme(cfg.cutoff, dref), sigma, stream, ro);

        std::vector<double> out(cfg.deltas.size());
        for (std::size_t r = 0; r < cfg.deltas.size(); ++r) {
            double sup = 0.0;
            RecordOptions rr;
            rr.stride = 0;
            rr.observer = [&](std::int64_t step, SpectralField const& x) {
                sup = std::max(sup, norm(x - ref[static_cast<std::size_t>(step * per[r])]));
            };
            simulate(xi0, n_coarse * (R / cfg.ref_factor) / per[r], common.scheme(cfg.cutoff, cfg.deltas[r]), sigma,
                     stream, rr);
            out[r] = sup;
        }
        return out;
    });

    TemporalResult res;
    res.deltas = cfg.deltas;
    std::size_t const nr = cfg.deltas.size();
    res.moment_p.assign(nr, 0.0);
    res.moment_1.assign(nr, 0.0);
    res.moment_2.assign(nr, 0.0);
    for (auto const& s : sups)
        for (std::size_t r = 0; r < nr; ++r) {
            res.moment_p[r] += std::pow(s[r], cfg.p);
            res.moment_1[r] += s[r];
            res.moment_2[r] += s[r] * s[r];
        }
    for (std::size_t r = 0; r < nr; ++r) {
        res.moment_p[r] /= cfg.paths;
        res.moment_1[r] /= cfg.paths;
        res.moment_2[r] /= cfg.paths;
    }
    FitOptions fo;
    fo.seed = cfg.seed;
    res.moment_fit = fit_rate(res.deltas, res.moment_p, fo);
    res.order = res.moment_fit.slope / cfg.p;
    std::vector<double> l2(nr);
    for (std::size_t r = 0; r < nr; ++r)
        l2[r] = std::sqrt(res.moment_2[r]);
    res.l2_fit = fit_rate(res.deltas, l2, fo);

    auto& rep = res.report;
    rep.kind = "converge-time";
    CsvTable t{"temporal_errors", {"delta", "moment_p", "moment_1", "moment_2"}, {}};
    for (std::size_t r = 0; r < nr; ++r)
        t.rows.push_back({res.deltas[r], res.moment_p[r], res.moment_1[r], res.moment_2[r]});
    rep.tables.push_back(std::move(t));
    CsvTable raw{"temporal_samples", {"path"}, {}};
    for (std::size_t r = 0; r < nr; ++r)
        raw.columns.push_back("sup_err_delta_" + std::to_string(r));
    for (std::size_t i = 0; i < sups.size(); ++i) {
        std::vector<double> row{static_cast<double>(i)};
        row.insert(row.end(), sups[i].begin(), sups[i].end());
        raw.rows.push_back(std::move(row));
    }
    rep.tables.push_back(std::move(raw));
    rep.summary = {{"reference", "self-refined"},
                   {"reference_delta", dref},
                   {"ref_factor", cfg.ref_factor},
                   {"cutoff", cfg.cutoff},
                   {"paths", cfg.paths},
                   {"horizon", cfg.horizon},
                   {"p", cfg.p},
                   {"moment_fit", to_json(res.moment_fit)},
                   {"normalized_order", res.order},
                   {"l2_fit", to_json(res.l2_fit)},
                   {"initial", cfg.initial.to_json()}};
    rep.checks.push_back(band_check("temporal.moment_slope", "slope of log E sup|e|^p vs log delta",
                                    res.moment_fit.slope, cfg.slope_lo, cfg.slope_hi));
    rep.checks.push_back(band_check("temporal.r2", "r^2 of the moment fit", res.moment_fit.r_squared, cfg.min_r2, 1.0));
    return res;
}

// Spatial order ---------------------------------------------------------------------------------------

SpatialResult spatial_order_study(SpatialConfig const& cfg)
{
    cfg.validate();
    if (cfg.cutoffs.empty())
        throw ConfigError("cutoffs", "empty ladder");
    for (std::size_t i = 0; i < cfg.cutoffs.size(); ++i) {
        if (cfg.cutoffs[i] < 1)
            throw ConfigError("cutoffs", "must be >= 1");
        if (i && cfg.cutoffs[i] <= cfg.cutoffs[i - 1])
            throw ConfigError("cutoffs", "ladder must be strictly increasing");
    }
    if (cfg.ref_cutoff <= cfg.cutoffs.back())
        throw ConfigError("ref_cutoff", "reference cutoff must exceed every rung");
    if (cfg.paths < 1)
        throw ConfigError("paths", "must be >= 1");
    auto const n_steps = exact_ratio(cfg.horizon, cfg.delta, "horizon");

    StudyCommon common = cfg;
    if (common.delta0 <= 0.0)
        common.delta0 = cfg.delta;
    auto const ref_grid = GridSpec::make(cfg.ref_cutoff);
    InitialSpec init = cfg.initial;
    init.norm_shells = cfg.ref_cutoff;
    auto const xi0 = make_initial(init, ref_grid);
    auto const& sigma = *cfg.forcing;

    auto errs = parallel_map(static_cast<std::size_t>(cfg.paths), cfg.threads, [&](std::size_t i) {
        auto const stream = stream_for(common, i, 1, cfg.delta);
        auto pref = common.scheme(cfg.ref_cutoff, cfg.delta);
        pref.advection = cfg.advection;
        std::vector<SpectralField> ref;
        RecordOptions ro;
        ro.stride = 0;
        ro.observer = [&](std::int64_t, SpectralField const& x) { ref.push_back(x); };
        simulate(xi0, n_steps, pref, sigma, stream, ro);

        std::vector<double> out;
        for (int N : cfg.cutoffs) {
            auto p = common.scheme(N, cfg.delta);
            p.advection = cfg.advection;
            double sup = 0.0;
            RecordOptions rr;
            rr.stride = 0;
            rr.observer = [&](std::int64_t step, SpectralField const& x) {
                sup = std::max(sup, embedded_distance_sq(x, ref[static_cast<std::size_t>(step)]));
            };
            simulate(resample(xi0, GridSpec::make(N)), n_steps, p, sigma, stream, rr);
            out.push_back(sup);
        }
        return out;
    });

    SpatialResult res;
    res.cutoffs = cfg.cutoffs;
    std::size_t const nr = cfg.cutoffs.size();
    res.error_sq.assign(nr, 0.0);
    for (auto const& e : errs)
        for (std::size_t r = 0; r < nr; ++r)
            res.error_sq[r] += e[r] / cfg.paths;
    std::vector<double> shells;
    for (int N : cfg.cutoffs) {
        res.dimensions.push_back(static_cast<double>(GridSpec::make(N)->dimension()));
        shells.push_back(N);
    }
    double const scale = std::max(1.0, norm_squared(xi0));
    res.resolved = *std::max_element(res.error_sq.begin(), res.error_sq.end()) <= 1e-24 * scale;

    auto& rep = res.report;
    rep.kind = "converge-space";
    if (nr >= 3 && !res.resolved) {
        FitOptions fo;
        fo.seed = cfg.seed;
        res.fit = fit_rate(res.dimensions, res.error_sq, fo);
        res.shell_fit = fit_rate(shells, res.error_sq, fo);
    }
    CsvTable t{"spatial_errors", {"cutoff", "dimension", "error_sq"}, {}};
    for (std::size_t r = 0; r < nr; ++r)
        t.rows.push_back({shells[r], res.dimensions[r], res.error_sq[r]});
    rep.tables.push_back(std::move(t));
    rep.summary = {{"reference_cutoff", cfg.ref_cutoff},
                   {"delta", cfg.delta},
                   {"horizon", cfg.horizon},
                   {"paths", cfg.paths},
                   {"resolved_regime", res.resolved},
                   {"abscissa", "dimension of Pi_N"},
                   {"initial", init.to_json()}};
    if (res.fit) {
        rep.summary["fit"] = to_json(*res.fit);
        rep.summary["shell_fit"] = to_json(*res.shell_fit);
        rep.checks.push_back(band_check("spatial.slope", "slope of log E sup|e|^2 vs log dim(Pi_N)", res.fit->slope,
                                        cfg.slope_lo, cfg.slope_hi));
        rep.checks.push_back(band_check("spatial.r2", "r^2 of the spatial fit", res.fit->r_squared, cfg.min_r2, 1.0));
    } else {
        rep.summary["fit"] = nullptr;
        rep.summary["fit_refused"] = res.resolved ? "resolved regime" : "fewer than 3 rungs";
    }
    return res;
}

// Hölder ---------------------------------------------------------------------------------------------

HolderResult holder_study(HolderConfig const& cfg)
{
    cfg.validate();
    if (!(cfg.m > 0.0))
        throw ConfigError("m", "must be positive");
    auto const n_burn = cfg.burn_in > 0.0 ? exact_ratio(cfg.burn_in, cfg.delta, "burn_in") : 0;
    auto const n_win = exact_ratio(cfg.window, cfg.delta, "window");

    std::set<std::int64_t> lagset;
    if (cfg.lags.empty()) {
        for (int i = 0; i <= 20; ++i)
            lagset.insert(std::llround(2.0 * std::pow(100.0, i / 20.0)));
    } else {
        for (double l : cfg.lags) {
            auto const s = std::llround(l / cfg.delta);
            if (s < 1)
                throw ConfigError("lags", "lag " + std::to_string(l) + " is shorter than one step");
            lagset.insert(s);
        }
    }
    if (lagset.size() < 3)
        throw ConfigError("lags", "need at least 3 distinct lags in steps");
    if (*lagset.rbegin() >= n_win)
        throw ConfigError("lags", "largest lag must be shorter than the window");
    std::vector<std::int64_t> const lags(lagset.begin(), lagset.end());

    StudyCommon common = cfg;
    if (common.delta0 <= 0.0)
        common.delta0 = cfg.delta;
    auto const grid = GridSpec::make(cfg.cutoff);
    auto const xi0 = make_initial(cfg.initial, grid);
    auto const p = common.scheme(cfg.cutoff, cfg.delta);

    auto per_path = parallel_map(static_cast<std::size_t>(cfg.paths), cfg.threads, [&](std::size_t i) {
        auto const stream = stream_for(common, i, 1, cfg.delta);
        SpectralField start = xi0;
        if (n_burn > 0) {
            RecordOptions rb;
            rb.stride = 0;
            start = simulate(xi0, n_burn, p, *cfg.forcing, stream, rb).final_state();
        }
        RecordOptions rw;
        rw.stride = 1;
        rw.first_step = n_burn;
        auto const tr = simulate(start, n_win, p, *cfg.forcing, stream, rw);
        std::vector<double> out;
        for (auto h : lags) {
            double s = 0.0;
            std::int64_t count = 0;
            for (std::int64_t t = 0; t + h <= n_win; ++t, ++count)
                s += std::pow(norm_squared(tr.states[static_cast<std::size_t>(t + h)] - tr.states[static_cast<std::size_t>(t)]),
                              0.5 * cfg.m);
            out.push_back(s / static_cast<double>(count));
        }
        return out;
    });

    HolderResult res;
    for (auto h : lags)
        res.lags.push_back(static_cast<double>(h) * cfg.delta);
    res.moments.assign(lags.size(), 0.0);
    for (auto const& v : per_path)
        for (std::size_t j = 0; j < lags.size(); ++j)
            res.moments[j] += v[j] / cfg.paths;
    FitOptions fo;
    fo.seed = cfg.seed;
    res.fit = fit_rate(res.lags, res.moments, fo);

    auto& rep = res.report;
    rep.kind = "holder";
    CsvTable t{"holder_increments", {"lag", "moment"}, {}};
    for (std::size_t j = 0; j < lags.size(); ++j)
        t.rows.push_back({res.lags[j], res.moments[j]});
    rep.tables.push_back(std::move(t));
    rep.summary = {{"m", cfg.m},
                   {"delta", cfg.delta},
                   {"cutoff", cfg.cutoff},
                   {"burn_in", cfg.burn_in},
                   {"window", cfg.window},
                   {"paths", cfg.paths},
                   {"lag_decades", std::log10(res.lags.back() / res.lags.front())},
                   {"fit", to_json(res.fit)}};
    rep.checks.push_back(band_check("holder.exponent", "slope of log E|xi(t)-xi(s)|^m vs log|t-s|", res.fit.slope,
                                    cfg.slope_lo, cfg.slope_hi));
    return res;
}

// Contraction -------------------------------------------------------------------------------------------

ContractionResult contraction_study(ContractionConfig const& cfg)
{
    cfg.validate();
    cfg.distance.validate();
    if (cfg.grid.empty())
        throw ConfigError("grid", "no (N, delta) points");
    double dmax = 0.0, dmin = kInf;
    int nmax = 0, nmin = std::numeric_limits<int>::max();
    for (auto const& t : cfg.grid) {
        dmax = std::max(dmax, t.delta);
        dmin = std::min(dmin, t.delta);
        nmax = std::max(nmax, t.cutoff);
        nmin = std::min(nmin, t.cutoff);
    }
    if (cfg.gap_shells > nmin)
        throw ConfigError("gap_shells", "perturbation must be resolved by every cutoff");
    auto const R = static_cast<int>(exact_ratio(dmax, dmin, "grid.delta"));
    auto const n_rec = exact_ratio(cfg.horizon, cfg.record_every, "horizon");

    StudyCommon common = cfg;
    if (common.delta0 <= 0.0)
        common.delta0 = dmax;
    auto const big = GridSpec::make(nmax);
    auto const xi0 = make_initial(cfg.initial, big);
    InitialSpec gs;
    gs.kind = "low-modes";
    gs.shells = cfg.gap_shells;
    gs.energy = cfg.gap * cfg.gap;
    gs.seed = cfg.initial.seed + 1;
    auto const xt0 = xi0 + make_initial(gs, big);

    ContractionResult res;
    auto& rep = res.report;
    rep.kind = "contraction";
    for (auto const& th : cfg.grid) {
        auto const stride = exact_ratio(cfg.record_every, th.delta, "record_every");
        auto p = common.scheme(th.cutoff, th.delta);
        p.advection = cfg.advection;
        auto const g = GridSpec::make(th.cutoff);
        auto const a0 = resample(xi0, g), b0 = resample(xt0, g);
        auto states = parallel_map(static_cast<std::size_t>(cfg.paths), cfg.threads, [&](std::size_t i) {
            auto const stream = stream_for(common, i, R, dmax);
            RecordOptions ro;
            ro.stride = static_cast<int>(stride);
            auto a = simulate(a0, n_rec * stride, p, *cfg.forcing, stream, ro);
            auto b = simulate(b0, n_rec * stride, p, *cfg.forcing, stream, ro);
            return std::make_pair(std::move(a.states), std::move(b.states));
        });

        ContractionSeries s;
        s.theta = th;
        for (std::int64_t j = 0; j <= n_rec; ++j) {
            std::vector<SpectralField> xa, xb;
            for (auto& pr : states) {
                xa.push_back(pr.first[static_cast<std::size_t>(j)]);
                xb.push_back(pr.second[static_cast<std::size_t>(j)]);
            }
            s.times.push_back(static_cast<double>(j) * cfg.record_every);
            double const cb = wasserstein_coupled_bound(xa, xb, cfg.cost, cfg.distance);
            s.coupled.push_back(cb);
            if (static_cast<std::size_t>(cfg.paths) <= cfg.exact_max) {
                double const ex =
                    wasserstein_exact(Ensemble::uniform(xa), Ensemble::uniform(xb), cfg.cost, cfg.distance).value;
                s.exact.push_back(ex);
                if (ex > cb * (1.0 + 1e-12) + 1e-300)
                    s.exact_below_coupled = false;
            }
        }
        std::vector<double> ft, fw;
        for (std::size_t j = 0; j < s.times.size(); ++j)
            if (s.times[j] >= cfg.fit_from - 1e-12 && s.coupled[j] > 0.0) {
                ft.push_back(s.times[j]);
                fw.push_back(s.coupled[j]);
            }
        FitOptions fo;
        fo.seed = cfg.seed;
        fo.log_x = false;
        s.fit = fit_rate(ft, fw, fo);
        s.C2 = -s.fit.slope;
        res.series.push_back(std::move(s));
    }

    double lo = kInf, hi = 0.0;
    bool all_pos = true;
    for (auto const& s : res.series) {
        all_pos = all_pos && s.C2 > 0.0;
        lo = std::min(lo, s.C2);
        hi = std::max(hi, s.C2);
    }
    res.spread = all_pos ? hi / lo : kInf;

    CsvTable t{"contraction_series", {"N", "delta", "time", "coupled", "exact"}, {}};
    auto js = nlohmann::json::array();
    bool ordering = true;
    for (auto const& s : res.series) {
        for (std::size_t j = 0; j < s.times.size(); ++j)
            t.rows.push_back({static_cast<double>(s.theta.cutoff), s.theta.delta, s.times[j], s.coupled[j],
                              s.exact.empty() ? std::nan("") : s.exact[j]});
        js.push_back({{"N", s.theta.cutoff}, {"delta", s.theta.delta}, {"C2", s.C2}, {"fit", to_json(s.fit)},
                      {"exact_below_coupled", s.exact_below_coupled}});
        ordering = ordering && s.exact_below_coupled;
        rep.checks.push_back(band_check("contraction.C2." + std::to_string(s.theta.cutoff) + "." +
                                            std::to_string(s.theta.delta),
                                        "fitted exponential rate C2 > 0", s.C2, 1e-300, kInf));
        rep.checks.push_back(band_check("contraction.r2." + std::to_string(s.theta.cutoff) + "." +
                                            std::to_string(s.theta.delta),
                                        "r^2 of log W fit", s.fit.r_squared, cfg.min_r2, 1.0));
    }
    rep.tables.push_back(std::move(t));
    rep.summary = {{"series", js},
                   {"spread", res.spread},
                   {"grid", thetas_json(cfg.grid)},
                   {"paths", cfg.paths},
                   {"distance", {{"eps", cfg.distance.eps}, {"s", cfg.distance.s}, {"alpha", cfg.distance.alpha}}},
                   {"cost", cfg.cost == CostKind::Rho ? "rho" : "rho-weighted"},
                   {"gap", cfg.gap},
                   {"coupling", "synchronized (shared noise tape)"},
                   {"empirical_laws", "W values are between empirical ensembles"}};
    if (res.series.size() > 1)
        rep.checks.push_back(band_check("contraction.spread", "max C2 / min C2 across the grid", res.spread, 1.0,
                                        cfg.max_spread));
    if (static_cast<std::size_t>(cfg.paths) <= cfg.exact_max)
        rep.checks.push_back(band_check("contraction.ordering", "exact W <= coupled bound at every time",
                                        ordering ? 1.0 : 0.0, 1.0, 1.0));
    return res;
}

// Weak error ---------------------------------------------------------------------------------------------

double weak_rate_function(Theta const& theta, double s, double p, double beta)
{
    double const dim = static_cast<double>(GridSpec::make(theta.cutoff)->dimension());
    return std::pow(std::max(std::pow(theta.delta, s), std::pow(theta.delta, 0.5 * p)), 0.5 * beta) +
           std::pow(dim, -0.25 * s);
}

WeakResult weak_error_study(WeakConfig const& cfg)
{
    cfg.validate();
    if (cfg.observables.empty())
        throw ConfigError("observables", "no observables");
    if (cfg.require_lipschitz)
        for (auto const& o : cfg.observables)
            if (!o.lipschitz)
                throw ConfigError("observables", "observable '" + o.name() + "' has no declared Lipschitz constant");
    std::vector<Theta> thetas = cfg.grid;
    thetas.push_back(cfg.reference);
    double dmax = 0.0, dmin = kInf;
    int nmax = 0;
    for (auto const& t : thetas) {
        dmax = std::max(dmax, t.delta);
        dmin = std::min(dmin, t.delta);
        nmax = std::max(nmax, t.cutoff);
    }
    auto const R = static_cast<int>(exact_ratio(dmax, dmin, "grid.delta"));
    auto const n_rec = exact_ratio(cfg.horizon, cfg.record_every, "horizon");
    StudyCommon common = cfg;
    if (common.delta0 <= 0.0)
        common.delta0 = dmax;
    auto const xi0 = make_initial(cfg.initial, GridSpec::make(nmax));
    std::size_t const nt = thetas.size(), no = cfg.observables.size(), np = static_cast<std::size_t>(cfg.paths);

    // values[t * np + i][o][j]
    auto values = parallel_map(nt * np, cfg.threads, [&](std::size_t u) {
        auto const& th = thetas[u / np];
        auto const stride = exact_ratio(cfg.record_every, th.delta, "record_every");
        auto const stream = stream_for(common, u % np, R, dmax);
        std::vector<std::vector<double>> v(no);
        RecordOptions ro;
        ro.stride = 0;
        ro.observer = [&](std::int64_t step, SpectralField const& x) {
            if (step % stride == 0)
                for (std::size_t o = 0; o < no; ++o)
                    v[o].push_back(cfg.observables[o](x));
        };
        simulate(resample(xi0, GridSpec::make(th.cutoff)), n_rec * stride, common.scheme(th.cutoff, th.delta),
                 *cfg.forcing, stream, ro);
        return v;
    });

    WeakResult res;
    std::size_t const ref = nt - 1;
    res.errors.assign(no, std::vector<double>(nt, 0.0));
    res.noise.assign(no, std::vector<double>(nt, 0.0));
    for (std::size_t o = 0; o < no; ++o)
        for (std::size_t t = 0; t < nt; ++t) {
            double best = -1.0, band = 0.0;
            for (std::int64_t j = 0; j <= n_rec; ++j) {
                std::vector<double> d(np);
                for (std::size_t i = 0; i < np; ++i)
                    d[i] = values[t * np + i][o][static_cast<std::size_t>(j)] -
                           values[ref * np + i][o][static_cast<std::size_t>(j)];
                double const m = std::abs(mean_of(d));
                if (m > best) {
                    best = m;
                    band = 2.0 * stderr_of(d);
                }
            }
            res.errors[o][t] = best;
            res.noise[o][t] = band;
        }
    for (auto const& th : thetas)
        res.g.push_back(weak_rate_function(th, cfg.distance.s, cfg.g_p, cfg.g_beta));
    for (std::size_t o = 0; o < no; ++o)
        for (std::size_t t = 0; t + 1 < cfg.grid.size(); ++t)
            if (res.errors[o][t + 1] > res.errors[o][t] + res.noise[o][t] + res.noise[o][t + 1])
                res.trend_ok = false;

    auto& rep = res.report;
    rep.kind = "weak";
    CsvTable tab{"weak_errors", {"N", "delta", "g"}, {}};
    for (auto const& o : cfg.observables) {
        tab.columns.push_back("err[" + o.name() + "]");
        tab.columns.push_back("noise[" + o.name() + "]");
    }
    for (std::size_t t = 0; t < nt; ++t) {
        std::vector<double> row{static_cast<double>(thetas[t].cutoff), thetas[t].delta, res.g[t]};
        for (std::size_t o = 0; o < no; ++o) {
            row.push_back(res.errors[o][t]);
            row.push_back(res.noise[o][t]);
        }
        tab.rows.push_back(std::move(row));
    }
    rep.tables.push_back(std::move(tab));
    auto obs = nlohmann::json::array();
    for (auto const& o : cfg.observables)
        obs.push_back({{"name", o.name()}, {"lipschitz", o.lipschitz ? nlohmann::json(*o.lipschitz) : nlohmann::json()}});
    rep.summary = {{"grid", thetas_json(cfg.grid)},
                   {"reference", {{"N", cfg.reference.cutoff}, {"delta", cfg.reference.delta}}},
                   {"observables", obs},
                   {"paths", cfg.paths},
                   {"horizon", cfg.horizon},
                   {"g", {{"s", cfg.distance.s}, {"p", cfg.g_p}, {"beta", cfg.g_beta}}},
                   {"trend_ok", res.trend_ok}};
    rep.checks.push_back(band_check("weak.trend", "weak error non-increasing along the grid within noise",
                                    res.trend_ok ? 1.0 : 0.0, 1.0, 1.0));
    return res;
}

// Stationary bias -------------------------------------------------------------------------------------------

BiasResult stationary_bias_study(BiasConfig const& cfg)
{
    cfg.validate();
    if (!(cfg.burn_in < cfg.proxy_time))
        throw ConfigError("burn_in", "burn-in must be shorter than the proxy run");
    if (cfg.replicas < 2)
        throw ConfigError("replicas", "need at least 2 replicas");
    if (cfg.run_times.size() < 3)
        throw ConfigError("run_times", "need at least 3 run lengths");
    std::vector<std::int64_t> ns;
    for (double t : cfg.run_times) {
        ns.push_back(exact_ratio(t, cfg.delta, "run_times"));
        if (ns.size() > 1 && ns.back() <= ns[ns.size() - 2])
            throw ConfigError("run_times", "must be strictly increasing");
    }
    auto const n_proxy = exact_ratio(cfg.proxy_time, cfg.delta, "proxy_time");
    auto const n_burn = cfg.burn_in > 0.0 ? exact_ratio(cfg.burn_in, cfg.delta, "burn_in") : 0;

    StudyCommon common = cfg;
    if (common.delta0 <= 0.0)
        common.delta0 = cfg.delta;
    auto const grid = GridSpec::make(cfg.cutoff);
    auto const p = common.scheme(cfg.cutoff, cfg.delta);
    auto const& phi = cfg.observable;

    // Proxy for the invariant average and stationary starting points.
    auto const spacing = (n_proxy - n_burn) / cfg.replicas;
    double proxy_sum = 0.0;
    std::int64_t proxy_count = 0;
    std::vector<SpectralField> starts;
    {
        auto const stream = stream_for(common, static_cast<std::uint64_t>(cfg.replicas) + 1000000u, 1, cfg.delta);
        RecordOptions ro;
        ro.stride = 0;
        ro.observer = [&](std::int64_t step, SpectralField const& x) {
            if (step <= n_burn)
                return;
            proxy_sum += phi(x);
            ++proxy_count;
            if ((step - n_burn) % spacing == 0 && static_cast<int>(starts.size()) < cfg.replicas)
                starts.push_back(x);
        };
        simulate(SpectralField(grid), n_proxy, p, *cfg.forcing, stream, ro);
    }
    double const proxy = proxy_sum / static_cast<double>(proxy_count);
    auto const xi0 = make_initial(cfg.initial, grid);
    auto const n_max = ns.back();

    auto avgs = parallel_map(static_cast<std::size_t>(cfg.replicas), cfg.threads, [&](std::size_t r) {
        auto const stream = stream_for(common, r, 1, cfg.delta);
        auto run = [&](SpectralField const& x0) {
            std::vector<double> a;
            double s = 0.0;
            std::size_t next = 0;
            RecordOptions ro;
            ro.stride = 0;
            ro.observer = [&](std::int64_t step, SpectralField const& x) {
                if (step == 0)
                    return;
                s += phi(x);
                if (next < ns.size() && step == ns[next]) {
                    a.push_back(s / static_cast<double>(step));
                    ++next;
                }
            };
            simulate(x0, n_max, p, *cfg.forcing, stream, ro);
            return a;
        };
        return std::make_pair(run(xi0), run(starts[r]));
    });

    BiasResult res;
    res.proxy = proxy;
    for (std::size_t k = 0; k < ns.size(); ++k) {
        std::vector<double> diff, a;
        double mse = 0.0;
        for (auto const& pr : avgs) {
            diff.push_back(pr.first[k] - pr.second[k]);
            a.push_back(pr.first[k]);
            mse += (pr.first[k] - proxy) * (pr.first[k] - proxy);
        }
        res.n.push_back(static_cast<double>(ns[k]));
        res.bias.push_back(std::abs(mean_of(diff)));
        res.bias_hw.push_back(1.96 * stderr_of(diff));
        res.bias_direct.push_back(std::abs(mean_of(a) - proxy));
        res.mse.push_back(mse / static_cast<double>(avgs.size()));
    }
    FitOptions fo;
    fo.seed = cfg.seed;
    res.bias_fit = fit_rate(res.n, res.bias, fo);
    res.mse_fit = fit_rate(res.n, res.mse, fo);
    for (std::size_t k = 0; k < ns.size(); ++k)
        for (std::size_t l = k + 1; l < ns.size(); ++l)
            if (ns[l] == 2 * ns[k] && res.bias[l] > res.bias[k] + 2.0 * std::max(res.bias_hw[k], res.bias_hw[l]))
                res.doubling_ok = false;

    auto& rep = res.report;
    rep.kind = "bias";
    CsvTable t{"bias_ladder", {"n", "n_delta", "bias", "bias_halfwidth", "bias_direct", "mse"}, {}};
    for (std::size_t k = 0; k < ns.size(); ++k)
        t.rows.push_back({res.n[k], res.n[k] * cfg.delta, res.bias[k], res.bias_hw[k], res.bias_direct[k], res.mse[k]});
    rep.tables.push_back(std::move(t));
    rep.summary = {{"observable", phi.name()},
                   {"cutoff", cfg.cutoff},
                   {"delta", cfg.delta},
                   {"stationary_proxy", {{"value", proxy}, {"run_time", cfg.proxy_time}, {"burn_in", cfg.burn_in}}},
                   {"replicas", cfg.replicas},
                   {"bias_estimator", "paired with stationary-start companions on the same tape"},
                   {"bias_fit", to_json(res.bias_fit)},
                   {"mse_fit", to_json(res.mse_fit)},
                   {"doubling_ok", res.doubling_ok},
                   {"initial", cfg.initial.to_json()}};
    rep.checks.push_back(band_check("bias.exponent", "decay exponent of the bias vs n", -res.bias_fit.slope,
                                    cfg.exponent_lo, cfg.exponent_hi));
    rep.checks.push_back(band_check("bias.mse_exponent", "decay exponent of the replica MSE vs n", -res.mse_fit.slope,
                                    cfg.exponent_lo, cfg.exponent_hi));
    rep.checks.push_back(band_check("bias.doubling", "bias(2n) <= bias(n) + 2 half-widths", res.doubling_ok ? 1.0 : 0.0,
                                    1.0, 1.0));
    return res;
}

// Lyapunov -------------------------------------------------------------------------------------------------

LyapunovResult lyapunov_study(LyapunovConfig const& cfg)
{
    cfg.validate();
    if (cfg.paths < 1 || cfg.seeds < 1)
        throw ConfigError("paths", "paths and seeds must be >= 1");
    auto const n_steps = exact_ratio(cfg.horizon, cfg.delta, "horizon");
    StudyCommon common = cfg;
    if (common.delta0 <= 0.0)
        common.delta0 = cfg.delta;
    auto const p = common.scheme(cfg.cutoff, cfg.delta);
    double const s2 = cfg.forcing->trace_l2();

    LyapunovResult res;
    res.alpha = cfg.alpha > 0.0 ? cfg.alpha : cfg.nu / (8.0 * s2);
    res.C = (1.0 + cfg.nu * p.effective_delta0()) * s2 / cfg.nu;
    auto const xi0 = make_initial(cfg.initial, GridSpec::make(cfg.cutoff));
    double const e0 = norm_squared(xi0);
    double const lam1 = 1.0;
    std::size_t const np = static_cast<std::size_t>(cfg.paths);

    auto energies = parallel_map(np * static_cast<std::size_t>(cfg.seeds), cfg.threads, [&](std::size_t u) {
        StudyCommon c = common;
        c.seed = cfg.seed + u / np;
        auto const stream = stream_for(c, u % np, 1, cfg.delta);
        RecordOptions ro;
        ro.stride = 0;
        return simulate(xi0, n_steps, p, *cfg.forcing, stream, ro).energy;
    });

    CsvTable t{"lyapunov", {"seed", "step", "time", "log_mean_exp", "log_bound", "mean_energy"}, {}};
    for (int s = 0; s < cfg.seeds; ++s) {
        double worst = -kInf;
        for (std::int64_t n = 0; n <= n_steps; ++n) {
            std::vector<double> v(np);
            double me = 0.0;
            for (std::size_t i = 0; i < np; ++i) {
                double const e = energies[static_cast<std::size_t>(s) * np + i][static_cast<std::size_t>(n)];
                v[i] = res.alpha * e;
                me += e / static_cast<double>(np);
            }
            double const lme = log_mean_exp(v);
            double const bound = res.alpha * (2.0 * e0 / std::pow(1.0 + cfg.nu * lam1 * cfg.delta, static_cast<double>(n)) +
                                              res.C) +
                                 std::log(cfg.factor);
            worst = std::max(worst, lme - bound);
            t.rows.push_back({static_cast<double>(s), static_cast<double>(n), static_cast<double>(n) * cfg.delta, lme,
                              bound, me});
        }
        res.worst_margin.push_back(worst);
        res.seeds_ok += worst <= 0.0;
    }
    auto& rep = res.report;
    rep.kind = "lyapunov";
    rep.tables.push_back(std::move(t));
    double const frac = static_cast<double>(res.seeds_ok) / cfg.seeds;
    rep.summary = {{"alpha", res.alpha},       {"C", res.C},         {"factor", cfg.factor},
                   {"paths", cfg.paths},       {"seeds", cfg.seeds}, {"seeds_ok", res.seeds_ok},
                   {"worst_margin", res.worst_margin}, {"initial_energy", e0}};
    rep.checks.push_back(band_check("lyapunov.fraction", "fraction of seeds below the Lyapunov bound", frac,
                                    cfg.min_fraction, 1.0));
    return res;
}

// Coupling ----------------------------------------------------------------------------------------------------

CouplingResult coupling_study(CouplingConfig const& cfg)
{
    cfg.validate();
    auto const n_steps = exact_ratio(cfg.horizon, cfg.delta, "horizon");
    StudyCommon common = cfg;
    if (common.delta0 <= 0.0)
        common.delta0 = cfg.delta;
    auto const& sigma = *cfg.forcing;
    auto const proposal = propose_beta(cfg.K, cfg.nu, common.delta0, sigma.trace_l2(), cfg.nondegeneracy_margin);

    NudgeParams np;
    np.K = cfg.K;
    np.beta = cfg.beta > 0.0 ? cfg.beta : proposal.beta;
    np.base = common.scheme(cfg.cutoff, cfg.delta);
    np.enforce_beta_condition = cfg.enforce_beta_condition;
    np.validate();

    auto const nd = sigma.check_nondegeneracy(cfg.K, cfg.nu, common.delta0, cfg.nondegeneracy_margin);
    if (cfg.record_shifts && !nd.range_satisfied)
        throw ConfigError("nudge.K", "forcing does not cover Pi_K; shifts are undefined (disable shifts or lower K)");

    auto const grid = GridSpec::make(cfg.cutoff);
    auto const xi0 = make_initial(cfg.initial, grid);
    auto const shell_modes = real_eigenfunctions_in_shells(cfg.perturbation_shell);
    RealEigenfunction const direction = shell_modes[cfg.perturbation_shell > 1
                                                        ? real_eigenfunctions_in_shells(cfg.perturbation_shell - 1).size()
                                                        : 0];

    CouplingResult res;
    res.beta = np.beta;
    auto& rep = res.report;
    rep.kind = "couple";
    CsvTable gaps{"couple_gaps", {"perturbation", "step", "time", "mean_gap_sq"}, {}};
    CsvTable shifts{"couple_shifts", {"perturbation", "path", "kl"}, {}};

    for (double a : cfg.perturbations) {
        auto const zeta0 = a * real_eigenfunction_field(grid, direction);
        auto const xt0 = xi0 + zeta0;
        auto pairs = parallel_map(static_cast<std::size_t>(cfg.paths), cfg.threads, [&](std::size_t i) {
            CoupleOptions co;
            co.record_shifts = cfg.record_shifts;
            co.stride = i == 0 ? 1 : 0;
            return coupled_simulate(xi0, xt0, n_steps, np, sigma, stream_for(common, i, 1, cfg.delta), co);
        });
        CouplingRun run;
        run.perturbation = a;
        run.mean_gaps = mean_gaps(pairs);
        run.fit = pathwise_contraction_check(run.mean_gaps, np.beta, cfg.delta, cfg.band);
        run.final_ratio = run.mean_gaps.back() / run.mean_gaps.front();
        if (cfg.record_shifts) {
            auto const cost = girsanov_cost(pairs, cfg.delta);
            run.kl_mean = cost.kl_bound;
            run.tv_half = cost.tv_bound(0.5);
            run.majorant = girsanov_majorant(np.beta, cfg.delta, sigma.pseudo_inverse_norm(), a * a);
            auto const replay = simulate_shifted(xt0, pairs[0], np, sigma, stream_for(common, 0, 1, cfg.delta));
            for (std::size_t k = 0; k < replay.states.size(); ++k)
                run.replay_error = std::max(run.replay_error, norm(replay.states[k] - pairs[0].nudged.states[k]));
            for (std::size_t i = 0; i < cost.kl_samples.size(); ++i)
                shifts.rows.push_back({a, static_cast<double>(i), cost.kl_samples[i]});
        }
        for (std::size_t n = 0; n < run.mean_gaps.size(); ++n)
            gaps.rows.push_back({a, static_cast<double>(n), static_cast<double>(n) * cfg.delta, run.mean_gaps[n]});
        res.runs.push_back(std::move(run));
    }

    std::set<double> distinct(cfg.perturbations.begin(), cfg.perturbations.end());
    if (cfg.record_shifts && distinct.size() >= 3) {
        std::vector<double> xs, ys;
        for (auto const& r : res.runs) {
            xs.push_back(r.perturbation * r.perturbation);
            ys.push_back(r.kl_mean);
        }
        FitOptions fo;
        fo.seed = cfg.seed;
        res.kl_fit = fit_rate(xs, ys, fo);
    }

    rep.tables.push_back(std::move(gaps));
    if (cfg.record_shifts)
        rep.tables.push_back(std::move(shifts));
    auto runs = nlohmann::json::array();
    for (auto const& r : res.runs) {
        runs.push_back({{"perturbation", r.perturbation},
                        {"final_gap_ratio", r.final_ratio},
                        {"log_factor", r.fit.log_factor},
                        {"theoretical_log_factor", r.fit.theoretical},
                        {"r_squared", r.fit.r_squared},
                        {"exact_coupling", r.fit.exact_coupling},
                        {"kl_mean", r.kl_mean},
                        {"majorant", r.majorant},
                        {"tv_bound_half", r.tv_half},
                        {"replay_error", r.replay_error}});
        std::string const tag = std::to_string(r.perturbation);
        rep.checks.push_back(band_check("couple.gap_ratio." + tag, "E|zeta(T)|^2 / |zeta0|^2", r.final_ratio, 0.0, 1e-3));
        rep.checks.push_back(band_check("couple.log_factor." + tag, "fitted per-step log factor <= 0", r.fit.log_factor,
                                        -kInf, 0.0));
        if (!r.fit.exact_coupling)
            rep.checks.push_back(band_check("couple.r2." + tag, "r^2 of gap fit", r.fit.r_squared, 0.9, 1.0));
        if (cfg.record_shifts) {
            rep.checks.push_back(band_check("couple.kl_ratio." + tag, "mean KL bound / majorant shape",
                                            r.majorant > 0.0 ? r.kl_mean / r.majorant : 0.0, 0.1, 10.0));
            rep.checks.push_back(band_check("couple.replay." + tag, "shifted-tape replay reproduces the nudged path",
                                            r.replay_error, 0.0, 1e-8));
        }
    }
    rep.summary = {{"K", cfg.K},
                   {"beta", np.beta},
                   {"beta_proposal", {{"beta", proposal.beta},
                                      {"k_beta_condition", proposal.k_beta_condition},
                                      {"beta_lower_bound", proposal.beta_lower_bound},
                                      {"beta_lower_bound_rhs", proposal.beta_lower_bound_rhs}}},
                   {"nondegeneracy", {{"range_satisfied", nd.range_satisfied},
                                      {"eigenvalue_satisfied", nd.eigenvalue_satisfied},
                                      {"lambda_K_plus_1", nd.eigenvalue_lhs},
                                      {"rhs", nd.eigenvalue_rhs},
                                      {"margin_c", cfg.nondegeneracy_margin}}},
                   {"delta", cfg.delta},
                   {"cutoff", cfg.cutoff},
                   {"paths", cfg.paths},
                   {"horizon", cfg.horizon},
                   {"runs", runs}};
    if (res.kl_fit) {
        rep.summary["kl_fit"] = to_json(*res.kl_fit);
        rep.checks.push_back(band_check("couple.kl_slope", "slope of log kl vs log |zeta0|^2", res.kl_fit->slope, 0.8,
                                        1.2));
    }
    return res;
}

// Metric certification -----------------------------------------------------------------------------------------

CertifyResult certify_metric_study(CertifyConfig const& cfg)
{
    cfg.distance.validate();
    auto const grid = GridSpec::make(cfg.cutoff);
    auto const triples = random_triples(grid, cfg.triples, cfg.seed, cfg.distance.eps, cfg.distance.s);
    CertifyResult res;
    res.certificate = certify_triangle(cfg.distance, cfg.gamma, triples);
    for (auto const& [u, v, w] : triples) {
        double const uv = rho(u, v, cfg.distance), vu = rho(v, u, cfg.distance);
        bool ok = uv == vu && rho(u, u, cfg.distance) == 0.0 && uv >= 0.0 && uv <= 1.0;
        ok = ok && uv <= rho(u, w, cfg.distance) + rho(w, v, cfg.distance) + 1e-12;
        res.metric_violations += !ok;
    }
    auto& rep = res.report;
    rep.kind = "certify-metric";
    CsvTable t{"certify", {"eps", "s", "alpha", "gamma", "K_tilde", "C", "tested", "violations", "worst_ratio",
                           "metric_violations"}, {}};
    t.rows.push_back({cfg.distance.eps, cfg.distance.s, cfg.distance.alpha, cfg.gamma, res.certificate.K_tilde,
                      res.certificate.C, static_cast<double>(res.certificate.tested),
                      static_cast<double>(res.certificate.violations), res.certificate.worst_ratio,
                      static_cast<double>(res.metric_violations)});
    rep.tables.push_back(std::move(t));
    rep.summary = {{"K_tilde", res.certificate.K_tilde}, {"C", res.certificate.C},
                   {"tested", res.certificate.tested},   {"violations", res.certificate.violations},
                   {"worst_ratio", res.certificate.worst_ratio}, {"metric_violations", res.metric_violations}};
    rep.checks.push_back(band_check("certify.violations", "generalized triangle violations",
                                    static_cast<double>(res.certificate.violations), 0.0, 0.0));
    rep.checks.push_back(band_check("certify.metric", "rho_{eps,s} metric axiom violations",
                                    static_cast<double>(res.metric_violations), 0.0, 0.0));
    return res;
}

}  // namespace snse
