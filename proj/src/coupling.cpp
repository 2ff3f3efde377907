#include "snse/coupling.hpp"

#include <algorithm>
#include <cmath>

#include "snse/error.hpp"
#include "snse/fit.hpp"

namespace snse {
namespace {

std::vector<double> plain_diagonal(GridSpec const& g, SchemeParams const& p)
{
    std::vector<double> d(g.size());
    auto modes = g.modes();
    for (std::size_t i = 0; i < d.size(); ++i)
        d[i] = 1.0 + p.delta * p.nu * modes[i].eigenvalue();
    return d;
}

void start(Trajectory& tr, SchemeParams const& p, SpectralField const& x, std::int64_t n_steps)
{
    tr.params = p;
    tr.energy.reserve(static_cast<std::size_t>(n_steps) + 1);
    tr.enstrophy.reserve(static_cast<std::size_t>(n_steps) + 1);
    tr.energy.push_back(norm_squared(x));
    tr.enstrophy.push_back(sobolev_norm_squared(x, 1.0));
    tr.steps.push_back(0);
    tr.states.push_back(x);
}

void record(Trajectory& tr, std::int64_t step, SpectralField const& x, int iterations, bool keep)
{
    tr.energy.push_back(norm_squared(x));
    tr.enstrophy.push_back(sobolev_norm_squared(x, 1.0));
    tr.iterations.push_back(iterations);
    if (keep) {
        tr.steps.push_back(step);
        tr.states.push_back(x);
    }
}

StepResult solve_with(SpectralField const& prev, SpectralField const& rhs, std::vector<double> const& diag,
                      SchemeParams const& p, std::int64_t step)
{
    try {
        if (!p.advection)
            return solve_implicit(rhs, diag, nullptr, p);
        Advector const adv(prev);
        return solve_implicit(rhs, diag, &adv, p);
    } catch (SolverError const& e) {
        throw SolverError(std::string(e.what()) + " at step " + std::to_string(step), e.residual(), e.iterations(),
                          step);
    }
}

}  // namespace

void NudgeParams::validate() const
{
    base.validate();
    if (K < 1)
        throw ConfigError("nudge.K", "must be >= 1");
    if (!(beta >= 0.0))
        throw ConfigError("nudge.beta", "must be non-negative");
    if (enforce_beta_condition) {
        double const lhs = base.nu * shell_eigenvalue(K + 1);
        if (lhs < 2.0 * beta)
            throw ConfigError("nudge.beta", "nu lambda_{K+1} = " + std::to_string(lhs) + " < 2 beta = " +
                                                std::to_string(2.0 * beta));
    }
}

BetaProposal propose_beta(int K, double nu, double delta0, double sigma_sq, double c)
{
    BetaProposal b;
    double const lam = shell_eigenvalue(K + 1);
    b.beta = 0.5 * nu * lam;
    b.k_beta_condition = nu * lam >= 2.0 * b.beta;
    double const s4 = sigma_sq * sigma_sq;
    b.beta_lower_bound_rhs = c * std::max({1.0 / delta0, delta0 * delta0 * s4 / (nu * nu * nu), s4 / std::pow(nu, 5)});
    b.beta_lower_bound = b.beta >= b.beta_lower_bound_rhs;
    return b;
}

std::vector<double> nudged_diagonal(GridSpec const& grid, NudgeParams const& np)
{
    auto d = plain_diagonal(grid, np.base);
    int const lamK = shell_eigenvalue(np.K);
    auto modes = grid.modes();
    if (np.beta != 0.0)
        for (std::size_t i = 0; i < d.size(); ++i)
            if (modes[i].eigenvalue() <= lamK)
                d[i] += np.beta * np.base.delta;
    return d;
}

namespace {

SpectralField nudged_rhs(SpectralField const& prev, SpectralField const& target, std::span<double const> dW,
                         NudgeParams const& np, ForcingBasis const& sigma)
{
    SpectralField rhs = prev;
    sigma.add_applied(dW, rhs);
    if (np.beta != 0.0) {
        double const w = np.beta * np.base.delta;
        int const lamK = shell_eigenvalue(np.K);
        auto modes = rhs.grid().modes();
        auto r = rhs.coeffs();
        auto t = target.coeffs();
        for (std::size_t i = 0; i < r.size(); ++i)
            if (modes[i].eigenvalue() <= lamK)
                r[i] += w * t[i];
    }
    return rhs;
}

}  // namespace

StepResult nudged_step(SpectralField const& nudged_prev, SpectralField const& target_new, std::span<double const> dW,
                       NudgeParams const& np, ForcingBasis const& sigma)
{
    if (!nudged_prev.same_grid(target_new) || nudged_prev.grid().cutoff() != np.base.cutoff)
        throw StructuralError("nudged step: grid mismatch");
    auto const rhs = nudged_rhs(nudged_prev, target_new, dW, np, sigma);
    auto const diag = nudged_diagonal(nudged_prev.grid(), np);
    return solve_with(nudged_prev, rhs, diag, np.base, -1);
}

CoupledPair coupled_simulate(SpectralField const& xi0, SpectralField const& nudged0, std::int64_t n_steps,
                             NudgeParams const& np, ForcingBasis const& sigma, NoiseStream const& stream,
                             CoupleOptions const& opt)
{
    np.validate();
    if (stream.dimension != sigma.dimension())
        throw StructuralError("noise dimension does not match forcing");
    auto const& p = np.base;
    TapeMap const tape(stream, p.delta);
    auto const grid = GridSpec::make(p.cutoff);
    auto const dplain = plain_diagonal(*grid, p);
    auto const dnudge = nudged_diagonal(*grid, np);

    CoupledPair pair;
    SpectralField x = resample(xi0, grid);
    SpectralField y = resample(nudged0, grid);
    start(pair.primary, p, x, n_steps);
    start(pair.nudged, p, y, n_steps);
    pair.gaps.reserve(static_cast<std::size_t>(n_steps) + 1);
    pair.gaps.push_back(norm_squared(y - x));

    std::vector<double> dW(sigma.dimension());
    for (std::int64_t m = 0; m < n_steps; ++m) {
        auto const slot = tape.slot(m);
        block_increment(stream, slot.n, slot.j0, slot.j1, dW);

        SpectralField rhs = x;
        sigma.add_applied(dW, rhs);
        auto a = solve_with(x, rhs, dplain, p, m + 1);
        auto b = solve_with(y, nudged_rhs(y, a.xi, dW, np, sigma), dnudge, p, m + 1);
        x = std::move(a.xi);
        y = std::move(b.xi);

        bool const keep = (opt.stride > 0 && (m + 1) % opt.stride == 0) || m + 1 == n_steps;
        record(pair.primary, m + 1, x, a.iterations, keep);
        record(pair.nudged, m + 1, y, b.iterations, keep);
        SpectralField const gap = y - x;
        pair.gaps.push_back(norm_squared(gap));
        if (opt.record_shifts) {
            auto psi = sigma.pseudo_inverse_apply(project(gap, np.K));
            for (auto& v : psi)
                v *= -np.beta;
            pair.shifts.push_back(std::move(psi));
        }
    }
    return pair;
}

Trajectory simulate_shifted(SpectralField const& nudged0, CoupledPair const& pair, NudgeParams const& np,
                            ForcingBasis const& sigma, NoiseStream const& stream)
{
    auto const& p = np.base;
    std::int64_t const n_steps = static_cast<std::int64_t>(pair.shifts.size());
    if (pair.gaps.size() != static_cast<std::size_t>(n_steps) + 1)
        throw StructuralError("shifted replay needs recorded shifts for every step");
    TapeMap const tape(stream, p.delta);
    auto const grid = GridSpec::make(p.cutoff);
    auto const diag = plain_diagonal(*grid, p);

    Trajectory tr;
    SpectralField x = resample(nudged0, grid);
    start(tr, p, x, n_steps);
    std::vector<double> dW(sigma.dimension());
    for (std::int64_t m = 0; m < n_steps; ++m) {
        auto const slot = tape.slot(m);
        block_increment(stream, slot.n, slot.j0, slot.j1, dW);
        auto const& psi = pair.shifts[static_cast<std::size_t>(m)];
        for (std::size_t k = 0; k < dW.size(); ++k)
            dW[k] += p.delta * psi[k];
        SpectralField rhs = x;
        sigma.add_applied(dW, rhs);
        auto r = solve_with(x, rhs, diag, p, m + 1);
        x = std::move(r.xi);
        record(tr, m + 1, x, r.iterations, true);
    }
    return tr;
}

double GirsanovCost::tv_bound(double a) const
{
    if (!(a > 0.0 && a <= 1.0))
        throw StructuralError("tv_bound: a must lie in (0, 1]");
    if (kl_samples.empty())
        return 0.0;
    double m = 0.0;
    for (double v : kl_samples)
        m += std::pow(v, a);
    m /= static_cast<double>(kl_samples.size());
    return std::pow(2.0, (1.0 - a) / (1.0 + a)) * std::pow(m, 1.0 / (1.0 + a));
}

double GirsanovCost::tv_from_kl() const { return 1.0 - 0.5 * std::exp(-kl_bound); }

GirsanovCost girsanov_cost(CoupledPair const& pair, double delta)
{
    return girsanov_cost(std::span<CoupledPair const>(&pair, 1), delta);
}

GirsanovCost girsanov_cost(std::span<CoupledPair const> pairs, double delta)
{
    GirsanovCost c;
    for (auto const& pr : pairs) {
        double s = 0.0;
        for (auto const& psi : pr.shifts)
            for (double v : psi)
                s += v * v;
        c.kl_samples.push_back(delta * s);
    }
    for (double v : c.kl_samples)
        c.kl_bound += v;
    if (!c.kl_samples.empty())
        c.kl_bound /= static_cast<double>(c.kl_samples.size());
    return c;
}

double girsanov_majorant(double beta, double delta, double pinv_norm, double gap0_sq)
{
    return beta * (1.0 + beta * delta) * pinv_norm * pinv_norm * gap0_sq;
}

ContractionFit pathwise_contraction_check(std::span<double const> mean_gaps, double beta, double delta, double band,
                                          double floor_rel)
{
    ContractionFit f;
    f.theoretical = -0.75 * std::log1p(beta * delta);
    if (mean_gaps.empty() || mean_gaps[0] <= 0.0) {
        f.exact_coupling = true;
        f.meets_band = true;
        return f;
    }
    std::vector<double> xs, ys;
    double const floor = floor_rel * mean_gaps[0];
    for (std::size_t n = 0; n < mean_gaps.size(); ++n)
        if (mean_gaps[n] > floor && mean_gaps[n] > 0.0) {
            xs.push_back(static_cast<double>(n));
            ys.push_back(std::log(mean_gaps[n]));
        }
    f.points = xs.size();
    if (xs.size() < 2) {
        f.exact_coupling = true;
        f.meets_band = true;
        return f;
    }
    auto const lf = linear_fit(xs, ys);
    f.log_factor = lf.slope;
    f.r_squared = lf.r_squared;
    f.meets_band = -f.log_factor >= band * -f.theoretical;
    return f;
}

std::vector<double> mean_gaps(std::span<CoupledPair const> pairs)
{
    std::vector<double> m;
    if (pairs.empty())
        return m;
    m.assign(pairs[0].gaps.size(), 0.0);
    for (auto const& p : pairs) {
        if (p.gaps.size() != m.size())
            throw StructuralError("mean_gaps: pairs have different lengths");
        for (std::size_t i = 0; i < m.size(); ++i)
            m[i] += p.gaps[i];
    }
    for (auto& v : m)
        v /= static_cast<double>(pairs.size());
    return m;
}

}  // namespace snse
