#include "snse/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "snse/error.hpp"

namespace snse {
namespace {

constexpr double kL2Weight = 2.0 * 4.0 * std::numbers::pi * std::numbers::pi;

double raw_norm(std::span<cplx const> a)
{
    double s = 0.0;
    for (cplx c : a)
        s += std::norm(c);
    return std::sqrt(s);
}

double raw_dot(std::span<cplx const> a, std::span<cplx const> b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += a[i].real() * b[i].real() + a[i].imag() * b[i].imag();
    return s;
}

std::vector<double> step_diagonal(GridSpec const& g, SchemeParams const& p)
{
    std::vector<double> d(g.size());
    auto modes = g.modes();
    for (std::size_t i = 0; i < d.size(); ++i)
        d[i] = 1.0 + p.delta * p.nu * modes[i].eigenvalue();
    return d;
}

// r = rhs - diag x - delta B x
double true_residual(SpectralField const& rhs, std::span<double const> diag, Advector const* adv,
                     SchemeParams const& p, SpectralField const& x, SpectralField& scratch)
{
    auto r = rhs.coeffs();
    auto xc = x.coeffs();
    double s = 0.0;
    if (adv)
        adv->apply_into(x, scratch);
    auto b = scratch.coeffs();
    for (std::size_t i = 0; i < r.size(); ++i) {
        cplx v = r[i] - diag[i] * xc[i];
        if (adv)
            v -= p.delta * b[i];
        s += std::norm(v);
    }
    return std::sqrt(s);
}

// Restarted GMRES(m) on y -> y + delta B(D^{-1} y), with x = D^{-1} y.
StepResult gmres(SpectralField const& rhs, std::span<double const> diag, Advector const& adv, SchemeParams const& p,
                 double threshold, int budget)
{
    auto const grid = rhs.grid_ptr();
    std::size_t const n = rhs.grid().size();
    int const restart = 40;
    SpectralField tmp(grid), bx(grid);

    auto apply_op = [&](std::span<cplx const> y, std::span<cplx> out) {
        auto t = tmp.coeffs();
        for (std::size_t i = 0; i < n; ++i)
            t[i] = y[i] / diag[i];
        adv.apply_into(tmp, bx);
        auto b = bx.coeffs();
        for (std::size_t i = 0; i < n; ++i)
            out[i] = y[i] + p.delta * b[i];
    };

    std::vector<cplx> y(n), r(n), w(n);
    std::vector<std::vector<cplx>> V(restart + 1, std::vector<cplx>(n));
    std::vector<double> H((restart + 1) * restart), cs(restart), sn(restart), g(restart + 1);
    auto h = [&](int i, int j) -> double& { return H[static_cast<std::size_t>(i) * restart + j]; };

    int total = 0;
    double resid = std::numeric_limits<double>::infinity();
    auto rc = rhs.coeffs();
    while (total < budget) {
        apply_op(y, w);
        for (std::size_t i = 0; i < n; ++i)
            r[i] = rc[i] - w[i];
        double const beta = raw_norm(r);
        resid = beta;
        if (beta <= threshold)
            break;
        for (std::size_t i = 0; i < n; ++i)
            V[0][i] = r[i] / beta;
        std::fill(g.begin(), g.end(), 0.0);
        g[0] = beta;
        int k = 0;
        for (; k < restart && total < budget; ++k) {
            ++total;
            apply_op(V[k], w);
            for (int i = 0; i <= k; ++i) {
                double const hij = raw_dot(w, V[i]);
                h(i, k) = hij;
                for (std::size_t q = 0; q < n; ++q)
                    w[q] -= hij * V[i][q];
            }
            double const hn = raw_norm(w);
            h(k + 1, k) = hn;
            if (hn > 0.0)
                for (std::size_t q = 0; q < n; ++q)
                    V[k + 1][q] = w[q] / hn;
            for (int i = 0; i < k; ++i) {
                double const a = cs[i] * h(i, k) + sn[i] * h(i + 1, k);
                h(i + 1, k) = -sn[i] * h(i, k) + cs[i] * h(i + 1, k);
                h(i, k) = a;
            }
            double const den = std::hypot(h(k, k), h(k + 1, k));
            cs[k] = den > 0.0 ? h(k, k) / den : 1.0;
            sn[k] = den > 0.0 ? h(k + 1, k) / den : 0.0;
            h(k, k) = den;
            h(k + 1, k) = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] = cs[k] * g[k];
            resid = std::abs(g[k + 1]);
            if (resid <= threshold || hn == 0.0) {
                ++k;
                break;
            }
        }
        std::vector<double> z(static_cast<std::size_t>(k));
        for (int i = k - 1; i >= 0; --i) {
            double s = g[i];
            for (int j = i + 1; j < k; ++j)
                s -= h(i, j) * z[j];
            z[i] = s / h(i, i);
        }
        for (int i = 0; i < k; ++i)
            for (std::size_t q = 0; q < n; ++q)
                y[q] += z[i] * V[i][q];
        if (resid <= threshold)
            break;
    }

    SpectralField x(grid);
    auto xc = x.coeffs();
    for (std::size_t i = 0; i < n; ++i)
        xc[i] = y[i] / diag[i];
    double const actual = true_residual(rhs, diag, &adv, p, x, bx);
    if (!(actual <= 10.0 * threshold) || !std::isfinite(actual))
        throw SolverError("GMRES did not converge", std::sqrt(kL2Weight) * actual, total);
    return {std::move(x), total, std::sqrt(kL2Weight) * actual};
}

}  // namespace

std::string to_string(SolverPolicy p)
{
    switch (p) {
    case SolverPolicy::FixedPoint:
        return "fixed-point";
    case SolverPolicy::Krylov:
        return "krylov";
    case SolverPolicy::Auto:
        return "auto";
    }
    return "auto";
}

SolverPolicy solver_policy_from_string(std::string const& s)
{
    if (s == "fixed-point")
        return SolverPolicy::FixedPoint;
    if (s == "krylov")
        return SolverPolicy::Krylov;
    if (s == "auto")
        return SolverPolicy::Auto;
    throw ConfigError("solver", "unknown policy '" + s + "' (fixed-point, krylov, auto)");
}

void SchemeParams::validate() const
{
    if (!(nu > 0.0))
        throw ConfigError("nu", "must be positive");
    if (!(delta > 0.0))
        throw ConfigError("delta", "must be positive");
    if (cutoff < 1)
        throw ConfigError("cutoff", "must be >= 1");
    if (delta0 > 0.0 && delta > delta0 * (1.0 + 1e-12))
        throw ConfigError("delta", "delta " + std::to_string(delta) + " exceeds delta0 " + std::to_string(delta0));
    if (!(tolerance > 0.0))
        throw ConfigError("tolerance", "must be positive");
    if (max_iterations < 1)
        throw ConfigError("max_iterations", "must be >= 1");
}

StepResult solve_implicit(SpectralField const& rhs, std::span<double const> diag, Advector const* adv,
                          SchemeParams const& p, SpectralField const* guess)
{
    auto const grid = rhs.grid_ptr();
    std::size_t const n = grid->size();
    if (diag.size() != n)
        throw StructuralError("solve_implicit: diagonal length mismatch");
    auto rc = rhs.coeffs();
    double const rhs_norm = raw_norm(rc);

    SpectralField x(grid);
    auto xc = x.coeffs();
    if (!adv || rhs_norm == 0.0) {
        if (rhs_norm != 0.0)
            for (std::size_t i = 0; i < n; ++i)
                xc[i] = rc[i] / diag[i];
        return {std::move(x), 0, 0.0};
    }
    double const threshold = p.tolerance * rhs_norm;

    double last = std::numeric_limits<double>::infinity();
    int it = 0;
    if (p.solver != SolverPolicy::Krylov) {
        if (guess)
            x = *guess;
        else
            for (std::size_t i = 0; i < n; ++i)
                xc[i] = rc[i] / diag[i];
        xc = x.coeffs();
        SpectralField bx(grid);
        double first = -1.0;
        for (it = 1; it <= p.max_iterations; ++it) {
            adv->apply_into(x, bx);
            auto b = bx.coeffs();
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                cplx const next = (rc[i] - p.delta * b[i]) / diag[i];
                s += std::norm(diag[i] * (next - xc[i]));
                xc[i] = next;
            }
            last = std::sqrt(s);
            if (last <= threshold)
                return {std::move(x), it, std::sqrt(kL2Weight) * last};
            if (first < 0.0)
                first = last;
            if (!std::isfinite(last) || (it > 8 && last > 1e6 * first))
                break;
        }
        if (p.solver == SolverPolicy::FixedPoint)
            throw SolverError("fixed-point iteration did not reach tolerance", std::sqrt(kL2Weight) * last,
                              std::min(it, p.max_iterations));
    }
    auto res = gmres(rhs, diag, *adv, p, threshold, p.max_iterations);
    res.iterations += std::min(it, p.max_iterations);
    return res;
}

StepResult semi_implicit_step(SpectralField const& xi_prev, std::span<double const> dW, SchemeParams const& p,
                              ForcingBasis const& sigma)
{
    if (xi_prev.grid().cutoff() != p.cutoff)
        throw StructuralError("step: state cutoff " + std::to_string(xi_prev.grid().cutoff()) +
                              " does not match scheme cutoff " + std::to_string(p.cutoff));
    SpectralField rhs = xi_prev;
    sigma.add_applied(dW, rhs);
    auto const diag = step_diagonal(xi_prev.grid(), p);
    if (!p.advection)
        return solve_implicit(rhs, diag, nullptr, p);
    Advector const adv(xi_prev);
    return solve_implicit(rhs, diag, &adv, p);
}

double energy_identity_defect(SpectralField const& xi_prev, SpectralField const& xi_new, std::span<double const> dW,
                              SchemeParams const& p, ForcingBasis const& sigma)
{
    auto const f = sigma.apply(dW, xi_prev.grid_ptr());
    double const a = norm_squared(xi_new);
    double const b = norm_squared(xi_prev);
    double const lhs = a + norm_squared(xi_new - xi_prev) - b + 2.0 * p.nu * p.delta * sobolev_norm_squared(xi_new, 1.0);
    double const rhs = 2.0 * inner(f, xi_new);
    double const scale = std::max({a, b, norm_squared(f), std::numeric_limits<double>::min()});
    return (lhs - rhs) / scale;
}

// Tape mapping ---------------------------------------------------------------------

TapeMap::TapeMap(NoiseStream const& stream, double delta)
{
    stream.validate();
    double const ratio = stream.delta / delta;
    per_coarse_ = static_cast<int>(std::lround(ratio));
    if (per_coarse_ < 1 || std::abs(per_coarse_ - ratio) > 1e-9 * ratio)
        throw StructuralError("tape: step " + std::to_string(delta) + " does not divide tape step " +
                              std::to_string(stream.delta));
    if (stream.fine_factor % per_coarse_ != 0)
        throw StructuralError("tape: fine factor " + std::to_string(stream.fine_factor) + " not divisible by " +
                              std::to_string(per_coarse_));
    block_ = stream.fine_factor / per_coarse_;
}

TapeSlot TapeMap::slot(std::int64_t step) const noexcept
{
    int const s = static_cast<int>(step % per_coarse_);
    return {step / per_coarse_, s * block_, (s + 1) * block_};
}

// Trajectories -----------------------------------------------------------------------

Trajectory simulate(SpectralField const& xi0, std::int64_t n_steps, SchemeParams const& p, ForcingBasis const& sigma,
                    NoiseStream const& stream, RecordOptions const& rec)
{
    p.validate();
    if (stream.dimension != sigma.dimension())
        throw StructuralError("noise dimension " + std::to_string(stream.dimension) + " does not match d = " +
                              std::to_string(sigma.dimension()));
    if (n_steps < 0)
        throw StructuralError("negative step count");
    TapeMap const tape(stream, p.delta);
    auto const grid = GridSpec::make(p.cutoff);
    auto const diag = step_diagonal(*grid, p);

    Trajectory tr;
    tr.params = p;
    tr.first_step = rec.first_step;
    SpectralField x = xi0.grid().cutoff() == p.cutoff ? xi0 : resample(xi0, grid);
    tr.energy.reserve(static_cast<std::size_t>(n_steps) + 1);
    tr.enstrophy.reserve(static_cast<std::size_t>(n_steps) + 1);
    tr.iterations.reserve(static_cast<std::size_t>(n_steps));
    tr.energy.push_back(norm_squared(x));
    tr.enstrophy.push_back(sobolev_norm_squared(x, 1.0));
    tr.steps.push_back(rec.first_step);
    tr.states.push_back(x);
    if (rec.observer)
        rec.observer(rec.first_step, x);

    std::vector<double> dW(sigma.dimension());
    for (std::int64_t i = 0; i < n_steps; ++i) {
        std::int64_t const m = rec.first_step + i;
        auto const slot = tape.slot(m);
        block_increment(stream, slot.n, slot.j0, slot.j1, dW);
        SpectralField rhs = x;
        sigma.add_applied(dW, rhs);
        try {
            if (p.advection) {
                Advector const adv(x);
                auto r = solve_implicit(rhs, diag, &adv, p);
                x = std::move(r.xi);
                tr.iterations.push_back(r.iterations);
            } else {
                auto r = solve_implicit(rhs, diag, nullptr, p);
                x = std::move(r.xi);
                tr.iterations.push_back(0);
            }
        } catch (SolverError const& e) {
            throw SolverError(std::string(e.what()) + " at step " + std::to_string(m + 1), e.residual(),
                              e.iterations(), m + 1);
        }
        tr.energy.push_back(norm_squared(x));
        tr.enstrophy.push_back(sobolev_norm_squared(x, 1.0));
        bool const last = i + 1 == n_steps;
        bool const keep = rec.stride > 0 ? (i + 1) % rec.stride == 0 : false;
        if (keep || last) {
            tr.steps.push_back(m + 1);
            tr.states.push_back(x);
        }
        if (rec.observer)
            rec.observer(m + 1, x);
    }
    return tr;
}

Trajectory reference_simulate(SpectralField const& xi0, std::int64_t n_coarse_steps, SchemeParams const& p_fine,
                              ForcingBasis const& sigma, NoiseStream const& stream)
{
    TapeMap const tape(stream, p_fine.delta);
    RecordOptions rec;
    rec.stride = tape.steps_per_coarse();
    return simulate(xi0, n_coarse_steps * tape.steps_per_coarse(), p_fine, sigma, stream, rec);
}

std::vector<double> moment_probe(Trajectory const& traj, double alpha)
{
    std::vector<double> out(traj.energy.size());
    double acc = 0.0;
    double const w = traj.params.nu * traj.params.delta;
    for (std::size_t n = 0; n < out.size(); ++n) {
        if (n > 0)
            acc += traj.enstrophy[n];
        out[n] = alpha * traj.energy[n] + alpha * w * acc;
    }
    return out;
}

double log_mean_exp(std::span<double const> v)
{
    if (v.empty())
        return -std::numeric_limits<double>::infinity();
    double const m = *std::max_element(v.begin(), v.end());
    if (!std::isfinite(m))
        return m;
    double s = 0.0;
    for (double x : v)
        s += std::exp(x - m);
    return m + std::log(s / static_cast<double>(v.size()));
}

}  // namespace snse
