#include "snse/forcing.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "snse/error.hpp"
#include "snse/random.hpp"

namespace snse {
namespace {

constexpr double kL2Weight = 2.0 * 4.0 * std::numbers::pi * std::numbers::pi;  // 2 (2 pi)^2

}  // namespace

// Noise ------------------------------------------------------------------------------

void NoiseStream::validate() const
{
    if (fine_factor < 1)
        throw StructuralError("noise stream: fine_factor must be >= 1");
    if (!(delta > 0.0))
        throw StructuralError("noise stream: delta must be positive");
    if (trajectory_id > 0xffffffffULL)
        throw StructuralError("noise stream: trajectory_id must fit in 32 bits");
}

void standard_normals(NoiseStream const& s, std::int64_t n, int j, std::span<double> out)
{
    if (n < 0 || n > 0xffffffffLL)
        throw StructuralError("noise stream: step index out of range");
    std::uint64_t const key = splitmix64(s.seed);
    for (std::size_t k = 0; k < out.size(); k += 2) {
        auto const z = normal_pair(key, {static_cast<std::uint32_t>(s.trajectory_id), static_cast<std::uint32_t>(n),
                                         static_cast<std::uint32_t>(j), static_cast<std::uint32_t>(k / 2)});
        out[k] = z[0];
        if (k + 1 < out.size())
            out[k + 1] = z[1];
    }
}

std::vector<double> fine_increment(NoiseStream const& s, std::int64_t n, int j)
{
    if (j < 0 || j >= s.fine_factor)
        throw StructuralError("noise stream: sub-step " + std::to_string(j) + " outside [0, R)");
    std::vector<double> out(s.dimension);
    standard_normals(s, n, j, out);
    double const scale = std::sqrt(s.delta / s.fine_factor);
    for (auto& v : out)
        v *= scale;
    return out;
}

void block_increment(NoiseStream const& s, std::int64_t n, int j0, int j1, std::span<double> out)
{
    if (j0 < 0 || j1 > s.fine_factor || j0 > j1)
        throw StructuralError("noise stream: bad sub-step block");
    std::fill(out.begin(), out.end(), 0.0);
    std::vector<double> z(out.size());
    double const scale = std::sqrt(s.delta / s.fine_factor);
    for (int j = j0; j < j1; ++j) {
        standard_normals(s, n, j, z);
        for (std::size_t k = 0; k < out.size(); ++k)
            out[k] += scale * z[k];
    }
}

std::vector<double> coarse_increment(NoiseStream const& s, std::int64_t n)
{
    std::vector<double> out(s.dimension);
    block_increment(s, n, 0, s.fine_factor, out);
    return out;
}

std::vector<double> sample_increment(NoiseStream const& s, std::int64_t n, Level level)
{
    return level.fine == Level::coarse ? coarse_increment(s, n) : fine_increment(s, n, level.fine);
}

// Eigenfunctions ----------------------------------------------------------------------

std::vector<RealEigenfunction> real_eigenfunctions(int count)
{
    std::vector<RealEigenfunction> out;
    for (int shell = 1; static_cast<int>(out.size()) < count; ++shell) {
        int const lam = shell_eigenvalue(shell);
        int const r = static_cast<int>(std::sqrt(static_cast<double>(lam))) + 1;
        for (int kx = -r; kx <= r; ++kx)
            for (int ky = 0; ky <= r; ++ky) {
                WaveVector const k{kx, ky};
                if (k.eigenvalue() != lam || !GridSpec::in_stored_half(k))
                    continue;
                for (bool sine : {false, true})
                    if (static_cast<int>(out.size()) < count)
                        out.push_back({k, sine});
            }
    }
    return out;
}

std::vector<RealEigenfunction> real_eigenfunctions_in_shells(int shells)
{
    auto const grid = GridSpec::make(shells);
    return real_eigenfunctions(static_cast<int>(grid->dimension()));
}

SpectralField real_eigenfunction_field(GridPtr grid, RealEigenfunction e)
{
    double const c = 1.0 / (2.0 * std::numbers::sqrt2 * std::numbers::pi);
    return SpectralField::mode(std::move(grid), e.k, e.is_sine ? cplx(0.0, -c) : cplx(c, 0.0));
}

// ForcingBasis ------------------------------------------------------------------------

ForcingBasis::ForcingBasis(GridPtr grid, std::vector<SpectralField> directions)
    : grid_(std::move(grid)), directions_(std::move(directions))
{
    if (directions_.empty())
        throw StructuralError("forcing basis needs at least one direction");
    for (auto& d : directions_)
        if (d.grid().cutoff() != grid_->cutoff())
            throw StructuralError("forcing direction on a different grid");
    build();
}

ForcingBasis ForcingBasis::low_mode(std::vector<double> const& amplitudes)
{
    auto const efs = real_eigenfunctions(static_cast<int>(amplitudes.size()));
    if (efs.empty())
        throw StructuralError("low-mode forcing needs d >= 1");
    auto const grid = GridSpec::make(shell_count_up_to(efs.back().k.eigenvalue()));
    std::vector<SpectralField> dirs;
    for (std::size_t i = 0; i < efs.size(); ++i)
        dirs.push_back(amplitudes[i] * real_eigenfunction_field(grid, efs[i]));
    return ForcingBasis(grid, std::move(dirs));
}

ForcingBasis ForcingBasis::low_mode_shells(int shells, double total_norm_sq)
{
    auto const d = GridSpec::make(shells)->dimension();
    return low_mode(std::vector<double>(d, std::sqrt(total_norm_sq / static_cast<double>(d))));
}

void ForcingBasis::build()
{
    std::size_t const d = directions_.size();
    sparse_.assign(d, {});
    auto modes = grid_->modes();
    std::vector<char> used(grid_->size(), 0);
    for (std::size_t i = 0; i < d; ++i) {
        auto c = directions_[i].coeffs();
        for (std::size_t m = 0; m < c.size(); ++m)
            if (c[m] != cplx{}) {
                sparse_[i].push_back({modes[m], c[m]});
                used[m] = 1;
            }
        trace_[0] += norm_squared(directions_[i]);
        trace_[1] += sobolev_norm_squared(directions_[i], 1.0);
        trace_[2] += sobolev_norm_squared(directions_[i], 2.0);
    }
    for (std::size_t m = 0; m < used.size(); ++m)
        if (used[m])
            support_.push_back(modes[m]);

    basis_.resize(static_cast<Eigen::Index>(2 * support_.size()), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < d; ++i)
        basis_.col(static_cast<Eigen::Index>(i)) = real_coords(directions_[i], nullptr);
    gram_ = basis_.transpose() * basis_;
    if (!support_.empty())
        cod_.compute(basis_);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram_);
    auto const& ev = eig.eigenvalues();
    double const top = ev.maxCoeff();
    double smallest = top;
    for (Eigen::Index i = 0; i < ev.size(); ++i)
        if (ev[i] > 1e-12 * top)
            smallest = std::min(smallest, ev[i]);
    pinv_norm_ = top > 0.0 ? 1.0 / std::sqrt(smallest) : 0.0;
}

Eigen::VectorXd ForcingBasis::real_coords(SpectralField const& f, double* outside_sq) const
{
    double const w = std::sqrt(kL2Weight);
    Eigen::VectorXd v(static_cast<Eigen::Index>(2 * support_.size()));
    for (std::size_t m = 0; m < support_.size(); ++m) {
        cplx const c = f.coeff(support_[m]);
        v[static_cast<Eigen::Index>(2 * m)] = w * c.real();
        v[static_cast<Eigen::Index>(2 * m + 1)] = w * c.imag();
    }
    if (outside_sq) {
        double acc = 0.0;
        auto modes = f.grid().modes();
        auto c = f.coeffs();
        for (std::size_t m = 0; m < c.size(); ++m)
            if (!std::binary_search(support_.begin(), support_.end(), modes[m]))
                acc += std::norm(c[m]);
        *outside_sq = kL2Weight * acc;
    }
    return v;
}

double ForcingBasis::range_residual(SpectralField const& f, Eigen::VectorXd* eta) const
{
    double outside = 0.0;
    Eigen::VectorXd const b = real_coords(f, &outside);
    Eigen::VectorXd const x = support_.empty() ? Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dimension()))
                                               : Eigen::VectorXd(cod_.solve(b));
    double const inside = (basis_ * x - b).squaredNorm();
    if (eta)
        *eta = x;
    return std::sqrt(inside + outside);
}

SpectralField ForcingBasis::apply(std::span<double const> eta, GridPtr const& target) const
{
    SpectralField out(target);
    add_applied(eta, out);
    return out;
}

void ForcingBasis::add_applied(std::span<double const> eta, SpectralField& out) const
{
    if (eta.size() != directions_.size())
        throw StructuralError("forcing: expected " + std::to_string(directions_.size()) + " components, got " +
                              std::to_string(eta.size()));
    auto const& g = out.grid();
    auto c = out.coeffs();
    for (std::size_t i = 0; i < sparse_.size(); ++i) {
        if (eta[i] == 0.0)
            continue;
        for (auto const& e : sparse_[i])
            if (auto idx = g.index_of(e.k); idx >= 0)
                c[static_cast<std::size_t>(idx)] += eta[i] * e.value;
    }
}

std::vector<double> ForcingBasis::pseudo_inverse_apply(SpectralField const& f) const
{
    Eigen::VectorXd x;
    double const res = range_residual(f, &x);
    double const fn = norm(f);
    if (res > 1e-8 * fn)
        throw RangeError("field is outside range(sigma): residual " + std::to_string(res), res);
    if (fn == 0.0)
        return std::vector<double>(directions_.size(), 0.0);
    return {x.data(), x.data() + x.size()};
}

NondegeneracyReport ForcingBasis::check_nondegeneracy(int K, double nu, double delta0, double margin_c) const
{
    if (K < 1)
        throw StructuralError("nondegeneracy: K must be >= 1");
    NondegeneracyReport rep;
    auto const efs = real_eigenfunctions_in_shells(K);
    auto const kgrid = GridSpec::make(K);
    for (auto const& e : efs) {
        double const r = range_residual(real_eigenfunction_field(kgrid, e), nullptr);
        if (r > 1e-10) {
            rep.uncovered.push_back(e);
            rep.residuals.push_back(r);
        }
    }
    rep.range_satisfied = rep.uncovered.empty();
    double const s2 = trace_l2() * trace_l2();
    rep.eigenvalue_lhs = kgrid->next_eigenvalue();
    rep.eigenvalue_rhs = margin_c / nu *
                         std::max({1.0 / delta0, delta0 * delta0 * s2 / (nu * nu * nu), s2 / std::pow(nu, 5)});
    rep.eigenvalue_satisfied = rep.eigenvalue_lhs >= rep.eigenvalue_rhs;
    return rep;
}

}  // namespace snse
