#include "snse/spectral_field.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <string>

#include "snse/error.hpp"
#include "transform.hpp"

namespace snse {
namespace {

constexpr double kTwoPiSq = 4.0 * std::numbers::pi * std::numbers::pi;

std::mutex g_shell_mutex;
std::vector<int> g_shells;  // sorted distinct sums of two squares > 0

void ensure_shells(std::size_t count)
{
    if (g_shells.size() >= count)
        return;
    int limit = 64;
    for (;;) {
        std::vector<char> hit(static_cast<std::size_t>(limit) + 1, 0);
        for (int a = 0; a * a <= limit; ++a)
            for (int b = 0; a * a + b * b <= limit; ++b)
                hit[a * a + b * b] = 1;
        std::vector<int> shells;
        for (int v = 1; v <= limit; ++v)
            if (hit[v])
                shells.push_back(v);
        if (shells.size() >= count) {
            g_shells = std::move(shells);
            return;
        }
        limit *= 2;
    }
}

int fft_friendly_at_least(int n)
{
    for (int m = std::max(n, 4);; ++m) {
        int r = m;
        for (int p : {2, 3, 5})
            while (r % p == 0)
                r /= p;
        if (r == 1)
            return m;
    }
}

void require_same(SpectralField const& a, SpectralField const& b)
{
    if (!a.same_grid(b))
        throw StructuralError("grid mismatch: cutoff " + std::to_string(a.grid().cutoff()) +
                              " vs " + std::to_string(b.grid().cutoff()));
}

}  // namespace

int shell_eigenvalue(int shell)
{
    if (shell < 1)
        throw StructuralError("shell index must be >= 1");
    std::lock_guard lock(g_shell_mutex);
    ensure_shells(static_cast<std::size_t>(shell));
    return g_shells[static_cast<std::size_t>(shell) - 1];
}

int shell_count_up_to(int lambda)
{
    if (lambda < 1)
        return 0;
    int n = 0;
    for (int v = 1; v <= lambda; ++v) {
        bool hit = false;
        for (int a = 0; a * a <= v && !hit; ++a) {
            int const r = v - a * a;
            int const b = static_cast<int>(std::lround(std::sqrt(static_cast<double>(r))));
            hit = b * b == r;
        }
        n += hit;
    }
    return n;
}

// GridSpec ------------------------------------------------------------------------

GridSpec::GridSpec(int cutoff) : cutoff_(cutoff)
{
    if (cutoff < 1)
        throw StructuralError("cutoff must be >= 1");
    lambda_cut_ = shell_eigenvalue(cutoff);
    lambda_next_ = shell_eigenvalue(cutoff + 1);
    kmax_ = static_cast<int>(std::floor(std::sqrt(static_cast<double>(lambda_cut_))));
    while ((kmax_ + 1) * (kmax_ + 1) <= lambda_cut_)
        ++kmax_;
    padded_ = fft_friendly_at_least(3 * kmax_ + 1);

    lookup_.assign(static_cast<std::size_t>(2 * kmax_ + 1) * (kmax_ + 1), -1);
    for (int kx = -kmax_; kx <= kmax_; ++kx)
        for (int ky = 0; ky <= kmax_; ++ky) {
            WaveVector const k{kx, ky};
            if (!in_stored_half(k) || k.eigenvalue() > lambda_cut_)
                continue;
            lookup_[static_cast<std::size_t>(kx + kmax_) * (kmax_ + 1) + ky] =
                static_cast<std::ptrdiff_t>(modes_.size());
            modes_.push_back(k);
        }
}

std::shared_ptr<GridSpec const> GridSpec::make(int cutoff)
{
    static std::mutex m;
    static std::map<int, std::shared_ptr<GridSpec const>> cache;
    std::lock_guard lock(m);
    auto& slot = cache[cutoff];
    if (!slot)
        slot = std::make_shared<GridSpec const>(cutoff);
    return slot;
}

std::ptrdiff_t GridSpec::index_of(WaveVector k) const noexcept
{
    if (!in_stored_half(k) || std::abs(k.kx) > kmax_ || k.ky > kmax_)
        return -1;
    return lookup_[static_cast<std::size_t>(k.kx + kmax_) * (kmax_ + 1) + k.ky];
}

bool GridSpec::is_active(WaveVector k) const noexcept
{
    int const l = k.eigenvalue();
    return l > 0 && l <= lambda_cut_;
}

// SpectralField -------------------------------------------------------------------

SpectralField::SpectralField(GridPtr grid) : grid_(std::move(grid))
{
    if (!grid_)
        throw StructuralError("null grid");
    coeffs_.assign(grid_->size(), cplx{});
}

SpectralField::SpectralField(GridPtr grid, std::vector<cplx> coeffs)
    : grid_(std::move(grid)), coeffs_(std::move(coeffs))
{
    if (!grid_)
        throw StructuralError("null grid");
    if (coeffs_.size() != grid_->size())
        throw StructuralError("coefficient count " + std::to_string(coeffs_.size()) +
                              " does not match grid size " + std::to_string(grid_->size()));
}

SpectralField SpectralField::mode(GridPtr grid, WaveVector k, cplx amplitude)
{
    SpectralField f(std::move(grid));
    f.set_coeff(k, amplitude);
    return f;
}

cplx SpectralField::coeff(WaveVector k) const noexcept
{
    if (auto i = grid_->index_of(k); i >= 0)
        return coeffs_[static_cast<std::size_t>(i)];
    if (auto i = grid_->index_of(-k); i >= 0)
        return std::conj(coeffs_[static_cast<std::size_t>(i)]);
    return {};
}

void SpectralField::set_coeff(WaveVector k, cplx value)
{
    if (auto i = grid_->index_of(k); i >= 0)
        coeffs_[static_cast<std::size_t>(i)] = value;
    else if (auto j = grid_->index_of(-k); j >= 0)
        coeffs_[static_cast<std::size_t>(j)] = std::conj(value);
    else
        throw StructuralError("wave vector (" + std::to_string(k.kx) + "," + std::to_string(k.ky) +
                              ") is not active at cutoff " + std::to_string(grid_->cutoff()));
}

SpectralField& SpectralField::operator+=(SpectralField const& other)
{
    require_same(*this, other);
    for (std::size_t i = 0; i < coeffs_.size(); ++i)
        coeffs_[i] += other.coeffs_[i];
    return *this;
}

SpectralField& SpectralField::operator-=(SpectralField const& other)
{
    require_same(*this, other);
    for (std::size_t i = 0; i < coeffs_.size(); ++i)
        coeffs_[i] -= other.coeffs_[i];
    return *this;
}

SpectralField& SpectralField::operator*=(double a) noexcept
{
    for (auto& c : coeffs_)
        c *= a;
    return *this;
}

bool SpectralField::same_grid(SpectralField const& other) const noexcept
{
    return grid_ == other.grid_ || grid_->cutoff() == other.grid_->cutoff();
}

bool operator==(SpectralField const& a, SpectralField const& b)
{
    if (!a.same_grid(b))
        return false;
    return std::equal(a.coeffs_.begin(), a.coeffs_.end(), b.coeffs_.begin(),
                      [](cplx x, cplx y) {
                          return std::bit_cast<std::uint64_t>(x.real()) ==
                                     std::bit_cast<std::uint64_t>(y.real()) &&
                                 std::bit_cast<std::uint64_t>(x.imag()) ==
                                     std::bit_cast<std::uint64_t>(y.imag());
                      });
}

// Linear algebra --------------------------------------------------------------------

double inner(SpectralField const& f, SpectralField const& g)
{
    require_same(f, g);
    auto a = f.coeffs();
    auto b = g.coeffs();
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += a[i].real() * b[i].real() + a[i].imag() * b[i].imag();
    return 2.0 * kTwoPiSq * s;
}

double norm_squared(SpectralField const& f)
{
    double s = 0.0;
    for (cplx c : f.coeffs())
        s += std::norm(c);
    return 2.0 * kTwoPiSq * s;
}

double norm(SpectralField const& f) { return std::sqrt(norm_squared(f)); }

SpectralField axpy(double a, SpectralField const& x, SpectralField const& y)
{
    require_same(x, y);
    SpectralField out = y;
    auto o = out.coeffs();
    auto xs = x.coeffs();
    for (std::size_t i = 0; i < o.size(); ++i)
        o[i] += a * xs[i];
    return out;
}

SpectralField scale(SpectralField const& f, double a) { return a * f; }

double sobolev_norm_squared(SpectralField const& f, double s)
{
    auto modes = f.grid().modes();
    auto c = f.coeffs();
    double acc = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
        double const l = modes[i].eigenvalue();
        double const w = s == 0.0 ? 1.0 : (s == 1.0 ? l : (s == 2.0 ? l * l : std::pow(l, s)));
        acc += w * std::norm(c[i]);
    }
    return 2.0 * kTwoPiSq * acc;
}

double sobolev_norm(SpectralField const& f, double s) { return std::sqrt(sobolev_norm_squared(f, s)); }

SpectralField project(SpectralField const& f, int shells)
{
    if (shells >= f.grid().cutoff())
        return f;
    int const lam = shell_eigenvalue(shells);
    SpectralField out = f;
    auto modes = f.grid().modes();
    auto c = out.coeffs();
    for (std::size_t i = 0; i < c.size(); ++i)
        if (modes[i].eigenvalue() > lam)
            c[i] = {};
    return out;
}

SpectralField resample(SpectralField const& f, GridPtr target)
{
    SpectralField out(std::move(target));
    auto modes = out.grid().modes();
    auto c = out.coeffs();
    for (std::size_t i = 0; i < c.size(); ++i)
        c[i] = f.coeff(modes[i]);
    return out;
}

// Nonlinear operators -----------------------------------------------------------------

VelocityField biot_savart(SpectralField const& xi)
{
    VelocityField u{SpectralField(xi.grid_ptr()), SpectralField(xi.grid_ptr())};
    auto modes = xi.grid().modes();
    auto c = xi.coeffs();
    auto a = u.u1.coeffs();
    auto b = u.u2.coeffs();
    cplx const I(0.0, 1.0);
    for (std::size_t i = 0; i < c.size(); ++i) {
        double const l = modes[i].eigenvalue();
        a[i] = I * static_cast<double>(modes[i].ky) * c[i] / l;
        b[i] = -I * static_cast<double>(modes[i].kx) * c[i] / l;
    }
    return u;
}

SpectralField curl(VelocityField const& u)
{
    require_same(u.u1, u.u2);
    SpectralField out(u.u1.grid_ptr());
    auto modes = out.grid().modes();
    auto a = u.u1.coeffs();
    auto b = u.u2.coeffs();
    auto o = out.coeffs();
    cplx const I(0.0, 1.0);
    for (std::size_t i = 0; i < o.size(); ++i)
        o[i] = -I * static_cast<double>(modes[i].ky) * a[i] + I * static_cast<double>(modes[i].kx) * b[i];
    return out;
}

double max_divergence(VelocityField const& u)
{
    auto modes = u.u1.grid().modes();
    auto a = u.u1.coeffs();
    auto b = u.u2.coeffs();
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(static_cast<double>(modes[i].kx) * a[i] +
                                 static_cast<double>(modes[i].ky) * b[i]));
    return m;
}

Advector::Advector(SpectralField const& source) : grid_(source.grid_ptr())
{
    auto& ws = detail::workspace_for(*grid_);
    auto const u = biot_savart(source);
    u1_.resize(ws.points());
    u2_.resize(ws.points());
    ws.synthesize(u.u1.coeffs(), u1_.data());
    ws.synthesize(u.u2.coeffs(), u2_.data());
}

void Advector::apply_into(SpectralField const& target, SpectralField& out) const
{
    if (target.grid().cutoff() != grid_->cutoff() || out.grid().cutoff() != grid_->cutoff())
        throw StructuralError("advect: grid mismatch");
    auto& ws = detail::workspace_for(*grid_);
    auto modes = grid_->modes();
    auto t = target.coeffs();
    auto& tmp = ws.coeff_scratch;
    cplx const I(0.0, 1.0);

    for (std::size_t i = 0; i < t.size(); ++i)
        tmp[i] = I * static_cast<double>(modes[i].kx) * t[i];
    ws.synthesize(tmp, ws.real_scratch_a.data());
    for (std::size_t i = 0; i < t.size(); ++i)
        tmp[i] = I * static_cast<double>(modes[i].ky) * t[i];
    ws.synthesize(tmp, ws.real_scratch_b.data());

    auto& p = ws.real_scratch_c;
    for (std::size_t j = 0; j < p.size(); ++j)
        p[j] = u1_[j] * ws.real_scratch_a[j] + u2_[j] * ws.real_scratch_b[j];
    ws.analyze(p.data(), out.coeffs());
}

SpectralField Advector::apply(SpectralField const& target) const
{
    SpectralField out(grid_);
    apply_into(target, out);
    return out;
}

SpectralField advect(SpectralField const& source, SpectralField const& target)
{
    require_same(source, target);
    return Advector(source).apply(target);
}

// Real-space transforms ------------------------------------------------------------------

std::vector<double> to_real(SpectralField const& f)
{
    auto& ws = detail::workspace_for(f.grid());
    std::vector<double> out(ws.points());
    ws.synthesize(f.coeffs(), out.data());
    return out;
}

SpectralField from_real(GridPtr grid, std::span<double const> values)
{
    auto& ws = detail::workspace_for(*grid);
    if (values.size() != ws.points())
        throw StructuralError("from_real: expected " + std::to_string(ws.points()) + " values");
    SpectralField out(std::move(grid));
    ws.analyze(values.data(), out.coeffs());
    return out;
}

}  // namespace snse
