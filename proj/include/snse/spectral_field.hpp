#pragma once

#include <complex>
#include <compare>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace snse {

using cplx = std::complex<double>;

/// Integer wavenumber on the 2-torus.
struct WaveVector
{
    int kx = 0;
    int ky = 0;

    constexpr int eigenvalue() const noexcept { return kx * kx + ky * ky; }
    constexpr WaveVector operator-() const noexcept { return {-kx, -ky}; }
    friend constexpr auto operator<=>(WaveVector const&, WaveVector const&) = default;
};

/// Distinct eigenvalues of -Laplacian on the torus (sums of two squares),
/// 1-based: shell_eigenvalue(1) == 1, shell_eigenvalue(2) == 2, ...
int shell_eigenvalue(int shell);

/// Number of shells whose eigenvalue is <= lambda.
int shell_count_up_to(int lambda);

/// Truncation and transform geometry for one cutoff.
///
/// The cutoff N counts distinct eigenvalue shells: the active set is every
/// k with 0 < |k|^2 <= lambda_cut(N), ties included. Coefficients are stored
/// on the half-spectrum {ky > 0} U {ky == 0, kx > 0} in lexicographic (kx, ky)
/// order; the other half follows from Hermitian symmetry.
class GridSpec
{
public:
    /// Shared, cached instance for cutoff N >= 1.
    static std::shared_ptr<GridSpec const> make(int cutoff);

    int cutoff() const noexcept { return cutoff_; }
    int cutoff_eigenvalue() const noexcept { return lambda_cut_; }
    /// lambda_{N+1}: the first eigenvalue outside the active set.
    int next_eigenvalue() const noexcept { return lambda_next_; }
    int max_wavenumber() const noexcept { return kmax_; }
    /// Grid points per dimension used for quadratic products.
    int padded_resolution() const noexcept { return padded_; }

    std::span<WaveVector const> modes() const noexcept { return modes_; }
    std::size_t size() const noexcept { return modes_.size(); }
    /// Real dimension of the truncated space (two real eigenfunctions per stored mode).
    std::size_t dimension() const noexcept { return 2 * modes_.size(); }

    /// Storage index of k, or -1 when k is inactive or lies in the implicit half.
    std::ptrdiff_t index_of(WaveVector k) const noexcept;
    bool is_active(WaveVector k) const noexcept;

    static bool in_stored_half(WaveVector k) noexcept
    {
        return k.ky > 0 || (k.ky == 0 && k.kx > 0);
    }

    explicit GridSpec(int cutoff);

private:
    int cutoff_;
    int lambda_cut_;
    int lambda_next_;
    int kmax_;
    int padded_;
    std::vector<WaveVector> modes_;
    std::vector<std::ptrdiff_t> lookup_;  // (2 kmax + 1) x (kmax + 1)
};

using GridPtr = std::shared_ptr<GridSpec const>;

/// Mean-free real scalar field on the torus, truncated to a GridSpec.
///
/// Normalization: xi(x) = sum_k xi_hat(k) exp(i k.x), so |xi|^2 = (2 pi)^2 sum_k |xi_hat(k)|^2.
class SpectralField
{
public:
    explicit SpectralField(GridPtr grid);
    SpectralField(GridPtr grid, std::vector<cplx> coeffs);

    /// a exp(i k.x) + conj(a) exp(-i k.x).
    static SpectralField mode(GridPtr grid, WaveVector k, cplx amplitude);

    GridSpec const& grid() const noexcept { return *grid_; }
    GridPtr const& grid_ptr() const noexcept { return grid_; }

    std::span<cplx const> coeffs() const noexcept { return coeffs_; }
    std::span<cplx> coeffs() noexcept { return coeffs_; }

    /// Coefficient at any k (uses conjugate symmetry; zero outside the active set).
    cplx coeff(WaveVector k) const noexcept;
    /// Set the coefficient at k (and implicitly at -k). k must be active.
    void set_coeff(WaveVector k, cplx value);

    SpectralField& operator+=(SpectralField const& other);
    SpectralField& operator-=(SpectralField const& other);
    SpectralField& operator*=(double a) noexcept;

    friend SpectralField operator+(SpectralField a, SpectralField const& b) { return a += b; }
    friend SpectralField operator-(SpectralField a, SpectralField const& b) { return a -= b; }
    friend SpectralField operator*(double a, SpectralField f) { return f *= a; }

    bool same_grid(SpectralField const& other) const noexcept;
    /// Bitwise equality of grid and coefficients.
    friend bool operator==(SpectralField const& a, SpectralField const& b);

private:
    GridPtr grid_;
    std::vector<cplx> coeffs_;
};

struct VelocityField
{
    SpectralField u1;
    SpectralField u2;
};

// Linear algebra --------------------------------------------------------------

/// L^2 inner product (2 pi)^2 sum_k f_hat(k) conj(g_hat(k)).
double inner(SpectralField const& f, SpectralField const& g);
double norm_squared(SpectralField const& f);
double norm(SpectralField const& f);
/// Returns a x + y.
SpectralField axpy(double a, SpectralField const& x, SpectralField const& y);
SpectralField scale(SpectralField const& f, double a);

/// Homogeneous Sobolev norm ((2 pi)^2 sum |k|^{2s} |f_hat|^2)^{1/2}.
double sobolev_norm(SpectralField const& f, double s);
double sobolev_norm_squared(SpectralField const& f, double s);

/// Pi_M f: zero every coefficient with |k|^2 > lambda_cut(M). Same grid as f.
SpectralField project(SpectralField const& f, int shells);

/// Copy f onto another grid (truncating or zero-padding).
SpectralField resample(SpectralField const& f, GridPtr target);

// Nonlinear operators ----------------------------------------------------------

/// u = K * xi with curl u = xi and div u = 0:
/// u_hat(k) = -i k_perp xi_hat(k) / |k|^2, k_perp = (-ky, kx).
VelocityField biot_savart(SpectralField const& xi);

/// curl_perp u = -d_y u1 + d_x u2.
SpectralField curl(VelocityField const& u);

/// Largest |k . u_hat(k)| over active modes.
double max_divergence(VelocityField const& u);

/// Holds K*source on the padded grid so that repeated products
/// Pi_N((K*source) . grad target) are cheap.
class Advector
{
public:
    explicit Advector(SpectralField const& source);
    /// Pi_N((K*source) . grad target); exact Galerkin bilinear form.
    SpectralField apply(SpectralField const& target) const;
    /// Same, writing into an existing field on the same grid.
    void apply_into(SpectralField const& target, SpectralField& out) const;

private:
    GridPtr grid_;
    std::vector<double> u1_;
    std::vector<double> u2_;
};

/// Pi_N B(source, target) = Pi_N((K*source) . grad target).
SpectralField advect(SpectralField const& source, SpectralField const& target);

// Real-space transforms (padded grid, M x M points x_j = 2 pi j / M) -------------

/// Point values on the grid's padded M x M mesh, row-major [ix][iy].
std::vector<double> to_real(SpectralField const& f);
/// Inverse of to_real for band-limited data; modes outside the active set are dropped.
SpectralField from_real(GridPtr grid, std::span<double const> values);

}  // namespace snse
