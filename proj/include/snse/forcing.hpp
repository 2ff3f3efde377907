#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "snse/spectral_field.hpp"

namespace snse {

// Noise ----------------------------------------------------------------------------

/// Index-addressed Gaussian increments. Fine increments are primitive:
/// fine(n, j) = sqrt(delta / R) z(seed, trajectory_id, n, j, k), and every
/// coarser increment is the left-to-right sum of its fine parts.
struct NoiseStream
{
    std::uint64_t seed = 0;
    std::uint64_t trajectory_id = 0;
    int fine_factor = 1;   ///< R, sub-steps per coarse step
    double delta = 1.0;    ///< coarse step
    std::size_t dimension = 0;  ///< d

    void validate() const;
};

struct Level
{
    static constexpr int coarse = -1;
    int fine = coarse;  ///< sub-step j in [0, R), or coarse
};

/// Standard normal z(k) for k < d at (n, j).
void standard_normals(NoiseStream const& s, std::int64_t n, int j, std::span<double> out);

std::vector<double> sample_increment(NoiseStream const& s, std::int64_t n, Level level);
std::vector<double> fine_increment(NoiseStream const& s, std::int64_t n, int j);
std::vector<double> coarse_increment(NoiseStream const& s, std::int64_t n);
/// sum_{j0 <= j < j1} fine(n, j), accumulated in increasing j.
void block_increment(NoiseStream const& s, std::int64_t n, int j0, int j1, std::span<double> out);

// Forcing basis ---------------------------------------------------------------------

/// One real L^2-normalized eigenfunction of -Laplacian: cos(k.x)/(sqrt2 pi) or sin(k.x)/(sqrt2 pi).
struct RealEigenfunction
{
    WaveVector k;
    bool is_sine = false;
};

/// First `count` real eigenfunctions: by eigenvalue, then lexicographic k in the
/// stored half, cosine before sine.
std::vector<RealEigenfunction> real_eigenfunctions(int count);
/// All real eigenfunctions with eigenvalue <= lambda_cut(shells).
std::vector<RealEigenfunction> real_eigenfunctions_in_shells(int shells);
SpectralField real_eigenfunction_field(GridPtr grid, RealEigenfunction e);

struct NondegeneracyReport
{
    bool range_satisfied = false;
    /// Eigenfunctions of Pi_K not in span(sigma), with their fit residuals.
    std::vector<RealEigenfunction> uncovered;
    std::vector<double> residuals;
    /// lambda_{K+1} >= (c / nu) max{1/delta0, delta0^2 |sigma|^4 / nu^3, |sigma|^4 / nu^5}
    bool eigenvalue_satisfied = false;
    double eigenvalue_lhs = 0.0;
    double eigenvalue_rhs = 0.0;
};

/// Directions sigma_1..sigma_d. Directions are stored sparsely, so applying the
/// basis on any cutoff projects automatically.
class ForcingBasis
{
public:
    ForcingBasis(GridPtr grid, std::vector<SpectralField> directions);

    /// sigma_k = q_k e_k with e_k the k-th real eigenfunction; d = amplitudes.size().
    static ForcingBasis low_mode(std::vector<double> const& amplitudes);
    /// Every real eigenfunction on the first `shells` shells with equal amplitude,
    /// scaled so that |sigma|^2 = total_norm_sq.
    static ForcingBasis low_mode_shells(int shells, double total_norm_sq);

    std::size_t dimension() const noexcept { return directions_.size(); }
    GridPtr const& grid_ptr() const noexcept { return grid_; }
    std::vector<SpectralField> const& directions() const noexcept { return directions_; }
    Eigen::MatrixXd const& gram() const noexcept { return gram_; }

    /// |sigma|^2, ||sigma||^2_{H1}, ||sigma||^2_{H2}.
    double trace_l2() const noexcept { return trace_[0]; }
    double trace_h1() const noexcept { return trace_[1]; }
    double trace_h2() const noexcept { return trace_[2]; }

    /// Pi_N sum_k eta_k sigma_k on the given grid.
    SpectralField apply(std::span<double const> eta, GridPtr const& target) const;
    SpectralField apply(std::span<double const> eta) const { return apply(eta, grid_); }
    /// out += Pi_N sum_k eta_k sigma_k (out's grid).
    void add_applied(std::span<double const> eta, SpectralField& out) const;

    /// Minimum-norm eta with sum eta_k sigma_k = f. Throws RangeError when the
    /// residual exceeds 1e-8 |f|.
    std::vector<double> pseudo_inverse_apply(SpectralField const& f) const;
    /// Operator norm of sigma^{-1} on range(sigma): 1/sqrt(smallest positive Gram eigenvalue).
    double pseudo_inverse_norm() const noexcept { return pinv_norm_; }

    NondegeneracyReport check_nondegeneracy(int K, double nu = 1.0, double delta0 = 1.0,
                                            double margin_c = 0.0) const;

private:
    struct Entry
    {
        WaveVector k;
        cplx value;
    };
    void build();
    double range_residual(SpectralField const& f, Eigen::VectorXd* eta) const;
    Eigen::VectorXd real_coords(SpectralField const& f, double* outside_sq) const;

    GridPtr grid_;
    std::vector<SpectralField> directions_;
    std::vector<std::vector<Entry>> sparse_;
    std::vector<WaveVector> support_;  // union of supports, stored half
    Eigen::MatrixXd basis_;            // 2|support| x d, real coordinates with L^2 weight
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod_;
    Eigen::MatrixXd gram_;
    double trace_[3] = {0, 0, 0};
    double pinv_norm_ = 0.0;
};

}  // namespace snse
