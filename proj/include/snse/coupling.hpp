#pragma once

#include <span>
#include <vector>

#include "snse/forcing.hpp"
#include "snse/integrator.hpp"

namespace snse {

struct NudgeParams
{
    int K = 8;          ///< controlled shells
    double beta = 0.0;  ///< control gain
    SchemeParams base;
    bool enforce_beta_condition = false;  ///< require nu lambda_{K+1} >= 2 beta

    void validate() const;
};

struct BetaProposal
{
    double beta = 0.0;               ///< nu lambda_{K+1} / 2
    bool k_beta_condition = false;   ///< nu lambda_{K+1} >= 2 beta
    bool beta_lower_bound = false;   ///< beta >= c max{1/delta0, delta0^2|sigma|^4/nu^3, |sigma|^4/nu^5}
    double beta_lower_bound_rhs = 0.0;
};

BetaProposal propose_beta(int K, double nu, double delta0, double sigma_sq, double c);

/// Diagonal of the nudged step: 1 + delta nu |k|^2 + beta delta 1{k in Pi_K}.
std::vector<double> nudged_diagonal(GridSpec const& grid, NudgeParams const& np);

/// Solves (I + delta nu A) x + delta Pi_N(u_prev . grad x) = nudged_prev + Pi_N sigma dW - beta delta Pi_K(x - target_new),
/// with u_prev = K * nudged_prev and target_new the plain scheme's state at the same step.
StepResult nudged_step(SpectralField const& nudged_prev, SpectralField const& target_new, std::span<double const> dW,
                       NudgeParams const& np, ForcingBasis const& sigma);

struct CoupleOptions
{
    bool record_shifts = true;
    int stride = 0;  ///< state recording stride for both trajectories (0: first and last)
};

struct CoupledPair
{
    Trajectory primary;
    Trajectory nudged;
    std::vector<std::vector<double>> shifts;  ///< psi_j, j = 1..n
    std::vector<double> gaps;                 ///< |zeta^n|^2, n = 0..n_steps
};

/// Advances the plain and nudged systems on one tape, plain system first within each step.
/// psi_j = -beta sigma^{-1} Pi_K zeta^j (RangeError if Pi_K zeta^j leaves range(sigma)).
CoupledPair coupled_simulate(SpectralField const& xi0, SpectralField const& nudged0, std::int64_t n_steps,
                             NudgeParams const& np, ForcingBasis const& sigma, NoiseStream const& stream,
                             CoupleOptions const& opt = {});

/// Plain scheme from nudged0 driven by dW_j + delta psi_j. Reproduces pair.nudged up to solver tolerance.
Trajectory simulate_shifted(SpectralField const& nudged0, CoupledPair const& pair, NudgeParams const& np,
                            ForcingBasis const& sigma, NoiseStream const& stream);

struct GirsanovCost
{
    std::vector<double> kl_samples;  ///< delta sum_j |psi_j|^2 per pair
    double kl_bound = 0.0;           ///< mean of kl_samples

    /// 2^{(1-a)/(1+a)} (E (delta sum|psi|^2)^a)^{1/(1+a)}, a in (0, 1].
    double tv_bound(double a) const;
    /// 1 - exp(-KL)/2.
    double tv_from_kl() const;
};

GirsanovCost girsanov_cost(CoupledPair const& pair, double delta);
GirsanovCost girsanov_cost(std::span<CoupledPair const> pairs, double delta);

/// c beta (1 + beta delta) ||sigma^{-1}||^2 |zeta^0|^2 with c = 1.
double girsanov_majorant(double beta, double delta, double pinv_norm, double gap0_sq);

struct ContractionFit
{
    bool exact_coupling = false;
    double log_factor = 0.0;     ///< fitted slope of log E|zeta^n|^2 per step
    double theoretical = 0.0;    ///< -(3/4) log(1 + beta delta)
    double r_squared = 1.0;
    std::size_t points = 0;
    bool meets_band = false;     ///< -log_factor >= band * (3/4) log(1 + beta delta)
};

/// Fits log of the mean gap over steps; points below floor_rel * gap[0] are excluded
/// (rounding floor of a converged coupling).
ContractionFit pathwise_contraction_check(std::span<double const> mean_gaps, double beta, double delta, double band,
                                          double floor_rel = 1e-20);

/// Ensemble mean of pair.gaps, index by index.
std::vector<double> mean_gaps(std::span<CoupledPair const> pairs);

}  // namespace snse
