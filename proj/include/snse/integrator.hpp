#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "snse/forcing.hpp"
#include "snse/spectral_field.hpp"

namespace snse {

enum class SolverPolicy
{
    FixedPoint,  ///< preconditioned fixed point only; SolverError if it stalls
    Krylov,      ///< restarted GMRES, right-preconditioned by (I + delta nu A)^{-1}
    Auto,        ///< fixed point, falling back to GMRES
};

std::string to_string(SolverPolicy p);
SolverPolicy solver_policy_from_string(std::string const& s);

/// One point theta = (N, delta) plus physics and solver settings.
struct SchemeParams
{
    double nu = 1.0;
    double delta = 0.01;
    int cutoff = 16;
    SolverPolicy solver = SolverPolicy::Auto;
    double delta0 = 0.0;  ///< <= 0 means delta0 = delta
    bool advection = true;
    double tolerance = 1e-12;  ///< relative residual
    int max_iterations = 200;

    double effective_delta0() const noexcept { return delta0 > 0.0 ? delta0 : delta; }
    /// Throws ConfigError naming the field.
    void validate() const;
};

struct StepResult
{
    SpectralField xi;
    int iterations = 0;
    double residual = 0.0;  ///< absolute L^2 residual of the linear system
};

/// Solve diag .* x + delta Pi_N((K*frozen) . grad x) = rhs, where `diag` is
/// indexed like the grid modes. `adv` may be null (no advection).
StepResult solve_implicit(SpectralField const& rhs, std::span<double const> diag, Advector const* adv,
                          SchemeParams const& p, SpectralField const* guess = nullptr);

/// xi_new with (I + delta nu A) xi_new + delta Pi_N(u_prev . grad xi_new) = xi_prev + Pi_N sigma dW,
/// where dW is the Brownian increment over the step (sqrt(delta) eta).
StepResult semi_implicit_step(SpectralField const& xi_prev, std::span<double const> dW, SchemeParams const& p,
                              ForcingBasis const& sigma);

/// |xn|^2 + |xn - xp|^2 - |xp|^2 + 2 nu delta |grad xn|^2 - 2 (Pi_N sigma dW, xn), divided by
/// max(|xp|^2, |xn|^2, |sigma dW|^2). Zero up to solver tolerance.
double energy_identity_defect(SpectralField const& xi_prev, SpectralField const& xi_new,
                              std::span<double const> dW, SchemeParams const& p, ForcingBasis const& sigma);

/// Step m of a run with step delta reads fine sub-steps [j0, j1) of coarse step n of the tape.
struct TapeSlot
{
    std::int64_t n;
    int j0;
    int j1;
};

/// Maps run steps onto a noise tape whose coarse step is a multiple of delta.
class TapeMap
{
public:
    TapeMap(NoiseStream const& stream, double delta);
    TapeSlot slot(std::int64_t step) const noexcept;
    int steps_per_coarse() const noexcept { return per_coarse_; }

private:
    int per_coarse_;
    int block_;
};

struct RecordOptions
{
    int stride = 1;               ///< keep every stride-th state (0: keep only the first and last)
    std::int64_t first_step = 0;  ///< global index of the first step (resumed runs)
    std::function<void(std::int64_t step, SpectralField const&)> observer;
};

struct Trajectory
{
    SchemeParams params;
    std::int64_t first_step = 0;
    std::vector<std::int64_t> steps;  ///< global step index of each stored state
    std::vector<SpectralField> states;
    std::vector<double> energy;     ///< |xi^n|^2 for every step, including the initial state
    std::vector<double> enstrophy;  ///< |grad xi^n|^2 likewise
    std::vector<int> iterations;    ///< solver iterations per step

    double time_of(std::int64_t step) const noexcept { return static_cast<double>(step) * params.delta; }
    SpectralField const& final_state() const { return states.back(); }
};

/// Iterates semi_implicit_step. Throws SolverError with the failing step index.
Trajectory simulate(SpectralField const& xi0, std::int64_t n_steps, SchemeParams const& p, ForcingBasis const& sigma,
                    NoiseStream const& stream, RecordOptions const& rec = {});

/// Same scheme at p_fine.delta = stream.delta / R, states kept at the coarse times of the tape.
Trajectory reference_simulate(SpectralField const& xi0, std::int64_t n_coarse_steps, SchemeParams const& p_fine,
                              ForcingBasis const& sigma, NoiseStream const& stream);

/// log of exp(alpha |xi^n|^2 + alpha nu delta sum_{1<=j<=n} |grad xi^j|^2) for n = 0..len-1.
std::vector<double> moment_probe(Trajectory const& traj, double alpha);

/// log(mean(exp(v))) without overflow.
double log_mean_exp(std::span<double const> v);

}  // namespace snse
