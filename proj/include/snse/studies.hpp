#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "snse/coupling.hpp"
#include "snse/fit.hpp"
#include "snse/forcing.hpp"
#include "snse/integrator.hpp"
#include "snse/measures.hpp"
#include "snse/observables.hpp"

namespace snse {

// Reports ------------------------------------------------------------------------------

struct CsvTable
{
    std::string name;  ///< file stem
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    /// Header plus rows, every value printed with %.17g.
    std::string to_csv() const;
};

/// One acceptance clause evaluated on a point estimate.
struct Check
{
    std::string id;
    std::string description;
    double value = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    bool passed = false;
};

Check band_check(std::string id, std::string description, double value, double lo, double hi);

struct StudyReport
{
    std::string kind;
    nlohmann::json summary = nlohmann::json::object();
    std::vector<CsvTable> tables;
    std::vector<Check> checks;

    bool all_passed() const;
    /// summary + checks, schema "snse-lab/1".
    nlohmann::json to_json() const;
};

nlohmann::json to_json(RateFit const& f);

// Shared configuration ---------------------------------------------------------------------

struct StudyCommon
{
    double nu = 1.0;
    std::shared_ptr<ForcingBasis const> forcing;
    std::uint64_t seed = 1;
    unsigned threads = 1;
    SolverPolicy solver = SolverPolicy::Auto;
    double delta0 = 0.0;  ///< <= 0: the largest step of the study

    SchemeParams scheme(int cutoff, double delta) const;
    void validate() const;
};

/// Deterministic initial data.
///  - "zero"
///  - "mode": amplitude at wave vector k
///  - "power-law": |xi_hat(k)| = c |k|^{-exponent} with Philox phases keyed by (seed, k), so the
///    field on a smaller grid is the projection of the field on a larger one; c fixes |Pi_{norm_shells} xi|^2 = energy
///  - "low-modes": Philox Gaussian coefficients on the first `shells` shells, scaled to `energy`
struct InitialSpec
{
    std::string kind = "power-law";
    double energy = 1.0;
    double exponent = 2.1;
    int shells = 4;
    int norm_shells = 16;
    WaveVector k{1, 0};
    double amplitude = 1.0;
    std::uint64_t seed = 7;

    nlohmann::json to_json() const;
};

SpectralField make_initial(InitialSpec const& spec, GridPtr grid);

/// |y - x|^2 with x on a coarser grid embedded in y's grid.
double embedded_distance_sq(SpectralField const& coarse, SpectralField const& fine);

// Temporal order -------------------------------------------------------------------------------

struct TemporalConfig : StudyCommon
{
    int cutoff = 16;
    std::vector<double> deltas{1.0 / 50, 1.0 / 100, 1.0 / 200, 1.0 / 400, 1.0 / 800};
    double horizon = 1.0;
    int ref_factor = 16;  ///< reference step = finest delta / ref_factor
    int paths = 128;
    double p = 0.5;
    InitialSpec initial;
    double slope_lo = 0.40, slope_hi = 0.60, min_r2 = 0.97;
};

struct TemporalResult
{
    std::vector<double> deltas;
    std::vector<double> moment_p;  ///< E sup_k |e_k|^p
    std::vector<double> moment_1;
    std::vector<double> moment_2;
    RateFit moment_fit;  ///< log E sup|e|^p vs log delta
    double order = 0.0;  ///< moment slope / p
    RateFit l2_fit;      ///< log (E sup|e|^2)^{1/2} vs log delta
    StudyReport report;
};

TemporalResult temporal_order_study(TemporalConfig const& cfg);

// Spatial order ---------------------------------------------------------------------------------

struct SpatialConfig : StudyCommon
{
    std::vector<int> cutoffs{4, 8, 16, 32, 64};
    int ref_cutoff = 256;
    double delta = 0.01;
    double horizon = 1.0;
    int paths = 16;
    InitialSpec initial;  ///< norm_shells is forced to ref_cutoff
    bool advection = true;
    double slope_lo = -1.3, slope_hi = -0.7, min_r2 = 0.9;
};

struct SpatialResult
{
    std::vector<int> cutoffs;
    std::vector<double> dimensions;  ///< real dimension of Pi_N
    std::vector<double> error_sq;    ///< E sup_t |xi_ref - xi_N|^2
    std::optional<RateFit> fit;      ///< vs dimension; absent with fewer than 3 rungs
    std::optional<RateFit> shell_fit;
    bool resolved = false;
    StudyReport report;
};

SpatialResult spatial_order_study(SpatialConfig const& cfg);

// Hölder regularity ------------------------------------------------------------------------------

struct HolderConfig : StudyCommon
{
    int cutoff = 16;
    double delta = 0.001;
    double burn_in = 2.0;
    double window = 3.0;
    std::vector<double> lags;  ///< time lags; empty: 2..200 steps geometric
    double m = 2.0;
    int paths = 16;
    InitialSpec initial;
    double slope_lo = 0.7, slope_hi = 1.1;
};

struct HolderResult
{
    std::vector<double> lags;
    std::vector<double> moments;  ///< E |xi(t+h) - xi(t)|^m
    RateFit fit;
    StudyReport report;
};

HolderResult holder_study(HolderConfig const& cfg);

// Wasserstein contraction ---------------------------------------------------------------------------

struct Theta
{
    int cutoff = 4;
    double delta = 0.01;
};

struct ContractionConfig : StudyCommon
{
    std::vector<Theta> grid;
    double horizon = 20.0;
    double record_every = 0.5;
    double fit_from = 10.0;  ///< fit log W over [fit_from, horizon]
    int paths = 128;
    std::size_t exact_max = 32;  ///< exact W computed when paths <= exact_max
    DistanceParams distance;
    CostKind cost = CostKind::RhoWeighted;
    InitialSpec initial;
    double gap = 1.0;   ///< |xi0 - xi0~|, placed on the first gap_shells shells
    int gap_shells = 2;
    bool advection = true;
    double max_spread = 3.0, min_r2 = 0.9;
};

struct ContractionSeries
{
    Theta theta;
    std::vector<double> times;
    std::vector<double> coupled;
    std::vector<double> exact;  ///< empty unless paths <= exact_max
    RateFit fit;                ///< semi-log: slope = -C2
    double C2 = 0.0;
    bool exact_below_coupled = true;
};

struct ContractionResult
{
    std::vector<ContractionSeries> series;
    double spread = 0.0;  ///< max C2 / min C2
    StudyReport report;
};

ContractionResult contraction_study(ContractionConfig const& cfg);

// Weak error ---------------------------------------------------------------------------------------

struct WeakConfig : StudyCommon
{
    std::vector<Theta> grid;  ///< ordered towards the reference
    Theta reference{16, 0.00125};
    std::vector<ObservableSpec> observables;
    double horizon = 2.0;
    double record_every = 0.1;
    int paths = 64;
    InitialSpec initial;
    DistanceParams distance;
    bool require_lipschitz = false;
    double g_p = 0.5;
    double g_beta = 0.49;
};

struct WeakResult
{
    /// errors[o][i]: sup_t |E phi_o(theta_i) - E phi_o(ref)|; noise likewise (2 standard errors)
    std::vector<std::vector<double>> errors;
    std::vector<std::vector<double>> noise;
    std::vector<double> g;
    bool trend_ok = true;
    StudyReport report;
};

/// max{delta^s, delta^{p/2}}^{beta/2} + dim(Pi_N)^{-s/4}.
double weak_rate_function(Theta const& theta, double s, double p, double beta);

WeakResult weak_error_study(WeakConfig const& cfg);

// Stationary bias ----------------------------------------------------------------------------------

struct BiasConfig : StudyCommon
{
    int cutoff = 16;
    double delta = 0.05;
    ObservableSpec observable;
    double proxy_time = 20000.0;
    double burn_in = 10000.0;
    std::vector<double> run_times{5, 10, 20, 40, 80};  ///< n delta
    int replicas = 64;
    InitialSpec initial{"power-law", 0.2};  ///< near the stationary energy so the MSE is variance dominated
    double exponent_lo = 0.7, exponent_hi = 1.3;
};

struct BiasResult
{
    std::vector<double> n;
    std::vector<double> bias;          ///< coupled estimate |E A_n(xi0) - E A_n(stationary start)|
    std::vector<double> bias_hw;       ///< 95% half-width
    std::vector<double> bias_direct;   ///< |E A_n(xi0) - proxy|
    std::vector<double> mse;           ///< E (A_n(xi0) - proxy)^2
    double proxy = 0.0;
    RateFit bias_fit;
    RateFit mse_fit;
    bool doubling_ok = true;
    StudyReport report;
};

BiasResult stationary_bias_study(BiasConfig const& cfg);

// Lyapunov / moment bounds ---------------------------------------------------------------------------

struct LyapunovConfig : StudyCommon
{
    int cutoff = 16;
    double delta = 0.05;
    double horizon = 20.0;
    int paths = 128;
    int seeds = 20;
    double alpha = 0.0;  ///< <= 0: nu / (8 |sigma|^2)
    InitialSpec initial;
    double factor = 3.0;
    double min_fraction = 0.95;
};

struct LyapunovResult
{
    double alpha = 0.0;
    double C = 0.0;
    std::vector<double> worst_margin;  ///< per seed: max_n log(mean exp) - log(bound)
    std::size_t seeds_ok = 0;
    StudyReport report;
};

LyapunovResult lyapunov_study(LyapunovConfig const& cfg);

// Coupling ---------------------------------------------------------------------------------------

struct CouplingConfig : StudyCommon
{
    int cutoff = 16;
    double delta = 0.01;
    int K = 4;
    double beta = 0.0;  ///< <= 0: nu lambda_{K+1} / 2
    double nondegeneracy_margin = 0.0;
    double horizon = 10.0;
    int paths = 32;
    std::vector<double> perturbations{1e-2, 1e-1, 1.0};  ///< |zeta^0| values
    int perturbation_shell = 1;
    bool record_shifts = true;
    InitialSpec initial;
    bool enforce_beta_condition = true;
    double band = 0.0;
};

struct CouplingRun
{
    double perturbation = 0.0;
    std::vector<double> mean_gaps;
    ContractionFit fit;
    double final_ratio = 0.0;   ///< E|zeta(T)|^2 / |zeta^0|^2
    double kl_mean = 0.0;
    double majorant = 0.0;
    double tv_half = 0.0;       ///< tv_bound(a = 1/2)
    double replay_error = 0.0;  ///< max_n |shifted replay - nudged| on path 0
};

struct CouplingResult
{
    double beta = 0.0;
    std::vector<CouplingRun> runs;
    std::optional<RateFit> kl_fit;  ///< log kl vs log |zeta^0|^2
    StudyReport report;
};

CouplingResult coupling_study(CouplingConfig const& cfg);

// Metric certification ----------------------------------------------------------------------------

struct CertifyConfig
{
    DistanceParams distance;
    double gamma = 2.0;
    std::size_t triples = 10000;
    int cutoff = 4;
    std::uint64_t seed = 1;
};

struct CertifyResult
{
    TriangleCertificate certificate;
    std::size_t metric_violations = 0;  ///< symmetry / identity / triangle for rho_{eps,s}
    StudyReport report;
};

CertifyResult certify_metric_study(CertifyConfig const& cfg);

}  // namespace snse
