#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "snse/spectral_field.hpp"
#include "snse/transport.hpp"

namespace snse {

struct DistanceParams
{
    double eps = 0.1;
    double s = 0.5;
    double alpha = 0.0;

    void validate() const;  ///< ConfigError on eps <= 0, s outside (0,1], alpha < 0
};

/// min(1, d^s / eps) for a distance d = |x - y|.
double rho_of_distance(double d, DistanceParams const& dp);
/// log of rho(d)^{1/2} exp(alpha (nx2 + ny2)); -inf when d = 0.
double log_rho_weighted_of(double d, double nx2, double ny2, DistanceParams const& dp);

double rho(SpectralField const& x, SpectralField const& y, DistanceParams const& dp);
double rho_weighted(SpectralField const& x, SpectralField const& y, DistanceParams const& dp);

enum class CostKind
{
    Rho,
    RhoWeighted,
};

/// Weighted empirical law on a common grid; caches |x|^2 per member.
class Ensemble
{
public:
    Ensemble(std::vector<SpectralField> members, std::vector<double> weights);
    static Ensemble uniform(std::vector<SpectralField> members);

    std::size_t size() const noexcept { return members_.size(); }
    std::vector<SpectralField> const& members() const noexcept { return members_; }
    std::vector<double> const& weights() const noexcept { return weights_; }
    std::vector<double> const& norms_sq() const noexcept { return norms_sq_; }
    bool is_uniform() const noexcept;

private:
    std::vector<SpectralField> members_;
    std::vector<double> weights_;
    std::vector<double> norms_sq_;
};

/// Cost matrix C_ij = cost(a_i, b_j).
Eigen::MatrixXd cost_matrix(Ensemble const& a, Ensemble const& b, CostKind kind, DistanceParams const& dp);

/// Exact W between two empirical laws. CapacityError if either side exceeds `limit`.
TransportPlan wasserstein_exact(Ensemble const& a, Ensemble const& b, CostKind kind, DistanceParams const& dp,
                                std::size_t limit = 512);

/// Mean cost over matched pairs (a_i, b_i): the value of the synchronized coupling.
double wasserstein_coupled_bound(std::span<SpectralField const> a, std::span<SpectralField const> b, CostKind kind,
                                 DistanceParams const& dp);

/// CSV "i,j,mass,cost".
void write_plan_csv(std::ostream& os, TransportPlan const& plan);

struct TriangleCertificate
{
    double K_tilde = 1.0;
    double C = 0.0;  ///< additive constant of hypothesis (iii): (gamma/(gamma-1)) eps^{2/s}
    std::size_t tested = 0;
    std::size_t violations = 0;
    double worst_ratio = 0.0;  ///< max of LHS / (K_tilde * RHS) over tested triples
    std::optional<std::array<SpectralField, 3>> witness;
};

/// K_tilde = max{(M/c)^{1/2}, K^{1/2} exp(alpha C)} with M = K = c = 1 for rho_{eps,s}.
double triangle_constant(DistanceParams const& dp, double gamma, double* C_out = nullptr);

/// Checks rho_alpha(u,v) <= K_tilde [rho_{gamma alpha}(u,w) + rho_{gamma alpha}(w,v)] on each triple.
TriangleCertificate certify_triangle(DistanceParams const& dp, double gamma,
                                     std::span<std::array<SpectralField, 3> const> triples);

/// Random triples at mixed scales, deterministic in seed.
std::vector<std::array<SpectralField, 3>> random_triples(GridPtr grid, std::size_t count, std::uint64_t seed,
                                                         double eps, double s);

}  // namespace snse
