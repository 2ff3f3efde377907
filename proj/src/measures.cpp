#include "snse/measures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "snse/error.hpp"

namespace snse {
namespace {

double log_add(double a, double b)
{
    if (a == -std::numeric_limits<double>::infinity())
        return b;
    if (b == -std::numeric_limits<double>::infinity())
        return a;
    double const m = std::max(a, b);
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}

double pair_cost(double d, double nx2, double ny2, CostKind kind, DistanceParams const& dp)
{
    if (kind == CostKind::Rho)
        return rho_of_distance(d, dp);
    return std::exp(log_rho_weighted_of(d, nx2, ny2, dp));
}

}  // namespace

void DistanceParams::validate() const
{
    if (!(eps > 0.0))
        throw ConfigError("distance.eps", "must be positive");
    if (!(s > 0.0 && s <= 1.0))
        throw ConfigError("distance.s", "must lie in (0, 1]");
    if (!(alpha >= 0.0))
        throw ConfigError("distance.alpha", "must be non-negative");
}

double rho_of_distance(double d, DistanceParams const& dp)
{
    if (d <= 0.0)
        return 0.0;
    return std::min(1.0, std::pow(d, dp.s) / dp.eps);
}

double log_rho_weighted_of(double d, double nx2, double ny2, DistanceParams const& dp)
{
    double const r = rho_of_distance(d, dp);
    if (r <= 0.0)
        return -std::numeric_limits<double>::infinity();
    return 0.5 * std::log(r) + dp.alpha * (nx2 + ny2);
}

double rho(SpectralField const& x, SpectralField const& y, DistanceParams const& dp)
{
    return rho_of_distance(norm(x - y), dp);
}

double rho_weighted(SpectralField const& x, SpectralField const& y, DistanceParams const& dp)
{
    return std::exp(log_rho_weighted_of(norm(x - y), norm_squared(x), norm_squared(y), dp));
}

// Ensembles ---------------------------------------------------------------------------

Ensemble::Ensemble(std::vector<SpectralField> members, std::vector<double> weights)
    : members_(std::move(members)), weights_(std::move(weights))
{
    if (members_.empty())
        throw StructuralError("ensemble: no members");
    if (members_.size() != weights_.size())
        throw StructuralError("ensemble: member and weight counts differ");
    double total = 0.0;
    for (double w : weights_) {
        if (!(w >= 0.0))
            throw StructuralError("ensemble: negative weight");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw StructuralError("ensemble: weights sum to " + std::to_string(total));
    for (auto const& m : members_) {
        if (!m.same_grid(members_[0]))
            throw StructuralError("ensemble: members on different grids");
        norms_sq_.push_back(norm_squared(m));
    }
}

Ensemble Ensemble::uniform(std::vector<SpectralField> members)
{
    std::size_t const n = members.size();
    return Ensemble(std::move(members), std::vector<double>(n, n ? 1.0 / static_cast<double>(n) : 0.0));
}

bool Ensemble::is_uniform() const noexcept
{
    return std::all_of(weights_.begin(), weights_.end(), [&](double w) { return w == weights_[0]; });
}

Eigen::MatrixXd cost_matrix(Ensemble const& a, Ensemble const& b, CostKind kind, DistanceParams const& dp)
{
    dp.validate();
    if (!a.members()[0].same_grid(b.members()[0]))
        throw StructuralError("cost matrix: ensembles on different grids");
    Eigen::MatrixXd C(static_cast<Eigen::Index>(a.size()), static_cast<Eigen::Index>(b.size()));
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) {
            double const d = norm(a.members()[i] - b.members()[j]);
            C(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                pair_cost(d, a.norms_sq()[i], b.norms_sq()[j], kind, dp);
        }
    return C;
}

TransportPlan wasserstein_exact(Ensemble const& a, Ensemble const& b, CostKind kind, DistanceParams const& dp,
                                std::size_t limit)
{
    if (a.size() > limit || b.size() > limit)
        throw CapacityError("exact transport limited to " + std::to_string(limit) +
                            " members per side; use wasserstein_coupled_bound");
    auto const C = cost_matrix(a, b, kind, dp);
    if (a.size() == b.size() && a.is_uniform() && b.is_uniform()) {
        auto const perm = optimal_assignment(C);
        TransportPlan plan;
        double const w = 1.0 / static_cast<double>(a.size());
        for (std::size_t i = 0; i < perm.size(); ++i) {
            double const c = C(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(perm[i]));
            plan.entries.push_back({i, perm[i], w, c});
            plan.value += c;
        }
        plan.value *= w;
        return plan;
    }
    return optimal_transport(a.weights(), b.weights(), C);
}

double wasserstein_coupled_bound(std::span<SpectralField const> a, std::span<SpectralField const> b, CostKind kind,
                                 DistanceParams const& dp)
{
    dp.validate();
    if (a.size() != b.size() || a.empty())
        throw StructuralError("coupled bound: need equally many matched pairs");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += pair_cost(norm(a[i] - b[i]), norm_squared(a[i]), norm_squared(b[i]), kind, dp);
    return s / static_cast<double>(a.size());
}

void write_plan_csv(std::ostream& os, TransportPlan const& plan)
{
    os << "i,j,mass,cost\n";
    os.precision(17);
    for (auto const& e : plan.entries)
        os << e.i << ',' << e.j << ',' << e.mass << ',' << e.cost << '\n';
}

// Triangle certification ----------------------------------------------------------------

double triangle_constant(DistanceParams const& dp, double gamma, double* C_out)
{
    dp.validate();
    if (!(gamma > 1.0))
        throw ConfigError("gamma", "must exceed 1");
    double const C = gamma / (gamma - 1.0) * std::pow(dp.eps, 2.0 / dp.s);
    if (C_out)
        *C_out = C;
    return std::max(1.0, std::exp(dp.alpha * C));
}

TriangleCertificate certify_triangle(DistanceParams const& dp, double gamma,
                                     std::span<std::array<SpectralField, 3> const> triples)
{
    TriangleCertificate cert;
    cert.K_tilde = triangle_constant(dp, gamma, &cert.C);
    DistanceParams big = dp;
    big.alpha = gamma * dp.alpha;
    double const logK = std::log(cert.K_tilde);
    for (auto const& t : triples) {
        auto const& [u, v, w] = t;
        double const nu2 = norm_squared(u), nv2 = norm_squared(v), nw2 = norm_squared(w);
        double const lhs = log_rho_weighted_of(norm(u - v), nu2, nv2, dp);
        double const rhs = logK + log_add(log_rho_weighted_of(norm(u - w), nu2, nw2, big),
                                          log_rho_weighted_of(norm(w - v), nw2, nv2, big));
        ++cert.tested;
        if (lhs == -std::numeric_limits<double>::infinity())
            continue;
        double const ratio = std::exp(lhs - rhs);
        cert.worst_ratio = std::max(cert.worst_ratio, ratio);
        if (lhs > rhs + 1e-12) {
            ++cert.violations;
            if (!cert.witness)
                cert.witness = t;
        }
    }
    return cert;
}

std::vector<std::array<SpectralField, 3>> random_triples(GridPtr grid, std::size_t count, std::uint64_t seed,
                                                         double eps, double s)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    std::uniform_real_distribution<double> ud(0.0, 1.0);
    // Scale at which rho reaches 1; triples straddle it.
    double const knee = std::pow(eps, 1.0 / s);
    auto random_field = [&](double scale) {
        SpectralField f(grid);
        for (auto& c : f.coeffs())
            c = cplx(nd(rng), nd(rng));
        double const n = norm(f);
        return n > 0.0 ? (scale / n) * f : f;
    };
    auto log_scale = [&](double lo, double hi) { return std::exp(std::log(lo) + ud(rng) * (std::log(hi) - std::log(lo))); };

    std::vector<std::array<SpectralField, 3>> out;
    out.reserve(count);
    for (std::size_t t = 0; t < count; ++t) {
        SpectralField u = random_field(log_scale(1e-2, 3.0));
        SpectralField v = u + random_field(log_scale(1e-3 * knee, 1e2 * knee));
        SpectralField w = ud(rng) < 0.5 ? u + random_field(log_scale(1e-3 * knee, 1e2 * knee))
                                        : v + random_field(log_scale(1e-3 * knee, 1e2 * knee));
        if (ud(rng) < 0.5)
            std::swap(u, v);
        out.push_back({std::move(u), std::move(v), std::move(w)});
    }
    return out;
}

}  // namespace snse
