#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace snse {

struct TransportEntry
{
    std::size_t i;
    std::size_t j;
    double mass;
    double cost;
};

struct TransportPlan
{
    double value = 0.0;
    std::vector<TransportEntry> entries;  ///< nonzero entries, sorted by (i, j)
};

/// Optimal assignment for a square cost matrix (Hungarian method, O(n^3)).
/// Returns perm with row i matched to column perm[i].
std::vector<std::size_t> optimal_assignment(Eigen::MatrixXd const& cost);

/// Exact minimum-cost coupling of weights a and b (equal totals) via successive
/// shortest paths with potentials.
TransportPlan optimal_transport(std::span<double const> a, std::span<double const> b, Eigen::MatrixXd const& cost);

}  // namespace snse
