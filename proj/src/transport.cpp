#include "snse/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "snse/error.hpp"

namespace snse {

std::vector<std::size_t> optimal_assignment(Eigen::MatrixXd const& cost)
{
    auto const n = static_cast<std::size_t>(cost.rows());
    if (cost.cols() != cost.rows())
        throw StructuralError("assignment: cost matrix must be square");
    double const inf = std::numeric_limits<double>::infinity();
    // 1-based potentials formulation; column 0 is a virtual start.
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
    std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
    std::vector<char> used(n + 1);
    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[j0] = 1;
            std::size_t const i0 = p[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j])
                    continue;
                double const cur = cost(static_cast<Eigen::Index>(i0 - 1), static_cast<Eigen::Index>(j - 1)) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            std::size_t const j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<std::size_t> perm(n);
    for (std::size_t j = 1; j <= n; ++j)
        perm[p[j] - 1] = j - 1;
    return perm;
}

TransportPlan optimal_transport(std::span<double const> a, std::span<double const> b, Eigen::MatrixXd const& cost)
{
    std::size_t const n = a.size(), m = b.size();
    if (static_cast<std::size_t>(cost.rows()) != n || static_cast<std::size_t>(cost.cols()) != m)
        throw StructuralError("transport: cost matrix shape mismatch");
    double const ta = std::accumulate(a.begin(), a.end(), 0.0);
    double const tb = std::accumulate(b.begin(), b.end(), 0.0);
    if (std::abs(ta - tb) > 1e-12 * std::max(ta, 1.0))
        throw StructuralError("transport: marginals have different mass");
    double const eps = 1e-15 * std::max(ta, 1.0);
    double const inf = std::numeric_limits<double>::infinity();

    std::vector<double> supply(a.begin(), a.end()), demand(b.begin(), b.end());
    Eigen::MatrixXd flow = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
    // Node potentials: rows 0..n-1, columns n..n+m-1. Costs are >= 0 initially.
    std::vector<double> pot(n + m, 0.0), dist(n + m);
    std::vector<std::ptrdiff_t> prev(n + m);
    std::vector<char> done(n + m);
    auto c = [&](std::size_t i, std::size_t j) { return cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)); };
    auto f = [&](std::size_t i, std::size_t j) -> double& { return flow(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)); };

    for (;;) {
        double remaining = 0.0;
        for (double s : supply)
            remaining += s;
        if (remaining <= eps * static_cast<double>(n))
            break;
        std::fill(dist.begin(), dist.end(), inf);
        std::fill(prev.begin(), prev.end(), -1);
        std::fill(done.begin(), done.end(), 0);
        for (std::size_t i = 0; i < n; ++i)
            if (supply[i] > eps)
                dist[i] = 0.0;
        // Dense Dijkstra on reduced costs. Finalized nodes are never relaxed again, so
        // round-off in the reduced costs cannot close a cycle in prev.
        for (;;) {
            std::size_t best = n + m;
            double bd = inf;
            for (std::size_t v = 0; v < n + m; ++v)
                if (!done[v] && dist[v] < bd) {
                    bd = dist[v];
                    best = v;
                }
            if (best == n + m)
                break;
            done[best] = 1;
            if (best < n) {
                for (std::size_t j = 0; j < m; ++j) {
                    if (done[n + j])
                        continue;
                    double const nd = bd + c(best, j) + pot[best] - pot[n + j];
                    if (nd < dist[n + j]) {
                        dist[n + j] = nd;
                        prev[n + j] = static_cast<std::ptrdiff_t>(best);
                    }
                }
            } else {
                std::size_t const j = best - n;
                for (std::size_t i = 0; i < n; ++i)
                    if (!done[i] && f(i, j) > eps) {
                        double const nd = bd - c(i, j) + pot[best] - pot[i];
                        if (nd < dist[i]) {
                            dist[i] = nd;
                            prev[i] = static_cast<std::ptrdiff_t>(best);
                        }
                    }
            }
        }
        std::size_t target = n + m;
        double td = inf;
        for (std::size_t j = 0; j < m; ++j)
            if (demand[j] > eps && dist[n + j] < td) {
                td = dist[n + j];
                target = n + j;
            }
        if (target == n + m)
            throw StructuralError("transport: no augmenting path");
        for (std::size_t v = 0; v < n + m; ++v)
            if (dist[v] < inf)
                pot[v] += dist[v];

        double amount = demand[target - n];
        std::size_t v = target;
        while (prev[v] >= 0) {
            auto const u = static_cast<std::size_t>(prev[v]);
            if (u >= n)  // reverse edge column u -> row v
                amount = std::min(amount, f(v, u - n));
            v = u;
        }
        amount = std::min(amount, supply[v]);
        supply[v] -= amount;
        demand[target - n] -= amount;
        v = target;
        while (prev[v] >= 0) {
            auto const u = static_cast<std::size_t>(prev[v]);
            if (u < n)
                f(u, v - n) += amount;
            else
                f(v, u - n) -= amount;
            v = u;
        }
    }

    TransportPlan plan;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j)
            if (f(i, j) > eps) {
                plan.entries.push_back({i, j, f(i, j), c(i, j)});
                plan.value += f(i, j) * c(i, j);
            }
    return plan;
}

}  // namespace snse
