#include "snse/fit.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <string>

#include "snse/error.hpp"

namespace snse {

LinearFit linear_fit(std::span<double const> x, std::span<double const> y)
{
    if (x.size() != y.size())
        throw FitError("fit: x and y lengths differ");
    std::size_t const n = x.size();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    if (n < 2)
        throw FitError("fit: need at least two points");
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (!(sxx > 0.0))
        throw FitError("fit: abscissae are degenerate");
    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double const e = y[i] - (f.intercept + f.slope * x[i]);
        ss_res += e * e;
    }
    f.r_squared = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
    return f;
}

RateFit fit_rate(std::span<double const> xs, std::span<double const> ys, FitOptions const& opt)
{
    if (xs.size() != ys.size())
        throw FitError("fit: x and y lengths differ");
    if (std::set<double>(xs.begin(), xs.end()).size() < 3)
        throw FitError("fit: need at least 3 distinct abscissae, got " +
                       std::to_string(std::set<double>(xs.begin(), xs.end()).size()));
    RateFit r;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if ((opt.log_x && !(xs[i] > 0.0)) || (opt.log_y && !(ys[i] > 0.0)))
            throw FitError("fit: non-positive value on a log axis");
        r.xs.push_back(opt.log_x ? std::log(xs[i]) : xs[i]);
        r.ys.push_back(opt.log_y ? std::log(ys[i]) : ys[i]);
    }
    auto const f = linear_fit(r.xs, r.ys);
    r.slope = f.slope;
    r.intercept = f.intercept;
    r.r_squared = f.r_squared;

    std::mt19937_64 rng(opt.seed);
    std::uniform_int_distribution<std::size_t> pick(0, xs.size() - 1);
    std::vector<double> slopes;
    std::vector<double> bx(xs.size()), by(xs.size());
    int const draws = std::max(opt.bootstrap, 200);
    for (int b = 0; b < draws; ++b) {
        for (std::size_t i = 0; i < xs.size(); ++i) {
            auto const k = pick(rng);
            bx[i] = r.xs[k];
            by[i] = r.ys[k];
        }
        if (std::all_of(bx.begin(), bx.end(), [&](double v) { return v == bx[0]; }))
            continue;
        slopes.push_back(linear_fit(bx, by).slope);
    }
    if (slopes.size() >= 2) {
        std::sort(slopes.begin(), slopes.end());
        double const tail = 0.5 * (1.0 - opt.confidence);
        auto q = [&](double p) {
            double const pos = p * static_cast<double>(slopes.size() - 1);
            auto const lo = static_cast<std::size_t>(std::floor(pos));
            auto const hi = std::min(lo + 1, slopes.size() - 1);
            return slopes[lo] + (pos - static_cast<double>(lo)) * (slopes[hi] - slopes[lo]);
        };
        r.ci_halfwidth = 0.5 * (q(1.0 - tail) - q(tail));
    }
    return r;
}

}  // namespace snse
