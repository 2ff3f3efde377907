#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace snse {

struct LinearFit
{
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

/// Ordinary least squares y = a + b x. FitError with fewer than two distinct x.
LinearFit linear_fit(std::span<double const> x, std::span<double const> y);

struct FitOptions
{
    std::uint64_t seed = 1;
    int bootstrap = 400;       ///< resamples (at least 200 are always drawn)
    double confidence = 0.95;
    bool log_x = true;
    bool log_y = true;
};

/// Power-law (or semi-log) rate fit with a pairs-bootstrap half-width.
struct RateFit
{
    std::vector<double> xs;  ///< transformed abscissae used in the fit
    std::vector<double> ys;
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    double ci_halfwidth = 0.0;
};

/// Needs >= 3 distinct xs (FitError otherwise); log-transformed values must be positive.
RateFit fit_rate(std::span<double const> xs, std::span<double const> ys, FitOptions const& opt = {});

}  // namespace snse
