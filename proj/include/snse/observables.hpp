#pragma once

#include <optional>
#include <string>

#include "snse/measures.hpp"
#include "snse/spectral_field.hpp"

namespace snse {

enum class ObservableKind
{
    Constant,
    ClippedEnergy,       ///< min(|xi|^2, R^2)
    LowModeCoefficient,  ///< Re xi_hat(k0)
    SmoothedEnergy,      ///< exp(-|xi|^2 / R^2)
};

/// A test function phi with an optional Lipschitz constant under rho_{eps,s,alpha}:
/// |phi(x) - phi(y)| <= L rho_{eps,s,alpha}(x, y).
struct ObservableSpec
{
    ObservableKind kind = ObservableKind::ClippedEnergy;
    double R = 1.0;
    WaveVector k0{1, 0};
    double value = 0.0;  ///< for Constant
    std::optional<double> lipschitz;

    double operator()(SpectralField const& xi) const;
    std::string name() const;
};

ObservableSpec constant_observable(double value);
/// L = max(R^2, 2 R eps^{1/s}).
ObservableSpec clipped_energy(double R, DistanceParams const& dp);
/// L = max(1, sqrt(2/e) eps^{1/s} / R).
ObservableSpec smoothed_energy(double R, DistanceParams const& dp);
/// With c = 1/(2 sqrt2 pi) >= |xi_hat(k)| / |xi|: L = c max(2/sqrt(2 alpha e), eps^{1/s});
/// no constant when alpha = 0 (the coefficient is unbounded).
ObservableSpec low_mode_coefficient(WaveVector k0, DistanceParams const& dp);

/// "clipped-energy:R", "smoothed-energy:R", "low-mode:kx,ky", "constant:v".
ObservableSpec parse_observable(std::string const& text, DistanceParams const& dp);

}  // namespace snse
