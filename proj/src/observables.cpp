#include "snse/observables.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "snse/error.hpp"

namespace snse {

double ObservableSpec::operator()(SpectralField const& xi) const
{
    switch (kind) {
    case ObservableKind::Constant:
        return value;
    case ObservableKind::ClippedEnergy:
        return std::min(norm_squared(xi), R * R);
    case ObservableKind::LowModeCoefficient:
        return xi.coeff(k0).real();
    case ObservableKind::SmoothedEnergy:
        return std::exp(-norm_squared(xi) / (R * R));
    }
    return 0.0;
}

std::string ObservableSpec::name() const
{
    std::ostringstream os;
    switch (kind) {
    case ObservableKind::Constant:
        os << "constant:" << value;
        break;
    case ObservableKind::ClippedEnergy:
        os << "clipped-energy:" << R;
        break;
    case ObservableKind::LowModeCoefficient:
        os << "low-mode:" << k0.kx << ',' << k0.ky;
        break;
    case ObservableKind::SmoothedEnergy:
        os << "smoothed-energy:" << R;
        break;
    }
    return os.str();
}

ObservableSpec constant_observable(double value)
{
    ObservableSpec o;
    o.kind = ObservableKind::Constant;
    o.value = value;
    o.lipschitz = 0.0;
    return o;
}

ObservableSpec clipped_energy(double R, DistanceParams const& dp)
{
    if (!(R > 0.0))
        throw ConfigError("observable", "clip radius must be positive");
    ObservableSpec o;
    o.kind = ObservableKind::ClippedEnergy;
    o.R = R;
    o.lipschitz = std::max(R * R, 2.0 * R * std::pow(dp.eps, 1.0 / dp.s));
    return o;
}

ObservableSpec smoothed_energy(double R, DistanceParams const& dp)
{
    if (!(R > 0.0))
        throw ConfigError("observable", "smoothing scale must be positive");
    ObservableSpec o;
    o.kind = ObservableKind::SmoothedEnergy;
    o.R = R;
    o.lipschitz = std::max(1.0, std::sqrt(2.0 / std::numbers::e) / R * std::pow(dp.eps, 1.0 / dp.s));
    return o;
}

ObservableSpec low_mode_coefficient(WaveVector k0, DistanceParams const& dp)
{
    if (k0.eigenvalue() == 0)
        throw ConfigError("observable", "low-mode wave vector must be nonzero");
    ObservableSpec o;
    o.kind = ObservableKind::LowModeCoefficient;
    o.k0 = k0;
    if (dp.alpha > 0.0) {
        double const c = 1.0 / (2.0 * std::numbers::sqrt2 * std::numbers::pi);
        o.lipschitz = c * std::max(2.0 / std::sqrt(2.0 * dp.alpha * std::numbers::e), std::pow(dp.eps, 1.0 / dp.s));
    }
    return o;
}

ObservableSpec parse_observable(std::string const& text, DistanceParams const& dp)
{
    auto const colon = text.find(':');
    std::string const head = text.substr(0, colon);
    std::string const arg = colon == std::string::npos ? "" : text.substr(colon + 1);
    try {
        if (head == "constant")
            return constant_observable(arg.empty() ? 1.0 : std::stod(arg));
        if (head == "clipped-energy")
            return clipped_energy(arg.empty() ? 1.0 : std::stod(arg), dp);
        if (head == "smoothed-energy")
            return smoothed_energy(arg.empty() ? 1.0 : std::stod(arg), dp);
        if (head == "low-mode") {
            if (arg.empty())
                return low_mode_coefficient({1, 0}, dp);
            auto const comma = arg.find(',');
            if (comma == std::string::npos)
                throw ConfigError("observables", "low-mode expects kx,ky");
            return low_mode_coefficient({std::stoi(arg.substr(0, comma)), std::stoi(arg.substr(comma + 1))}, dp);
        }
    } catch (std::logic_error const&) {
        throw ConfigError("observables", "cannot parse '" + text + "'");
    }
    throw ConfigError("observables", "unknown observable '" + text + "'");
}

}  // namespace snse
