#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace snse {

/// Base class for every error raised by the library.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Mismatched grids, wrong vector lengths, corrupt checkpoints.
class StructuralError : public Error
{
public:
    using Error::Error;
};

/// A field that is not (numerically) in the range of the forcing operator.
class RangeError : public Error
{
public:
    RangeError(std::string const& what, double residual)
        : Error(what), residual_(residual)
    {
    }
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

/// The implicit solve did not reach its tolerance within the iteration budget.
class SolverError : public Error
{
public:
    SolverError(std::string const& what, double residual, int iterations,
                std::int64_t step = -1)
        : Error(what), residual_(residual), iterations_(iterations), step_(step)
    {
    }
    double residual() const noexcept { return residual_; }
    int iterations() const noexcept { return iterations_; }
    std::int64_t step() const noexcept { return step_; }

private:
    double residual_;
    int iterations_;
    std::int64_t step_;
};

/// Problem too large for the exact transport solver.
class CapacityError : public Error
{
public:
    using Error::Error;
};

/// Invalid user configuration. `field()` names the offending key.
class ConfigError : public Error
{
public:
    ConfigError(std::string field, std::string const& what)
        : Error(field + ": " + what), field_(std::move(field))
    {
    }
    std::string const& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// Rate fit on degenerate input.
class FitError : public Error
{
public:
    using Error::Error;
};

}  // namespace snse
