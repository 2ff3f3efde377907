#pragma once

#include <span>
#include <vector>

#include "snse/spectral_field.hpp"

namespace snse::detail {

/// FFT scratch for one grid. Instances are confined to one thread
/// (see workspace_for) so buffers are never shared mutably.
class Workspace
{
public:
    explicit Workspace(GridSpec const& grid);
    ~Workspace();
    Workspace(Workspace const&) = delete;
    Workspace& operator=(Workspace const&) = delete;

    int resolution() const noexcept { return m_; }
    std::size_t points() const noexcept { return static_cast<std::size_t>(m_) * m_; }

    /// Real values of sum_k c(k) e^{ik.x} on the M x M mesh (row-major, x fastest-outer).
    void synthesize(std::span<cplx const> half, double* out);
    /// Fourier coefficients of the active modes of a real M x M array.
    void analyze(double const* in, std::span<cplx> half);

    /// Per-thread coefficient scratch sized to the grid.
    std::vector<cplx> coeff_scratch;
    std::vector<double> real_scratch_a;
    std::vector<double> real_scratch_b;
    std::vector<double> real_scratch_c;

private:
    int m_;
    int mc_;
    void* cbuf_;
    double* rbuf_;
    void* c2r_;
    void* r2c_;
    std::vector<std::size_t> pos_;
    std::vector<std::ptrdiff_t> mirror_;
};

Workspace& workspace_for(GridSpec const& grid);

}  // namespace snse::detail
