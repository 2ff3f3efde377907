#include "transform.hpp"

#include <fftw3.h>

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>

namespace snse::detail {
namespace {

// The FFTW planner is not thread safe; plan creation and destruction are serialized.
std::mutex& planner_mutex()
{
    static std::mutex m;
    return m;
}

}  // namespace

Workspace::Workspace(GridSpec const& grid)
    : m_(grid.padded_resolution()), mc_(grid.padded_resolution() / 2 + 1)
{
    std::size_t const n_real = points();
    std::size_t const n_cplx = static_cast<std::size_t>(m_) * mc_;
    {
        std::lock_guard lock(planner_mutex());
        cbuf_ = fftw_malloc(sizeof(fftw_complex) * n_cplx);
        rbuf_ = static_cast<double*>(fftw_malloc(sizeof(double) * n_real));
        auto* c = static_cast<fftw_complex*>(cbuf_);
        c2r_ = fftw_plan_dft_c2r_2d(m_, m_, c, rbuf_, FFTW_ESTIMATE);
        r2c_ = fftw_plan_dft_r2c_2d(m_, m_, rbuf_, c, FFTW_ESTIMATE);
    }

    auto wrap = [this](int k) { return static_cast<std::size_t>(k >= 0 ? k : k + m_); };
    auto modes = grid.modes();
    pos_.resize(modes.size());
    mirror_.resize(modes.size(), -1);
    for (std::size_t i = 0; i < modes.size(); ++i) {
        auto const k = modes[i];
        pos_[i] = wrap(k.kx) * mc_ + static_cast<std::size_t>(k.ky);
        if (k.ky == 0)
            mirror_[i] = static_cast<std::ptrdiff_t>(wrap(-k.kx) * mc_);
    }
    coeff_scratch.resize(modes.size());
    real_scratch_a.resize(n_real);
    real_scratch_b.resize(n_real);
    real_scratch_c.resize(n_real);
}

Workspace::~Workspace()
{
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(static_cast<fftw_plan>(c2r_));
    fftw_destroy_plan(static_cast<fftw_plan>(r2c_));
    fftw_free(cbuf_);
    fftw_free(rbuf_);
}

void Workspace::synthesize(std::span<cplx const> half, double* out)
{
    auto* c = static_cast<fftw_complex*>(cbuf_);
    std::fill_n(&c[0][0], 2 * static_cast<std::size_t>(m_) * mc_, 0.0);
    for (std::size_t i = 0; i < half.size(); ++i) {
        c[pos_[i]][0] = half[i].real();
        c[pos_[i]][1] = half[i].imag();
        if (mirror_[i] >= 0) {
            c[mirror_[i]][0] = half[i].real();
            c[mirror_[i]][1] = -half[i].imag();
        }
    }
    fftw_execute(static_cast<fftw_plan>(c2r_));
    std::copy_n(rbuf_, points(), out);
}

void Workspace::analyze(double const* in, std::span<cplx> half)
{
    std::copy_n(in, points(), rbuf_);
    fftw_execute(static_cast<fftw_plan>(r2c_));
    auto const* c = static_cast<fftw_complex const*>(cbuf_);
    double const inv = 1.0 / static_cast<double>(points());
    for (std::size_t i = 0; i < half.size(); ++i)
        half[i] = cplx(c[pos_[i]][0] * inv, c[pos_[i]][1] * inv);
}

Workspace& workspace_for(GridSpec const& grid)
{
    thread_local std::map<int, std::unique_ptr<Workspace>> cache;
    auto& slot = cache[grid.cutoff()];
    if (!slot)
        slot = std::make_unique<Workspace>(grid);
    return *slot;
}

}  // namespace snse::detail
