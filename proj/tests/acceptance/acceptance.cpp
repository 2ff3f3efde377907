// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Studies run at their shipped defaults through the same config layer as the CLI.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <sstream>
#include <string>

#include "../unit/oracles.hpp"
#include "snse/config.hpp"
#include "snse/integrator.hpp"
#include "snse/runner.hpp"
#include "snse/studies.hpp"

using namespace snse;
namespace fs = std::filesystem;

namespace {

struct Verdict
{
    bool pass = false;
    std::string detail;
};

int failures = 0;

void criterion(int id, std::string const& title, std::function<Verdict()> const& body)
{
    auto const t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
        v = body();
    } catch (std::exception const& e) {
        v = {false, std::string("exception: ") + e.what()};
    }
    double const secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failures += !v.pass;
    std::printf("criterion %2d %s  %s  (%s; %.1f s)\n", id, v.pass ? "PASS" : "FAIL", title.c_str(), v.detail.c_str(),
                secs);
    std::fflush(stdout);
}

/// Every check of the report that maps to criterion `id`.
Verdict checks_for(StudyReport const& rep, std::string const& id, std::function<bool(Check const&)> keep = {})
{
    Verdict v{true, ""};
    int n = 0;
    std::ostringstream os;
    for (auto const& c : rep.checks) {
        if (criterion_of(c.id) != id || (keep && !keep(c)))
            continue;
        ++n;
        if (!c.passed) {
            v.pass = false;
            os << c.id << "=" << c.value << " not in [" << c.lo << ", " << c.hi << "] ";
        }
    }
    if (n == 0)
        return {false, "no checks evaluated"};
    v.detail = v.pass ? std::to_string(n) + " checks" : os.str();
    return v;
}

std::string fmt(char const* f, double a, double b = 0.0, double c = 0.0)
{
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

RunConfig config(std::string const& kind, nlohmann::json user = nlohmann::json::object())
{
    return RunConfig::build(kind, user);
}

std::string slurp(fs::path const& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

int main()
{
    std::printf("%s acceptance\n", code_version().c_str());

    criterion(1, "single-mode implicit step", [] {
        auto sigma = ForcingBasis::low_mode({0.0});
        double worst = 0.0;
        for (WaveVector k : {WaveVector{1, 0}, WaveVector{1, 1}, WaveVector{3, 4}})
            for (double delta : {0.1, 0.01}) {
                SchemeParams p;
                p.delta = delta;
                p.cutoff = shell_count_up_to(25);
                auto xi = SpectralField::mode(GridSpec::make(p.cutoff), k, cplx(0.7, -0.2));
                std::vector<double> dW{0.0};
                auto r = semi_implicit_step(xi, dW, p, sigma);
                auto expect = (1.0 / (1.0 + p.nu * delta * k.eigenvalue())) * xi;
                worst = std::max(worst, norm(r.xi - expect) / norm(expect));
            }
        return Verdict{worst <= 1e-12, fmt("max rel error %.3g", worst)};
    });

    criterion(2, "Galerkin advection and orthogonality", [] {
        std::mt19937_64 rng(2024);
        double conv = 0.0;
        for (int N = 1; N <= 6; ++N)
            for (int t = 0; t < 5; ++t) {
                auto g = GridSpec::make(N);
                auto a = oracle::random_field(g, rng), b = oracle::random_field(g, rng);
                auto ref = oracle::convolution_advect(a, b);
                conv = std::max(conv, norm(advect(a, b) - ref) / std::max(norm(ref), 1e-300));
            }
        double orth = 0.0;
        for (int t = 0; t < 100; ++t) {
            auto g = GridSpec::make(16);
            auto x = oracle::random_field(g, rng, 1.0, 1.0 + t);
            auto b = advect(x, x);
            orth = std::max(orth, std::abs(inner(b, x)) / (norm(b) * norm(x)));
        }
        return Verdict{conv <= 1e-12 && orth <= 1e-10, fmt("oracle rel %.3g, orthogonality rel %.3g", conv, orth)};
    });

    criterion(3, "temporal strong order", [] {
        auto r = temporal_order_study(config("converge-time").temporal());
        auto v = checks_for(r.report, "3");
        v.detail = fmt("slope %.4f, r2 %.5f", r.moment_fit.slope, r.moment_fit.r_squared) + "; " + v.detail;
        return v;
    });

    criterion(4, "spatial strong order", [] {
        auto r = spatial_order_study(config("converge-space").spatial());
        auto v = checks_for(r.report, "4");
        if (r.fit)
            v.detail = fmt("slope %.4f vs dim, r2 %.5f", r.fit->slope, r.fit->r_squared) + "; " + v.detail;
        return v;
    });

    criterion(5, "exponential Lyapunov bound", [] {
        LyapunovConfig c;
        auto rc = config("simulate");
        c.forcing = rc.forcing();
        c.threads = rc.threads();
        auto r = lyapunov_study(c);
        auto v = checks_for(r.report, "5");
        v.detail = fmt("alpha %.4g, %g of 20 seeds within bound", r.alpha, static_cast<double>(r.seeds_ok)) + "; " +
                   v.detail;
        return v;
    });

    criterion(6, "noise-free energy decay", [] {
        auto sigma = ForcingBasis::low_mode_shells(4, 0.0);
        InitialSpec init;
        init.energy = 100.0;
        double worst = -1e300;
        for (double delta : {0.1, 0.01}) {
            SchemeParams p;
            p.delta = delta;
            p.cutoff = 16;
            auto xi0 = make_initial(init, GridSpec::make(16));
            NoiseStream s{1, 0, 1, delta, sigma.dimension()};
            double const n0 = norm(xi0);
            RecordOptions ro;
            ro.stride = 0;
            ro.observer = [&](std::int64_t n, SpectralField const& x) {
                double const bound = n0 / std::pow(1.0 + p.nu * delta, static_cast<double>(n));
                worst = std::max(worst, (norm(x) - bound) / n0);
            };
            simulate(xi0, 1000, p, sigma, s, ro);
        }
        return Verdict{worst <= 1e-10, fmt("max (|xi_n| - bound)/|xi_0| = %.3g", worst)};
    });

    criterion(7, "nudged pathwise contraction", [] {
        auto c = config("couple", {{"nudge", {{"K", 8}}}, {"experiment", {{"record_shifts", false}}}}).coupling();
        auto r = coupling_study(c);
        auto v = checks_for(r.report, "7");
        double worst = 0.0;
        for (auto const& run : r.runs)
            worst = std::max(worst, run.final_ratio);
        v.detail = fmt("K 8, beta %.4g, worst gap ratio %.3g", r.beta, worst) + "; " + v.detail;
        return v;
    });

    criterion(8, "Girsanov cost shape", [] {
        auto r = coupling_study(config("couple").coupling());
        auto v = checks_for(r.report, "8");
        for (auto const& run : r.runs)
            if (!std::isfinite(run.kl_mean)) {
                v.pass = false;
                v.detail += " non-finite kl";
            }
        if (r.kl_fit)
            v.detail = fmt("kl slope %.4f", r.kl_fit->slope) + "; " + v.detail;
        return v;
    });

    criterion(9, "Wasserstein contraction uniformity", [] {
        auto r = contraction_study(config("contraction").contraction());
        auto v = checks_for(r.report, "9");
        double lo = 1e300, hi = 0.0;
        for (auto const& s : r.series) {
            lo = std::min(lo, s.C2);
            hi = std::max(hi, s.C2);
        }
        v.detail = fmt("C2 in [%.4f, %.4f], spread %.4f", lo, hi, r.spread) + "; " + v.detail;
        return v;
    });

    criterion(10, "exact W below coupled bound", [] {
        Verdict v{true, ""};
        for (std::uint64_t seed : {1, 2, 3}) {
            nlohmann::json u = {{"experiment", {{"paths", 32}, {"exact_max", 32}}}, {"reproducibility", {{"seed", seed}}}};
            auto r = contraction_study(config("contraction", u).contraction());
            for (auto const& s : r.series) {
                if (s.exact.size() != s.coupled.size())
                    return Verdict{false, "exact series missing"};
                for (std::size_t i = 0; i < s.exact.size(); ++i)
                    if (!(s.exact[i] <= s.coupled[i])) {
                        v.pass = false;
                        v.detail += fmt("seed %g t=%g: exact %.6g > coupled ", static_cast<double>(seed), s.times[i],
                                        s.exact[i]);
                    }
            }
        }
        if (v.pass)
            v.detail = "3 seeds x 9 grid points, every recorded time";
        return v;
    });

    criterion(11, "metric certification", [] {
        auto c = config("certify-metric").certify();
        c.triples = 10000;
        c.gamma = 2.0;
        auto r = certify_metric_study(c);
        auto v = checks_for(r.report, "11");
        v.detail = fmt("alpha %.4g, %g triangle and %g axiom violations", c.distance.alpha,
                       static_cast<double>(r.certificate.violations), static_cast<double>(r.metric_violations)) +
                   "; " + v.detail;
        return v;
    });

    criterion(12, "Hoelder exponent", [] {
        auto r = holder_study(config("holder").holder());
        auto v = checks_for(r.report, "12");
        v.detail = fmt("exponent %.4f", r.fit.slope) + "; " + v.detail;
        return v;
    });

    criterion(13, "stationary bias decay", [] {
        auto r = stationary_bias_study(config("bias").bias());
        auto v = checks_for(r.report, "13");
        v.detail = fmt("bias exponent %.4f, mse exponent %.4f", -r.bias_fit.slope, -r.mse_fit.slope) + "; " + v.detail;
        return v;
    });

    criterion(14, "replay and thread invariance", [] {
        auto root = fs::temp_directory_path() / "snse-acceptance-replay";
        fs::remove_all(root);
        std::vector<std::pair<std::string, nlohmann::json>> runs{
            {"simulate", {{"experiment", {{"paths", 8}, {"steps", 50}}}, {"io", {{"checkpoint_every", 25}}}}},
            {"weak", nlohmann::json::object()},
            {"couple", {{"experiment", {{"paths", 8}, {"horizon", 2.0}}}}},
        };
        std::ostringstream bad;
        std::size_t compared = 0;
        for (auto const& [kind, user] : runs) {
            std::vector<fs::path> dirs;
            for (int th : {1, 4, 8}) {
                auto u = user;
                u["io"]["threads"] = th;
                RunOptions o;
                o.out = root / (kind + "-" + std::to_string(th));
                auto res = run_experiment(config(kind, u), o);
                dirs.push_back(res.dir);
            }
            auto rep = replay_manifest(dirs[0] / "manifest.json", {}, 8);
            if (rep.exit_code != kExitOk)
                bad << kind << " replay mismatch; ";
            for (auto const& e : fs::directory_iterator(dirs[0])) {
                auto const ext = e.path().extension();
                if (ext != ".csv")
                    continue;
                auto const a = slurp(e.path());
                for (std::size_t i = 1; i < dirs.size(); ++i) {
                    ++compared;
                    if (slurp(dirs[i] / e.path().filename()) != a)
                        bad << kind << "/" << e.path().filename().string() << " differs at threads index " << i
                            << "; ";
                }
            }
            // checkpoints are content addressed, so equal file sets mean equal states
            if (fs::exists(dirs[0] / "checkpoints"))
                for (auto const& e : fs::directory_iterator(dirs[0] / "checkpoints"))
                    for (std::size_t i = 1; i < dirs.size(); ++i)
                        if (!fs::exists(dirs[i] / "checkpoints" / e.path().filename()))
                            bad << kind << " checkpoint " << e.path().filename().string() << " missing; ";
        }
        fs::remove_all(root);
        auto const msg = bad.str();
        return Verdict{msg.empty() && compared > 0,
                       msg.empty() ? std::to_string(compared) + " CSV comparisons identical, replays identical" : msg};
    });

    std::printf("%s: %d criteria failed\n", failures ? "FAIL" : "PASS", failures);
    return failures ? 1 : 0;
}
