#include "snse/runner.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>

#include "snse/error.hpp"
#include "snse/field_io.hpp"
#include "snse/integrator.hpp"
#include "snse/parallel.hpp"

#ifndef SNSE_VERSION
#define SNSE_VERSION "dev"
#endif

namespace snse {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::vector<std::uint8_t> to_bytes(std::string const& s)
{
    return {s.begin(), s.end()};
}

std::mutex& log_mutex()
{
    static std::mutex m;
    return m;
}

void log_line(bool verbose, std::string const& line)
{
    if (!verbose)
        return;
    std::lock_guard lock(log_mutex());
    std::clog << "snse " << line << '\n';
}

json config_without_io(json tree)
{
    tree.erase("io");
    return tree;
}

fs::path default_out(RunConfig const& cfg)
{
    auto const dump = config_without_io(cfg.tree).dump();
    auto const bytes = to_bytes(cfg.kind + dump);
    return fs::path("snse-runs") / (cfg.kind + "-" + hex64(fnv1a64(bytes)).substr(0, 12));
}

json grid_convention(int cutoff)
{
    auto const g = GridSpec::make(cutoff);
    return {{"N", cutoff},
            {"meaning", "number of distinct eigenvalue shells |k|^2, ties included"},
            {"lambda_N", g->cutoff_eigenvalue()},
            {"lambda_N_plus_1", g->next_eigenvalue()},
            {"stored_modes", g->size()},
            {"real_dimension", g->dimension()},
            {"padded_resolution", g->padded_resolution()}};
}

struct Bundle
{
    StudyReport report;
    json checkpoints = json::array();
    json extra = json::object();
};

// simulate ----------------------------------------------------------------------------------------

Bundle run_simulate(RunConfig const& cfg, fs::path const& dir, bool verbose)
{
    auto const& t = cfg.tree;
    int const N = t["discretization"]["N"].get<int>();
    int const paths = t["experiment"]["paths"].get<int>();
    auto const steps = t["experiment"]["steps"].get<std::int64_t>();
    int const stride = t["reproducibility"]["record_stride"].get<int>();
    auto const every = t["io"]["checkpoint_every"].get<std::int64_t>();
    std::string const restart = t["experiment"]["restart"].get<std::string>();

    StudyCommon c;
    c.nu = t["physics"]["nu"].get<double>();
    c.forcing = cfg.forcing();
    c.seed = cfg.seed();
    c.solver = solver_policy_from_string(t["discretization"]["solver"].get<std::string>());
    c.delta0 = t["discretization"]["delta0"].get<double>();
    auto const p = c.scheme(N, t["discretization"]["delta"].get<double>());
    auto const grid = GridSpec::make(N);

    InitialSpec init;
    {
        auto const& j = t["experiment"]["initial"];
        init.kind = j["kind"];
        init.energy = j["energy"];
        init.exponent = j["exponent"];
        init.shells = j["shells"];
        init.norm_shells = j["norm_shells"];
        init.k = {j["k"][0].get<int>(), j["k"][1].get<int>()};
        init.amplitude = j["amplitude"];
        init.seed = j["seed"];
    }

    // Restart: each path continues from its latest checkpoint in a previous manifest.
    std::vector<SpectralField> starts(static_cast<std::size_t>(paths), make_initial(init, grid));
    std::vector<std::int64_t> first(static_cast<std::size_t>(paths), 0);
    if (!restart.empty()) {
        fs::path const mpath(restart);
        json prior;
        try {
            prior = json::parse(std::ifstream(mpath));
        } catch (json::exception const& e) {
            throw ConfigError("experiment.restart", "cannot parse manifest " + restart);
        }
        std::vector<bool> found(static_cast<std::size_t>(paths), false);
        for (auto const& cp : prior.value("checkpoints", json::array())) {
            auto const i = cp["path"].get<std::size_t>();
            if (i >= starts.size())
                continue;
            auto const step = cp["step"].get<std::int64_t>();
            if (!found[i] || step > first[i]) {
                starts[i] = restore(mpath.parent_path() / cp["file"].get<std::string>(), N);
                first[i] = step;
                found[i] = true;
            }
        }
        for (std::size_t i = 0; i < found.size(); ++i)
            if (!found[i])
                throw ConfigError("experiment.restart", "no checkpoint for path " + std::to_string(i));
    }

    struct PathOut
    {
        Trajectory traj;
        std::vector<std::pair<std::int64_t, SpectralField>> snaps;
    };
    auto outs = parallel_map(static_cast<std::size_t>(paths), cfg.threads(), [&](std::size_t i) {
        NoiseStream s{c.seed, i, 1, p.delta, c.forcing->dimension()};
        PathOut po;
        RecordOptions ro;
        ro.stride = stride;
        ro.first_step = first[i];
        ro.observer = [&](std::int64_t step, SpectralField const& x) {
            bool const last = step == first[i] + steps;
            if (step == first[i] || last || (every > 0 && step % every == 0))
                po.snaps.emplace_back(step, x);
            if (verbose && step > first[i])
                log_line(true, "traj=" + std::to_string(i) + " step=" + std::to_string(step) +
                                   " energy=" + std::to_string(norm_squared(x)));
        };
        po.traj = simulate(starts[i], steps, p, *c.forcing, s, ro);
        return po;
    });

    Bundle b;
    auto& rep = b.report;
    rep.kind = "simulate";
    for (std::size_t i = 0; i < outs.size(); ++i)
        for (auto const& [step, x] : outs[i].snaps) {
            auto const hash = checkpoint(dir, x);
            b.checkpoints.push_back({{"path", i}, {"step", step}, {"hash", hash},
                                     {"file", "checkpoints/" + hash + ".snsefld"}});
        }
    if (steps > 0) {
        CsvTable diag{"simulate_diagnostics", {"path", "step", "time", "energy", "enstrophy", "iterations"}, {}};
        CsvTable states{"simulate_states", {"path", "step", "time"}, {}};
        for (auto k : grid->modes()) {
            states.columns.push_back("re(" + std::to_string(k.kx) + ";" + std::to_string(k.ky) + ")");
            states.columns.push_back("im(" + std::to_string(k.kx) + ";" + std::to_string(k.ky) + ")");
        }
        for (std::size_t i = 0; i < outs.size(); ++i) {
            auto const& tr = outs[i].traj;
            for (std::size_t n = 0; n < tr.energy.size(); ++n) {
                auto const step = tr.first_step + static_cast<std::int64_t>(n);
                diag.rows.push_back({static_cast<double>(i), static_cast<double>(step), tr.time_of(step),
                                     tr.energy[n], tr.enstrophy[n],
                                     n == 0 ? 0.0 : static_cast<double>(tr.iterations[n - 1])});
            }
            for (std::size_t k = 0; k < tr.states.size(); ++k) {
                std::vector<double> row{static_cast<double>(i), static_cast<double>(tr.steps[k]),
                                        tr.time_of(tr.steps[k])};
                for (auto z : tr.states[k].coeffs()) {
                    row.push_back(z.real());
                    row.push_back(z.imag());
                }
                states.rows.push_back(std::move(row));
            }
        }
        rep.tables.push_back(std::move(diag));
        rep.tables.push_back(std::move(states));
    }
    rep.summary = {{"paths", paths}, {"steps", steps}, {"first_steps", first}, {"initial", init.to_json()}};
    b.extra["grid"] = grid_convention(N);
    return b;
}

// study dispatch ------------------------------------------------------------------------------------

Bundle run_study(RunConfig const& cfg)
{
    Bundle b;
    auto const& k = cfg.kind;
    if (k == "converge-time") {
        auto c = cfg.temporal();
        b.report = temporal_order_study(c).report;
        b.extra["grid"] = grid_convention(c.cutoff);
    } else if (k == "converge-space") {
        auto c = cfg.spatial();
        b.report = spatial_order_study(c).report;
        b.extra["grid"] = grid_convention(c.ref_cutoff);
    } else if (k == "holder") {
        auto c = cfg.holder();
        b.report = holder_study(c).report;
        b.extra["grid"] = grid_convention(c.cutoff);
    } else if (k == "contraction") {
        b.report = contraction_study(cfg.contraction()).report;
    } else if (k == "weak") {
        b.report = weak_error_study(cfg.weak()).report;
    } else if (k == "bias") {
        auto c = cfg.bias();
        b.report = stationary_bias_study(c).report;
        b.extra["grid"] = grid_convention(c.cutoff);
    } else if (k == "couple") {
        auto c = cfg.coupling();
        b.report = coupling_study(c).report;
        b.extra["grid"] = grid_convention(c.cutoff);
    } else if (k == "certify-metric") {
        b.report = certify_metric_study(cfg.certify()).report;
    } else {
        throw ConfigError("kind", "unknown experiment '" + k + "'");
    }
    return b;
}

}  // namespace

std::string code_version()
{
    return std::string("snse-lab ") + SNSE_VERSION;
}

std::string criterion_of(std::string const& id)
{
    static std::vector<std::pair<std::string, std::string>> const table{
        {"temporal.", "3"},          {"spatial.", "4"},          {"lyapunov.", "5"},
        {"couple.gap_ratio", "7"},   {"couple.log_factor", "7"}, {"couple.r2", "7"},
        {"couple.kl", "8"},          {"couple.replay", "8"},     {"contraction.ordering", "10"},
        {"contraction.", "9"},       {"certify.", "11"},         {"holder.", "12"},
        {"bias.", "13"},
    };
    for (auto const& [prefix, crit] : table)
        if (id.rfind(prefix, 0) == 0)
            return crit;
    return "";
}

std::string checkpoint(fs::path const& dir, SpectralField const& state)
{
    auto const bytes = encode_field(state);
    auto const hash = hex64(fnv1a64(bytes));
    auto const path = dir / "checkpoints" / (hash + ".snsefld");
    if (!fs::exists(path))
        write_bytes(path, bytes);
    return hash;
}

SpectralField restore(fs::path const& path, int expected_cutoff)
{
    return read_field(path, expected_cutoff);
}

RunOutcome run_experiment(RunConfig const& cfg, RunOptions const& opt)
{
    RunOutcome out;
    fs::path dir = opt.out;
    if (dir.empty()) {
        auto const io = cfg.tree["io"]["out"].get<std::string>();
        dir = io.empty() ? default_out(cfg) : fs::path(io);
    }
    out.dir = dir;
    fs::create_directories(dir);
    log_line(opt.verbose, "kind=" + cfg.kind + " out=" + dir.string() + " seed=" + std::to_string(cfg.seed()));

    Bundle b = cfg.kind == "simulate" ? run_simulate(cfg, dir, opt.verbose) : run_study(cfg);

    json artifacts = json::array();
    for (auto const& t : b.report.tables) {
        auto const csv = t.to_csv();
        auto const bytes = to_bytes(csv);
        write_bytes(dir / (t.name + ".csv"), bytes);
        artifacts.push_back({{"file", t.name + ".csv"}, {"fnv1a64", hex64(fnv1a64(bytes))}, {"bytes", bytes.size()}});
        log_line(opt.verbose, "wrote " + t.name + ".csv rows=" + std::to_string(t.rows.size()));
    }

    json summary = b.report.to_json();
    json criteria = json::object();
    for (auto const& c : b.report.checks) {
        auto const id = criterion_of(c.id);
        if (id.empty())
            continue;
        criteria[id] = criteria.value(id, true) && c.passed;
    }
    summary["criteria"] = criteria;
    summary["seed"] = cfg.seed();
    for (auto const& [key, value] : b.extra.items())
        summary[key] = value;
    write_bytes(dir / "summary.json", to_bytes(summary.dump(2) + "\n"));

    json manifest = {{"schema", "snse-lab/1"},
                     {"code_version", code_version()},
                     {"kind", cfg.kind},
                     {"config", cfg.tree},
                     {"seed", cfg.seed()},
                     {"artifacts", artifacts},
                     {"checkpoints", b.checkpoints},
                     {"checkpoint_format", "SNSEFLD1"}};
    write_bytes(dir / "manifest.json", to_bytes(manifest.dump(2) + "\n"));

    out.summary = std::move(summary);
    if (opt.enforce && !b.report.all_passed())
        out.exit_code = kExitAcceptance;
    return out;
}

RunOutcome replay_manifest(fs::path const& manifest_path, RunOptions const& opt, int threads)
{
    json manifest;
    {
        std::ifstream in(manifest_path);
        if (!in)
            throw ConfigError("manifest", "cannot read " + manifest_path.string());
        try {
            manifest = json::parse(in);
        } catch (json::exception const& e) {
            throw ConfigError("manifest", std::string("not valid JSON: ") + e.what());
        }
    }
    if (manifest.value("schema", "") != "snse-lab/1" || !manifest.contains("config") || !manifest.contains("kind"))
        throw ConfigError("manifest", "not an snse-lab/1 manifest");
    json config = manifest["config"];
    if (threads >= 0)
        config["io"]["threads"] = threads;
    auto const cfg = RunConfig::build(manifest["kind"].get<std::string>(), config);

    RunOptions ro = opt;
    ro.enforce = false;
    if (ro.out.empty())
        ro.out = manifest_path.parent_path() / "replay";
    auto outcome = run_experiment(cfg, ro);

    auto const src = manifest_path.parent_path();
    json report = json::array();
    bool all_match = true;
    for (auto const& a : manifest["artifacts"]) {
        auto const file = a["file"].get<std::string>();
        bool match = false;
        try {
            match = read_bytes(src / file) == read_bytes(outcome.dir / file);
        } catch (Error const&) {
            match = false;
        }
        all_match = all_match && match;
        report.push_back({{"file", file}, {"match", match}});
        log_line(opt.verbose || !match, std::string(match ? "match " : "MISMATCH ") + file);
    }
    outcome.summary = {{"replay_of", manifest_path.string()}, {"artifacts", report}, {"identical", all_match}};
    write_bytes(outcome.dir / "replay.json", to_bytes(outcome.summary.dump(2) + "\n"));
    outcome.exit_code = all_match ? kExitOk : kExitAcceptance;
    return outcome;
}

// CLI ----------------------------------------------------------------------------------------------

int cli_main(int argc, char** argv)
{
    CLI::App app{"Pseudospectral stochastic Navier-Stokes vorticity lab"};
    app.require_subcommand(1);
    app.set_version_flag("--version", code_version());

    struct Common
    {
        std::string config;
        std::optional<std::uint64_t> seed;
        std::optional<int> threads;
        bool enforce = false;
        std::string out;
        bool verbose = false;
        bool dry_run = false;
        std::vector<std::string> sets;
    };
    std::map<std::string, Common> opts;
    for (auto const& kind : experiment_kinds()) {
        auto* sub = app.add_subcommand(kind, "run the " + kind + " experiment");
        auto& o = opts[kind];
        sub->add_option("--config", o.config, "YAML config file");
        sub->add_option("--seed", o.seed, "master seed (overrides reproducibility.seed)");
        sub->add_option("--threads", o.threads, "worker threads (0: hardware concurrency)");
        sub->add_flag("--enforce", o.enforce, "exit 4 when an acceptance check fails");
        sub->add_option("--out", o.out, "output directory");
        sub->add_flag("-v,--verbose", o.verbose, "log progress and per-step diagnostics");
        sub->add_option("--set", o.sets, "override a config value, e.g. --set experiment.paths=32");
        sub->add_flag("--dry-run", o.dry_run, "print the effective config and exit");
    }
    std::string manifest, replay_out;
    int replay_threads = -1;
    bool replay_verbose = false;
    auto* rp = app.add_subcommand("replay", "rerun a manifest and compare CSV artifacts byte for byte");
    rp->add_option("manifest", manifest, "manifest.json of a previous run")->required();
    rp->add_option("--out", replay_out, "output directory (default: <run>/replay)");
    rp->add_option("--threads", replay_threads, "worker threads");
    rp->add_flag("-v,--verbose", replay_verbose, "log progress");

    try {
        app.parse(argc, argv);
    } catch (CLI::ParseError const& e) {
        int const rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (rp->parsed()) {
            RunOptions ro;
            ro.out = replay_out;
            ro.verbose = replay_verbose;
            auto const r = replay_manifest(manifest, ro, replay_threads);
            std::cout << (r.exit_code == kExitOk ? "replay: identical" : "replay: MISMATCH") << " (" << r.dir.string()
                      << ")\n";
            return r.exit_code;
        }
        for (auto const& kind : experiment_kinds()) {
            if (!app.got_subcommand(kind))
                continue;
            auto const& o = opts[kind];
            json user = o.config.empty() ? json::object() : load_config_file(o.config);
            if (user.is_null())
                user = json::object();
            if (o.seed)
                user["reproducibility"]["seed"] = *o.seed;
            if (o.threads)
                user["io"]["threads"] = *o.threads;
            for (auto const& s : o.sets)
                apply_override(user, s);
            auto const cfg = RunConfig::build(kind, user);
            if (o.dry_run) {
                std::cout << cfg.tree.dump(2) << '\n';
                return kExitOk;
            }
            RunOptions ro;
            ro.out = o.out;
            ro.enforce = o.enforce;
            ro.verbose = o.verbose;
            auto const r = run_experiment(cfg, ro);
            std::cout << kind << ": " << (r.summary.value("passed", true) ? "all checks passed" : "some checks failed")
                      << " (" << r.dir.string() << ")\n";
            for (auto const& c : r.summary["checks"])
                std::cout << "  " << (c["passed"].get<bool>() ? "pass " : "FAIL ") << c["id"].get<std::string>()
                          << " = " << c["value"].dump() << '\n';
            return r.exit_code;
        }
    } catch (ConfigError const& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (StructuralError const& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return kExitConfig;
    } catch (SolverError const& e) {
        std::cerr << "numerical error: " << e.what() << " (step " << e.step() << ", residual " << e.residual() << ")\n";
        return kExitNumerical;
    } catch (Error const& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return kExitNumerical;
    } catch (std::exception const& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumerical;
    }
    return kExitConfig;
}

}  // namespace snse
