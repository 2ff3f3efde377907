#include "snse/config.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "snse/coupling.hpp"
#include "snse/error.hpp"
#include "snse/parallel.hpp"

namespace snse {

using json = nlohmann::json;

namespace {

// YAML -> json ------------------------------------------------------------------------------

json scalar_to_json(YAML::Node const& n)
{
    std::string const s = n.Scalar();
    if (n.Tag() == "!")  // quoted
        return s;
    if (s == "true" || s == "True" || s == "TRUE")
        return true;
    if (s == "false" || s == "False" || s == "FALSE")
        return false;
    if (s == "null" || s == "~" || s.empty())
        return nullptr;
    {
        std::istringstream is(s);
        long long v;
        if (is >> v && is.eof())
            return v;
    }
    {
        std::istringstream is(s);
        double v;
        if (is >> v && is.eof())
            return v;
    }
    return s;
}

json yaml_to_json(YAML::Node const& n)
{
    switch (n.Type()) {
    case YAML::NodeType::Map: {
        json j = json::object();
        for (auto const& kv : n)
            j[kv.first.as<std::string>()] = yaml_to_json(kv.second);
        return j;
    }
    case YAML::NodeType::Sequence: {
        json j = json::array();
        for (auto const& v : n)
            j.push_back(yaml_to_json(v));
        return j;
    }
    case YAML::NodeType::Scalar:
        return scalar_to_json(n);
    default:
        return nullptr;
    }
}

// Merging --------------------------------------------------------------------------------------

std::string join(std::string const& prefix, std::string const& key)
{
    return prefix.empty() ? key : prefix + "." + key;
}

char const* type_name(json const& j)
{
    if (j.is_boolean())
        return "a boolean";
    if (j.is_number())
        return "a number";
    if (j.is_string())
        return "a string";
    if (j.is_array())
        return "a list";
    if (j.is_object())
        return "a table";
    return "null";
}

void merge_into(json& base, json const& user, std::string const& prefix)
{
    if (!user.is_object())
        throw ConfigError(prefix.empty() ? "config" : prefix, "expected a table");
    for (auto const& [key, value] : user.items()) {
        std::string const path = join(prefix, key);
        if (!base.contains(key))
            throw ConfigError(path, "unknown key");
        json& slot = base[key];
        if (slot.is_object()) {
            merge_into(slot, value, path);
            continue;
        }
        bool ok = slot.is_null() || value.is_null() ? true
                  : slot.is_number()                ? value.is_number()
                  : slot.is_boolean()               ? value.is_boolean()
                  : slot.is_array()                 ? value.is_array()
                  : slot.is_string()                ? value.is_string()
                                                    : false;
        // "auto" leaves accept numbers, numeric leaves accept "auto" where the default was "auto"
        if (!ok && slot.is_string() && slot.get<std::string>() == "auto" && value.is_number())
            ok = true;
        if (!ok)
            throw ConfigError(path, std::string("expected ") + type_name(slot) + ", got " + type_name(value));
        if (slot.is_number_float() && value.is_number_integer())
            slot = value.get<double>();
        else
            slot = value;
    }
}

// Typed access -------------------------------------------------------------------------------------

json const& at(json const& tree, std::string const& path)
{
    json const* cur = &tree;
    std::size_t pos = 0;
    while (pos <= path.size()) {
        auto const dot = path.find('.', pos);
        std::string const key = path.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
        if (!cur->is_object() || !cur->contains(key))
            throw ConfigError(path, "missing");
        cur = &(*cur)[key];
        if (dot == std::string::npos)
            break;
        pos = dot + 1;
    }
    return *cur;
}

json& at_mut(json& tree, std::string const& path)
{
    return const_cast<json&>(at(tree, path));
}

double num(json const& t, std::string const& path)
{
    auto const& j = at(t, path);
    if (!j.is_number())
        throw ConfigError(path, "expected a number");
    double const v = j.get<double>();
    if (!std::isfinite(v))
        throw ConfigError(path, "must be finite");
    return v;
}

double positive(json const& t, std::string const& path)
{
    double const v = num(t, path);
    if (!(v > 0.0))
        throw ConfigError(path, "must be positive");
    return v;
}

long long integer(json const& t, std::string const& path)
{
    auto const& j = at(t, path);
    if (j.is_number_integer())
        return j.get<long long>();
    if (j.is_number_float()) {
        double const v = j.get<double>();
        if (std::floor(v) == v && std::abs(v) < 9e15)
            return static_cast<long long>(v);
    }
    throw ConfigError(path, "expected an integer");
}

int count(json const& t, std::string const& path, long long lo = 1)
{
    auto const v = integer(t, path);
    if (v < lo || v > 1'000'000'000)
        throw ConfigError(path, "must be >= " + std::to_string(lo));
    return static_cast<int>(v);
}

bool flag(json const& t, std::string const& path)
{
    auto const& j = at(t, path);
    if (!j.is_boolean())
        throw ConfigError(path, "expected a boolean");
    return j.get<bool>();
}

std::string text(json const& t, std::string const& path)
{
    auto const& j = at(t, path);
    if (!j.is_string())
        throw ConfigError(path, "expected a string");
    return j.get<std::string>();
}

std::vector<double> numbers(json const& t, std::string const& path)
{
    auto const& j = at(t, path);
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number())
            throw ConfigError(path + "[" + std::to_string(i) + "]", "expected a number");
        out.push_back(j[i].get<double>());
    }
    return out;
}

std::vector<int> integers(json const& t, std::string const& path)
{
    auto const& j = at(t, path);
    std::vector<int> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number_integer())
            throw ConfigError(path + "[" + std::to_string(i) + "]", "expected an integer");
        out.push_back(j[i].get<int>());
    }
    return out;
}

std::pair<double, double> band(json const& t, std::string const& path)
{
    auto const v = numbers(t, path);
    if (v.size() != 2 || !(v[0] <= v[1]))
        throw ConfigError(path, "expected [lo, hi] with lo <= hi");
    return {v[0], v[1]};
}

Theta theta_of(json const& j, std::string const& path)
{
    if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number())
        throw ConfigError(path, "expected [N, delta]");
    Theta t{j[0].get<int>(), j[1].get<double>()};
    if (t.cutoff < 1)
        throw ConfigError(path, "N must be >= 1");
    if (!(t.delta > 0.0))
        throw ConfigError(path, "delta must be positive");
    return t;
}

std::vector<Theta> thetas(json const& t, std::string const& path)
{
    auto const& j = at(t, path);
    std::vector<Theta> out;
    for (std::size_t i = 0; i < j.size(); ++i)
        out.push_back(theta_of(j[i], path + "[" + std::to_string(i) + "]"));
    if (out.empty())
        throw ConfigError(path, "empty grid");
    return out;
}

json theta_json(Theta const& t)
{
    return json::array({t.cutoff, t.delta});
}

json initial_json(InitialSpec const& s)
{
    return {{"kind", s.kind},     {"energy", s.energy},           {"exponent", s.exponent},
            {"shells", s.shells}, {"norm_shells", s.norm_shells}, {"k", json::array({s.k.kx, s.k.ky})},
            {"amplitude", s.amplitude}, {"seed", s.seed}};
}

InitialSpec initial_of(json const& t, std::string const& path)
{
    InitialSpec s;
    s.kind = text(t, path + ".kind");
    if (s.kind != "zero" && s.kind != "mode" && s.kind != "power-law" && s.kind != "low-modes")
        throw ConfigError(path + ".kind", "expected zero, mode, power-law or low-modes");
    s.energy = num(t, path + ".energy");
    if (s.energy < 0.0)
        throw ConfigError(path + ".energy", "must be non-negative");
    s.exponent = num(t, path + ".exponent");
    s.shells = count(t, path + ".shells");
    s.norm_shells = count(t, path + ".norm_shells");
    auto const k = integers(t, path + ".k");
    if (k.size() != 2)
        throw ConfigError(path + ".k", "expected [kx, ky]");
    s.k = {k[0], k[1]};
    s.amplitude = num(t, path + ".amplitude");
    s.seed = static_cast<std::uint64_t>(integer(t, path + ".seed"));
    return s;
}

json distance_json(DistanceParams const& d)
{
    return {{"eps", d.eps}, {"s", d.s}, {"alpha", "auto"}};
}

DistanceParams distance_of(json const& t, std::string const& path)
{
    DistanceParams d;
    d.eps = num(t, path + ".eps");
    d.s = num(t, path + ".s");
    d.alpha = num(t, path + ".alpha");
    try {
        d.validate();
    } catch (ConfigError const& e) {
        auto const f = e.field();
        throw ConfigError(path + "." + f.substr(f.rfind('.') + 1), "out of range");
    }
    return d;
}

SolverPolicy solver_of(json const& t)
{
    try {
        return solver_policy_from_string(text(t, "discretization.solver"));
    } catch (ConfigError const&) {
        throw ConfigError("discretization.solver", "expected fixed-point, krylov or auto");
    }
}

/// The largest step must be an integer multiple of every other one.
void check_ladder_ratio(std::vector<double> const& deltas, std::string const& path)
{
    double const dmax = *std::max_element(deltas.begin(), deltas.end());
    for (double d : deltas) {
        double const r = dmax / d;
        if (std::abs(r - std::round(r)) > 1e-9 * r)
            throw ConfigError(path, "every step must divide the largest step " + std::to_string(dmax));
    }
}

void check_multiple(double total, double step, std::string const& path, std::string const& what)
{
    double const r = total / step;
    if (!(r >= 1.0 - 1e-9) || std::abs(r - std::round(r)) > 1e-9 * r)
        throw ConfigError(path, "must be an integer multiple of " + what + " (" + std::to_string(step) + ")");
}

void check_scheme(StudyCommon const& c, int N, double delta, double delta0_default, std::string const& path)
{
    auto p = c.scheme(N, delta);
    if (p.delta0 <= 0.0)
        p.delta0 = delta0_default;
    try {
        p.validate();
    } catch (ConfigError const& e) {
        throw ConfigError(path, e.what());
    }
}

}  // namespace

std::vector<std::string> const& experiment_kinds()
{
    static std::vector<std::string> const k{"simulate", "converge-time", "converge-space", "holder", "contraction",
                                            "weak",     "bias",          "couple",         "certify-metric"};
    return k;
}

// Defaults ----------------------------------------------------------------------------------------------

RunConfig RunConfig::defaults(std::string const& kind)
{
    if (std::find(experiment_kinds().begin(), experiment_kinds().end(), kind) == experiment_kinds().end())
        throw ConfigError("kind", "unknown experiment '" + kind + "'");
    RunConfig rc;
    rc.kind = kind;
    json t;
    t["physics"] = {{"nu", 1.0},
                    {"forcing",
                     {{"preset", "low-mode"},
                      {"shells", 4},
                      {"norm_sq", 0.5},
                      {"d", 0},
                      {"amplitudes", json::array()},
                      {"directions", json::array()}}}};
    t["discretization"] = {{"delta0", 0.0}, {"solver", "auto"}};
    t["experiment"] = json::object();
    t["reproducibility"] = {{"seed", 1}, {"record_stride", 1}};
    t["io"] = {{"out", ""}, {"threads", 0}, {"checkpoint_every", 0}};
    auto& d = t["discretization"];
    auto& e = t["experiment"];

    if (kind == "simulate") {
        d["N"] = 16;
        d["delta"] = 0.01;
        InitialSpec init;
        e = {{"steps", 100}, {"paths", 1}, {"initial", initial_json(init)}, {"restart", ""}};
    } else if (kind == "converge-time") {
        TemporalConfig c;
        d["N"] = c.cutoff;
        d["deltas"] = c.deltas;
        d["ref_factor"] = c.ref_factor;
        e = {{"horizon", c.horizon},
             {"paths", c.paths},
             {"p", c.p},
             {"initial", initial_json(c.initial)},
             {"slope_band", {c.slope_lo, c.slope_hi}},
             {"min_r2", c.min_r2}};
    } else if (kind == "converge-space") {
        SpatialConfig c;
        d["N_ladder"] = c.cutoffs;
        d["N_ref"] = c.ref_cutoff;
        d["delta"] = c.delta;
        e = {{"horizon", c.horizon},
             {"paths", c.paths},
             {"advection", c.advection},
             {"initial", initial_json(c.initial)},
             {"slope_band", {c.slope_lo, c.slope_hi}},
             {"min_r2", c.min_r2}};
    } else if (kind == "holder") {
        HolderConfig c;
        d["N"] = c.cutoff;
        d["delta"] = c.delta;
        e = {{"burn_in", c.burn_in},
             {"window", c.window},
             {"lags", json::array()},
             {"m", c.m},
             {"paths", c.paths},
             {"initial", initial_json(c.initial)},
             {"slope_band", {c.slope_lo, c.slope_hi}}};
    } else if (kind == "contraction") {
        ContractionConfig c;
        auto g = json::array();
        for (double dl : {0.02, 0.01, 0.005})
            for (int N : {3, 4, 5})
                g.push_back(theta_json({N, dl}));
        d["grid"] = g;
        e = {{"horizon", c.horizon},
             {"record_every", c.record_every},
             {"fit_from", c.fit_from},
             {"paths", c.paths},
             {"exact_max", c.exact_max},
             {"distance", distance_json(c.distance)},
             {"cost", "rho-weighted"},
             {"initial", initial_json(c.initial)},
             {"gap", c.gap},
             {"gap_shells", c.gap_shells},
             {"advection", c.advection},
             {"max_spread", c.max_spread},
             {"min_r2", c.min_r2}};
    } else if (kind == "weak") {
        WeakConfig c;
        d["grid"] = json::array({theta_json({4, 0.02}), theta_json({8, 0.01}), theta_json({12, 0.005})});
        d["reference"] = theta_json(c.reference);
        e = {{"observables", json::array({"clipped-energy:1", "smoothed-energy:1", "low-mode:1,0"})},
             {"horizon", c.horizon},
             {"record_every", c.record_every},
             {"paths", c.paths},
             {"initial", initial_json(c.initial)},
             {"distance", distance_json(c.distance)},
             {"require_lipschitz", c.require_lipschitz},
             {"g_p", c.g_p},
             {"g_beta", c.g_beta}};
    } else if (kind == "bias") {
        BiasConfig c;
        d["N"] = c.cutoff;
        d["delta"] = c.delta;
        e = {{"observable", "clipped-energy:1"},
             {"proxy_time", c.proxy_time},
             {"burn_in", c.burn_in},
             {"run_times", c.run_times},
             {"replicas", c.replicas},
             {"initial", initial_json(c.initial)},
             {"distance", distance_json(DistanceParams{})},
             {"exponent_band", {c.exponent_lo, c.exponent_hi}}};
    } else if (kind == "couple") {
        CouplingConfig c;
        d["N"] = c.cutoff;
        d["delta"] = c.delta;
        e = {{"horizon", c.horizon},
             {"paths", c.paths},
             {"perturbations", c.perturbations},
             {"perturbation_shell", c.perturbation_shell},
             {"record_shifts", c.record_shifts},
             {"initial", initial_json(c.initial)}};
        t["nudge"] = {{"K", c.K},
                      {"beta", "auto"},
                      {"nondegeneracy_margin", c.nondegeneracy_margin},
                      {"enforce_condition", c.enforce_beta_condition},
                      {"band", c.band}};
    } else if (kind == "certify-metric") {
        CertifyConfig c;
        d["N"] = c.cutoff;
        e = {{"distance", distance_json(c.distance)}, {"gamma", c.gamma}, {"triples", c.triples}};
    }
    rc.tree = std::move(t);
    return rc;
}

// Build + validation ---------------------------------------------------------------------------------

RunConfig RunConfig::build(std::string const& kind, json const& user)
{
    RunConfig rc = defaults(kind);
    if (!user.is_null())
        merge_into(rc.tree, user, "");
    auto& t = rc.tree;

    positive(t, "physics.nu");
    auto const sigma = rc.forcing();

    // "auto" resolution
    if (t["experiment"].contains("distance")) {
        auto& a = at_mut(t, "experiment.distance.alpha");
        if (a.is_string()) {
            if (a.get<std::string>() != "auto")
                throw ConfigError("experiment.distance.alpha", "expected a number or \"auto\"");
            a = num(t, "physics.nu") / (8.0 * sigma->trace_l2());
        }
    }
    if (t.contains("nudge")) {
        auto& b = at_mut(t, "nudge.beta");
        if (b.is_string()) {
            if (b.get<std::string>() != "auto")
                throw ConfigError("nudge.beta", "expected a number or \"auto\"");
            b = num(t, "physics.nu") * GridSpec::make(count(t, "nudge.K"))->next_eigenvalue() / 2.0;
        }
    }

    num(t, "discretization.delta0");
    solver_of(t);
    integer(t, "reproducibility.seed");
    count(t, "reproducibility.record_stride", 0);
    count(t, "io.threads", 0);
    count(t, "io.checkpoint_every", 0);
    text(t, "io.out");

    // Kind-specific checks with config paths, so that nothing fails mid-run.
    if (kind == "simulate") {
        StudyCommon c;
        c.nu = num(t, "physics.nu");
        c.forcing = sigma;
        c.delta0 = num(t, "discretization.delta0");
        count(t, "experiment.steps", 0);
        count(t, "experiment.paths");
        initial_of(t, "experiment.initial");
        text(t, "experiment.restart");
        check_scheme(c, count(t, "discretization.N"), positive(t, "discretization.delta"), 0.0, "discretization.delta");
    } else if (kind == "converge-time") {
        auto c = rc.temporal();
        if (c.deltas.size() < 4)
            throw ConfigError("discretization.deltas", "need at least 4 rungs");
        for (double dl : c.deltas)
            if (!(dl > 0.0))
                throw ConfigError("discretization.deltas", "steps must be positive");
        std::set<double> uniq(c.deltas.begin(), c.deltas.end());
        if (uniq.size() != c.deltas.size())
            throw ConfigError("discretization.deltas", "steps must be distinct");
        check_ladder_ratio(c.deltas, "discretization.deltas");
        double const dmax = *std::max_element(c.deltas.begin(), c.deltas.end());
        check_multiple(c.horizon, dmax, "experiment.horizon", "the largest step");
        double const dmin = *std::min_element(c.deltas.begin(), c.deltas.end());
        check_scheme(c, c.cutoff, dmax, dmax, "discretization.deltas");
        check_scheme(c, c.cutoff, dmin / c.ref_factor, dmax, "discretization.ref_factor");
    } else if (kind == "converge-space") {
        auto c = rc.spatial();
        if (c.cutoffs.size() < 3)
            throw ConfigError("discretization.N_ladder", "need at least 3 rungs");
        for (std::size_t i = 1; i < c.cutoffs.size(); ++i)
            if (c.cutoffs[i] <= c.cutoffs[i - 1])
                throw ConfigError("discretization.N_ladder", "ladder must be strictly increasing");
        if (c.cutoffs.front() < 1)
            throw ConfigError("discretization.N_ladder", "cutoffs must be >= 1");
        if (c.ref_cutoff <= c.cutoffs.back())
            throw ConfigError("discretization.N_ref", "reference cutoff must be strictly largest");
        check_multiple(c.horizon, c.delta, "experiment.horizon", "delta");
        check_scheme(c, c.ref_cutoff, c.delta, c.delta, "discretization.delta");
    } else if (kind == "holder") {
        auto c = rc.holder();
        check_scheme(c, c.cutoff, c.delta, c.delta, "discretization.delta");
        if (c.burn_in > 0.0)
            check_multiple(c.burn_in, c.delta, "experiment.burn_in", "delta");
        check_multiple(c.window, c.delta, "experiment.window", "delta");
        for (double l : c.lags)
            if (std::llround(l / c.delta) < 1)
                throw ConfigError("experiment.lags", "lag " + std::to_string(l) + " is inside one step");
        double const lmax = c.lags.empty() ? 200 * c.delta : *std::max_element(c.lags.begin(), c.lags.end());
        if (lmax >= c.window)
            throw ConfigError("experiment.lags", "largest lag must be shorter than the window");
        if (!(c.m > 0.0))
            throw ConfigError("experiment.m", "must be positive");
    } else if (kind == "contraction" || kind == "weak") {
        std::vector<Theta> g = thetas(t, "discretization.grid");
        double every = positive(t, "experiment.record_every");
        double horizon = positive(t, "experiment.horizon");
        if (kind == "weak")
            g.push_back(theta_of(at(t, "discretization.reference"), "discretization.reference"));
        std::vector<double> ds;
        for (auto const& th : g)
            ds.push_back(th.delta);
        check_ladder_ratio(ds, "discretization.grid");
        check_multiple(horizon, every, "experiment.horizon", "record_every");
        for (auto const& th : g)
            check_multiple(every, th.delta, "experiment.record_every", "every grid step");
        StudyCommon c;
        c.nu = num(t, "physics.nu");
        c.forcing = sigma;
        c.delta0 = num(t, "discretization.delta0");
        double const dmax = *std::max_element(ds.begin(), ds.end());
        for (auto const& th : g)
            check_scheme(c, th.cutoff, th.delta, dmax, "discretization.grid");
        if (kind == "contraction") {
            auto cc = rc.contraction();
            int nmin = g.front().cutoff;
            for (auto const& th : g)
                nmin = std::min(nmin, th.cutoff);
            if (cc.gap_shells > nmin)
                throw ConfigError("experiment.gap_shells", "perturbation must be resolved by every cutoff");
        } else {
            auto w = rc.weak();
            if (w.observables.empty())
                throw ConfigError("experiment.observables", "no observables");
            if (w.require_lipschitz)
                for (auto const& o : w.observables)
                    if (!o.lipschitz)
                        throw ConfigError("experiment.observables",
                                          "observable '" + o.name() + "' has no declared Lipschitz constant");
        }
    } else if (kind == "bias") {
        auto c = rc.bias();
        check_scheme(c, c.cutoff, c.delta, c.delta, "discretization.delta");
        if (!(c.burn_in < c.proxy_time))
            throw ConfigError("experiment.burn_in", "burn-in must be shorter than the proxy run");
        check_multiple(c.proxy_time, c.delta, "experiment.proxy_time", "delta");
        if (c.burn_in > 0.0)
            check_multiple(c.burn_in, c.delta, "experiment.burn_in", "delta");
        if (c.run_times.size() < 3)
            throw ConfigError("experiment.run_times", "need at least 3 run lengths");
        for (std::size_t i = 0; i < c.run_times.size(); ++i) {
            check_multiple(c.run_times[i], c.delta, "experiment.run_times", "delta");
            if (i && c.run_times[i] <= c.run_times[i - 1])
                throw ConfigError("experiment.run_times", "must be strictly increasing");
        }
        if (c.replicas < 2)
            throw ConfigError("experiment.replicas", "need at least 2 replicas");
        if ((c.proxy_time - c.burn_in) / c.delta < c.replicas)
            throw ConfigError("experiment.replicas", "more replicas than post-burn-in proxy steps");
    } else if (kind == "couple") {
        auto c = rc.coupling();
        check_scheme(c, c.cutoff, c.delta, c.delta, "discretization.delta");
        check_multiple(c.horizon, c.delta, "experiment.horizon", "delta");
        if (c.perturbations.empty())
            throw ConfigError("experiment.perturbations", "no perturbation sizes");
        for (double a : c.perturbations)
            if (!(a > 0.0))
                throw ConfigError("experiment.perturbations", "sizes must be positive");
        if (c.K > c.cutoff)
            throw ConfigError("nudge.K", "controlled shells exceed the cutoff");
        if (c.perturbation_shell > c.cutoff)
            throw ConfigError("experiment.perturbation_shell", "outside the grid");
        NudgeParams np;
        np.K = c.K;
        np.beta = c.beta;
        np.base = c.scheme(c.cutoff, c.delta);
        np.enforce_beta_condition = c.enforce_beta_condition;
        np.validate();
        if (c.record_shifts && !sigma->check_nondegeneracy(c.K).range_satisfied)
            throw ConfigError("nudge.K", "forcing does not cover Pi_K; set experiment.record_shifts = false or lower K");
    } else if (kind == "certify-metric") {
        auto c = rc.certify();
        if (!(c.gamma > 1.0))
            throw ConfigError("experiment.gamma", "must exceed 1");
    }
    return rc;
}

std::uint64_t RunConfig::seed() const
{
    return static_cast<std::uint64_t>(integer(tree, "reproducibility.seed"));
}

unsigned RunConfig::threads() const
{
    auto const n = count(tree, "io.threads", 0);
    return n == 0 ? default_threads() : static_cast<unsigned>(n);
}

std::shared_ptr<ForcingBasis const> RunConfig::forcing() const
{
    auto const& f = at(tree, "physics.forcing");
    std::string const preset = text(tree, "physics.forcing.preset");
    if (preset == "low-mode") {
        auto amps = numbers(tree, "physics.forcing.amplitudes");
        auto const d = count(tree, "physics.forcing.d", 0);
        if (amps.empty() && d == 0) {
            int const shells = count(tree, "physics.forcing.shells");
            double const nsq = num(tree, "physics.forcing.norm_sq");
            if (nsq < 0.0)
                throw ConfigError("physics.forcing.norm_sq", "must be non-negative");
            return std::make_shared<ForcingBasis const>(ForcingBasis::low_mode_shells(shells, nsq));
        }
        if (amps.size() == 1 && d > 1)
            amps.assign(static_cast<std::size_t>(d), amps[0]);
        if (d > 0 && amps.size() != static_cast<std::size_t>(d))
            throw ConfigError("physics.forcing.amplitudes", "expected d = " + std::to_string(d) + " amplitudes");
        if (amps.empty())
            throw ConfigError("physics.forcing.amplitudes", "empty");
        return std::make_shared<ForcingBasis const>(ForcingBasis::low_mode(amps));
    }
    if (preset == "explicit") {
        // directions: list of lists of [kx, ky, re, im]
        auto const& dirs = f["directions"];
        if (dirs.empty())
            throw ConfigError("physics.forcing.directions", "empty");
        int lam_max = 0;
        for (auto const& dir : dirs)
            for (auto const& e : dir) {
                if (!e.is_array() || e.size() != 4 || !e[0].is_number_integer() || !e[1].is_number_integer())
                    throw ConfigError("physics.forcing.directions", "entries must be [kx, ky, re, im]");
                int const kx = e[0].get<int>(), ky = e[1].get<int>();
                lam_max = std::max(lam_max, kx * kx + ky * ky);
            }
        if (lam_max == 0)
            throw ConfigError("physics.forcing.directions", "the zero mode cannot be forced");
        int shells = 1;
        while (shell_eigenvalue(shells) < lam_max)
            ++shells;
        auto const grid = GridSpec::make(shells);
        std::vector<SpectralField> fields;
        for (std::size_t i = 0; i < dirs.size(); ++i) {
            SpectralField s(grid);
            for (auto const& e : dirs[i]) {
                WaveVector const k{e[0].get<int>(), e[1].get<int>()};
                if (k.kx == 0 && k.ky == 0)
                    throw ConfigError("physics.forcing.directions[" + std::to_string(i) + "]", "zero mode");
                s.set_coeff(k, s.coeff(k) + cplx(e[2].get<double>(), e[3].get<double>()));
            }
            fields.push_back(std::move(s));
        }
        return std::make_shared<ForcingBasis const>(ForcingBasis(grid, std::move(fields)));
    }
    throw ConfigError("physics.forcing.preset", "expected low-mode or explicit");
}

namespace {

template <class C>
void fill_common(C& c, RunConfig const& rc)
{
    c.nu = num(rc.tree, "physics.nu");
    c.forcing = rc.forcing();
    c.seed = rc.seed();
    c.threads = rc.threads();
    c.solver = solver_of(rc.tree);
    c.delta0 = num(rc.tree, "discretization.delta0");
}

}  // namespace

TemporalConfig RunConfig::temporal() const
{
    TemporalConfig c;
    fill_common(c, *this);
    c.cutoff = count(tree, "discretization.N");
    c.deltas = numbers(tree, "discretization.deltas");
    c.ref_factor = count(tree, "discretization.ref_factor");
    c.horizon = positive(tree, "experiment.horizon");
    c.paths = count(tree, "experiment.paths");
    c.p = positive(tree, "experiment.p");
    c.initial = initial_of(tree, "experiment.initial");
    std::tie(c.slope_lo, c.slope_hi) = band(tree, "experiment.slope_band");
    c.min_r2 = num(tree, "experiment.min_r2");
    return c;
}

SpatialConfig RunConfig::spatial() const
{
    SpatialConfig c;
    fill_common(c, *this);
    c.cutoffs = integers(tree, "discretization.N_ladder");
    c.ref_cutoff = count(tree, "discretization.N_ref");
    c.delta = positive(tree, "discretization.delta");
    c.horizon = positive(tree, "experiment.horizon");
    c.paths = count(tree, "experiment.paths");
    c.advection = flag(tree, "experiment.advection");
    c.initial = initial_of(tree, "experiment.initial");
    std::tie(c.slope_lo, c.slope_hi) = band(tree, "experiment.slope_band");
    c.min_r2 = num(tree, "experiment.min_r2");
    return c;
}

HolderConfig RunConfig::holder() const
{
    HolderConfig c;
    fill_common(c, *this);
    c.cutoff = count(tree, "discretization.N");
    c.delta = positive(tree, "discretization.delta");
    c.burn_in = num(tree, "experiment.burn_in");
    if (c.burn_in < 0.0)
        throw ConfigError("experiment.burn_in", "must be non-negative");
    c.window = positive(tree, "experiment.window");
    c.lags = numbers(tree, "experiment.lags");
    c.m = num(tree, "experiment.m");
    c.paths = count(tree, "experiment.paths");
    c.initial = initial_of(tree, "experiment.initial");
    std::tie(c.slope_lo, c.slope_hi) = band(tree, "experiment.slope_band");
    return c;
}

ContractionConfig RunConfig::contraction() const
{
    ContractionConfig c;
    fill_common(c, *this);
    c.grid = thetas(tree, "discretization.grid");
    c.horizon = positive(tree, "experiment.horizon");
    c.record_every = positive(tree, "experiment.record_every");
    c.fit_from = num(tree, "experiment.fit_from");
    c.paths = count(tree, "experiment.paths");
    c.exact_max = static_cast<std::size_t>(count(tree, "experiment.exact_max", 0));
    c.distance = distance_of(tree, "experiment.distance");
    auto const cost = text(tree, "experiment.cost");
    if (cost == "rho")
        c.cost = CostKind::Rho;
    else if (cost == "rho-weighted")
        c.cost = CostKind::RhoWeighted;
    else
        throw ConfigError("experiment.cost", "expected rho or rho-weighted");
    c.initial = initial_of(tree, "experiment.initial");
    c.gap = positive(tree, "experiment.gap");
    c.gap_shells = count(tree, "experiment.gap_shells");
    c.advection = flag(tree, "experiment.advection");
    c.max_spread = positive(tree, "experiment.max_spread");
    c.min_r2 = num(tree, "experiment.min_r2");
    return c;
}

WeakConfig RunConfig::weak() const
{
    WeakConfig c;
    fill_common(c, *this);
    c.grid = thetas(tree, "discretization.grid");
    c.reference = theta_of(at(tree, "discretization.reference"), "discretization.reference");
    c.distance = distance_of(tree, "experiment.distance");
    auto const& obs = at(tree, "experiment.observables");
    for (std::size_t i = 0; i < obs.size(); ++i) {
        std::string const path = "experiment.observables[" + std::to_string(i) + "]";
        if (!obs[i].is_string())
            throw ConfigError(path, "expected a string");
        try {
            c.observables.push_back(parse_observable(obs[i].get<std::string>(), c.distance));
        } catch (ConfigError const& e) {
            throw ConfigError(path, e.what());
        }
    }
    c.horizon = positive(tree, "experiment.horizon");
    c.record_every = positive(tree, "experiment.record_every");
    c.paths = count(tree, "experiment.paths", 2);
    c.initial = initial_of(tree, "experiment.initial");
    c.require_lipschitz = flag(tree, "experiment.require_lipschitz");
    c.g_p = positive(tree, "experiment.g_p");
    c.g_beta = positive(tree, "experiment.g_beta");
    return c;
}

BiasConfig RunConfig::bias() const
{
    BiasConfig c;
    fill_common(c, *this);
    c.cutoff = count(tree, "discretization.N");
    c.delta = positive(tree, "discretization.delta");
    auto const dp = distance_of(tree, "experiment.distance");
    try {
        c.observable = parse_observable(text(tree, "experiment.observable"), dp);
    } catch (ConfigError const& e) {
        throw ConfigError("experiment.observable", e.what());
    }
    c.proxy_time = positive(tree, "experiment.proxy_time");
    c.burn_in = num(tree, "experiment.burn_in");
    if (c.burn_in < 0.0)
        throw ConfigError("experiment.burn_in", "must be non-negative");
    c.run_times = numbers(tree, "experiment.run_times");
    c.replicas = count(tree, "experiment.replicas");
    c.initial = initial_of(tree, "experiment.initial");
    std::tie(c.exponent_lo, c.exponent_hi) = band(tree, "experiment.exponent_band");
    return c;
}

CouplingConfig RunConfig::coupling() const
{
    CouplingConfig c;
    fill_common(c, *this);
    c.cutoff = count(tree, "discretization.N");
    c.delta = positive(tree, "discretization.delta");
    c.K = count(tree, "nudge.K");
    c.beta = positive(tree, "nudge.beta");
    c.nondegeneracy_margin = num(tree, "nudge.nondegeneracy_margin");
    c.enforce_beta_condition = flag(tree, "nudge.enforce_condition");
    c.band = num(tree, "nudge.band");
    c.horizon = positive(tree, "experiment.horizon");
    c.paths = count(tree, "experiment.paths");
    c.perturbations = numbers(tree, "experiment.perturbations");
    c.perturbation_shell = count(tree, "experiment.perturbation_shell");
    c.record_shifts = flag(tree, "experiment.record_shifts");
    c.initial = initial_of(tree, "experiment.initial");
    return c;
}

CertifyConfig RunConfig::certify() const
{
    CertifyConfig c;
    c.cutoff = count(tree, "discretization.N");
    c.distance = distance_of(tree, "experiment.distance");
    c.gamma = num(tree, "experiment.gamma");
    c.triples = static_cast<std::size_t>(count(tree, "experiment.triples"));
    c.seed = seed();
    return c;
}

// Files and overrides -------------------------------------------------------------------------------

json load_config_file(std::filesystem::path const& path)
{
    try {
        return yaml_to_json(YAML::LoadFile(path.string()));
    } catch (YAML::BadFile const&) {
        throw ConfigError("config", "cannot read " + path.string());
    } catch (YAML::Exception const& e) {
        throw ConfigError("config", path.string() + ": " + e.what());
    }
}

void apply_override(json& tree, std::string const& assignment)
{
    auto const eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ConfigError("--set", "expected key.path=value, got '" + assignment + "'");
    std::string const path = assignment.substr(0, eq);
    json value;
    try {
        value = yaml_to_json(YAML::Load(assignment.substr(eq + 1)));
    } catch (YAML::Exception const& e) {
        throw ConfigError(path, std::string("cannot parse value: ") + e.what());
    }
    json* cur = &tree;
    std::size_t pos = 0;
    while (true) {
        auto const dot = path.find('.', pos);
        std::string const key = path.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
        if (key.empty())
            throw ConfigError(path, "empty key segment");
        if (!cur->is_object())
            *cur = json::object();
        if (dot == std::string::npos) {
            (*cur)[key] = value;
            return;
        }
        cur = &(*cur)[key];
        pos = dot + 1;
    }
}

std::vector<std::string> leaf_paths(json const& tree)
{
    std::vector<std::string> out;
    auto rec = [&](auto&& self, json const& j, std::string const& prefix) -> void {
        if (j.is_object() && !j.empty()) {
            for (auto const& [k, v] : j.items())
                self(self, v, join(prefix, k));
        } else {
            out.push_back(prefix);
        }
    };
    rec(rec, tree, "");
    return out;
}

}  // namespace snse
