#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "snse/config.hpp"
#include "snse/error.hpp"
#include "snse/field_io.hpp"
#include "snse/parallel.hpp"
#include "snse/runner.hpp"

using namespace snse;
namespace fs = std::filesystem;

namespace {

int run_cli(std::vector<std::string> args)
{
    args.insert(args.begin(), "snse-lab");
    std::vector<char*> argv;
    for (auto& a : args)
        argv.push_back(a.data());
    return cli_main(static_cast<int>(argv.size()), argv.data());
}

fs::path scratch(std::string const& name)
{
    auto p = fs::temp_directory_path() / ("snse-test-" + name);
    fs::remove_all(p);
    return p;
}

nlohmann::json read_json(fs::path const& p)
{
    std::ifstream in(p);
    return nlohmann::json::parse(in);
}

}  // namespace

TEST(Config, DefaultsBuildForEveryKind)
{
    for (auto const& k : experiment_kinds()) {
        auto rc = RunConfig::build(k, nlohmann::json::object());
        EXPECT_EQ(rc.kind, k);
        EXPECT_TRUE(rc.tree.contains("physics"));
    }
    EXPECT_THROW(RunConfig::defaults("nope"), ConfigError);
}

TEST(Config, AutoValuesAreResolvedAndEchoed)
{
    auto rc = RunConfig::build("weak", nlohmann::json::object());
    EXPECT_DOUBLE_EQ(rc.tree["experiment"]["distance"]["alpha"].get<double>(), 1.0 / (8.0 * 0.5));
    auto cc = RunConfig::build("couple", nlohmann::json::object());
    EXPECT_DOUBLE_EQ(cc.tree["nudge"]["beta"].get<double>(), 4.0);  // nu lambda_5 / 2 with K = 4
}

TEST(Config, ErrorsNameTheField)
{
    auto field_of = [](std::string const& kind, nlohmann::json user) {
        try {
            RunConfig::build(kind, user);
        } catch (ConfigError const& e) {
            return e.field();
        }
        return std::string("<none>");
    };
    nlohmann::json j;
    j["discretization"]["delta"] = 0.5;
    j["discretization"]["delta0"] = 0.1;
    EXPECT_EQ(field_of("simulate", j), "discretization.delta");
    EXPECT_EQ(field_of("simulate", {{"experiment", {{"colour", 1}}}}), "experiment.colour");
    EXPECT_EQ(field_of("simulate", {{"physics", {{"nu", "one"}}}}), "physics.nu");
    EXPECT_EQ(field_of("converge-time", {{"discretization", {{"deltas", {0.1, 0.05, 0.025}}}}}),
              "discretization.deltas");
    EXPECT_EQ(field_of("converge-space", {{"discretization", {{"N_ref", 64}}}}), "discretization.N_ref");
    EXPECT_EQ(field_of("holder", {{"experiment", {{"lags", {0.0001}}}}}), "experiment.lags");
    EXPECT_EQ(field_of("bias", {{"experiment", {{"burn_in", 30000.0}}}}), "experiment.burn_in");
    EXPECT_EQ(field_of("weak", {{"experiment", {{"require_lipschitz", true}, {"distance", {{"alpha", 0.0}}}}}}),
              "experiment.observables");
    EXPECT_EQ(field_of("couple", {{"nudge", {{"K", 8}}}}), "nudge.K");
    EXPECT_EQ(field_of("couple", {{"nudge", {{"beta", 10.0}}}}), "nudge.beta");
}

TEST(Config, OverridesAndYaml)
{
    nlohmann::json t = nlohmann::json::object();
    apply_override(t, "experiment.paths=7");
    apply_override(t, "discretization.deltas=[0.1, 0.05]");
    EXPECT_EQ(t["experiment"]["paths"], 7);
    EXPECT_EQ(t["discretization"]["deltas"].size(), 2u);
    EXPECT_THROW(apply_override(t, "novalue"), ConfigError);

    auto dir = scratch("yaml");
    fs::create_directories(dir);
    std::ofstream(dir / "c.yaml") << "physics:\n  nu: 2\n  forcing:\n    preset: low-mode\n    amplitudes: [0.5, 0.5]\n"
                                     "discretization:\n  N: 8\n  delta: 0.01\n";
    auto rc = RunConfig::build("simulate", load_config_file(dir / "c.yaml"));
    EXPECT_EQ(rc.tree["physics"]["nu"].get<double>(), 2.0);
    EXPECT_EQ(rc.forcing()->dimension(), 2u);
    EXPECT_THROW(load_config_file(dir / "missing.yaml"), ConfigError);
    fs::remove_all(dir);
}

TEST(Parallel, OrderAndErrors)
{
    auto v = parallel_map(100, 4, [](std::size_t i) { return i * i; });
    for (std::size_t i = 0; i < v.size(); ++i)
        EXPECT_EQ(v[i], i * i);
    EXPECT_THROW(parallel_map(10, 3,
                              [](std::size_t i) {
                                  if (i == 7)
                                      throw std::runtime_error("x");
                                  return i;
                              }),
                 std::runtime_error);
}

TEST(Cli, SimulateZeroSteps)
{
    auto out = scratch("zero");
    EXPECT_EQ(run_cli({"simulate", "--set", "experiment.steps=0", "--out", out.string()}), kExitOk);
    EXPECT_TRUE(fs::exists(out / "manifest.json"));
    auto m = read_json(out / "manifest.json");
    EXPECT_TRUE(m["artifacts"].empty());
    ASSERT_EQ(m["checkpoints"].size(), 1u);
    EXPECT_EQ(m["checkpoints"][0]["step"], 0);
    EXPECT_EQ(m["config"]["experiment"]["paths"], 1);  // defaults echoed
    EXPECT_EQ(m["schema"], "snse-lab/1");
    auto f = restore(out / m["checkpoints"][0]["file"].get<std::string>(), 16);
    EXPECT_EQ(hex64(fnv1a64(encode_field(f))), m["checkpoints"][0]["hash"].get<std::string>());
    fs::remove_all(out);
}

TEST(Cli, ExitCodes)
{
    auto out = scratch("codes");
    EXPECT_EQ(run_cli({"simulate", "--set", "discretization.delta=0.5", "--set", "discretization.delta0=0.1", "--out",
                       out.string()}),
              kExitConfig);
    EXPECT_EQ(run_cli({"simulate", "--config", (out / "none.yaml").string()}), kExitConfig);
    EXPECT_EQ(run_cli({"frobnicate"}), kExitConfig);
    // exact transport beyond its capacity is a numerical failure
    EXPECT_EQ(run_cli({"contraction", "--set", "discretization.grid=[[2, 0.1]]", "--set", "experiment.horizon=0.2",
                       "--set", "experiment.record_every=0.1", "--set", "experiment.fit_from=0", "--set",
                       "experiment.paths=520", "--set", "experiment.exact_max=1000", "--set",
                       "experiment.gap_shells=1", "--out", out.string()}),
              kExitNumerical);
    // an impossible band fails the acceptance gate only under --enforce
    std::vector<std::string> base{"converge-space", "--set", "discretization.N_ladder=[2, 4, 8]", "--set",
                                  "discretization.N_ref=16", "--set", "experiment.paths=2", "--set",
                                  "experiment.horizon=0.1", "--set", "experiment.slope_band=[5, 6]", "--out",
                                  out.string()};
    EXPECT_EQ(run_cli(base), kExitOk);
    base.push_back("--enforce");
    EXPECT_EQ(run_cli(base), kExitAcceptance);
    auto s = read_json(out / "summary.json");
    EXPECT_FALSE(s["criteria"]["4"].get<bool>());
    fs::remove_all(out);
}

TEST(Cli, ReplayAndRestart)
{
    auto a = scratch("replay-a");
    ASSERT_EQ(run_cli({"simulate", "--set", "experiment.paths=2", "--set", "experiment.steps=20", "--set",
                       "io.checkpoint_every=10", "--set", "discretization.N=8", "--out", a.string()}),
              kExitOk);
    EXPECT_EQ(run_cli({"replay", (a / "manifest.json").string(), "--threads", "3"}), kExitOk);
    auto r = read_json(a / "replay" / "replay.json");
    EXPECT_TRUE(r["identical"].get<bool>());

    // a tampered artifact is reported as a mismatch
    std::ofstream(a / "simulate_states.csv", std::ios::app) << "tamper\n";
    EXPECT_EQ(run_cli({"replay", (a / "manifest.json").string()}), kExitAcceptance);

    // 10 + 10 steps via restart equal 20 straight-through steps
    auto b = scratch("replay-b"), c = scratch("replay-c");
    ASSERT_EQ(run_cli({"simulate", "--set", "experiment.paths=2", "--set", "experiment.steps=10", "--set",
                       "discretization.N=8", "--out", b.string()}),
              kExitOk);
    ASSERT_EQ(run_cli({"simulate", "--set", "experiment.paths=2", "--set", "experiment.steps=10", "--set",
                       "discretization.N=8", "--set", "experiment.restart=" + (b / "manifest.json").string(),
                       "--out", c.string()}),
              kExitOk);
    auto ma = read_json(a / "manifest.json"), mc = read_json(c / "manifest.json");
    for (std::size_t path = 0; path < 2; ++path) {
        std::string ha, hc;
        for (auto const& cp : ma["checkpoints"])
            if (cp["path"] == path && cp["step"] == 20)
                ha = cp["hash"];
        for (auto const& cp : mc["checkpoints"])
            if (cp["path"] == path && cp["step"] == 20)
                hc = cp["hash"];
        EXPECT_FALSE(ha.empty());
        EXPECT_EQ(ha, hc);
    }
    fs::remove_all(a);
    fs::remove_all(b);
    fs::remove_all(c);
}

TEST(Cli, CriterionIds)
{
    EXPECT_EQ(criterion_of("temporal.moment_slope"), "3");
    EXPECT_EQ(criterion_of("contraction.ordering"), "10");
    EXPECT_EQ(criterion_of("contraction.C2.3.0.02"), "9");
    EXPECT_EQ(criterion_of("couple.kl_slope"), "8");
    EXPECT_EQ(criterion_of("couple.gap_ratio.1"), "7");
    EXPECT_EQ(criterion_of("weak.trend"), "");
}
