#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "snse/config.hpp"
#include "snse/spectral_field.hpp"

namespace snse {

/// Process exit codes of the command-line tool.
enum ExitCode : int
{
    kExitOk = 0,
    kExitConfig = 2,     ///< invalid configuration or input files
    kExitNumerical = 3,  ///< solver, capacity, range or fit failure
    kExitAcceptance = 4, ///< failed checks under --enforce, or replay mismatch
};

std::string code_version();

struct RunOptions
{
    std::filesystem::path out;  ///< empty: io.out, else a config-addressed directory
    bool enforce = false;
    bool verbose = false;
};

struct RunOutcome
{
    int exit_code = kExitOk;
    std::filesystem::path dir;
    nlohmann::json summary;
};

/// Runs one experiment and writes manifest.json, summary.json, one CSV per
/// table and (for simulate) content-addressed checkpoints.
RunOutcome run_experiment(RunConfig const& cfg, RunOptions const& opt);

/// Reruns the experiment recorded in a manifest and compares every CSV artifact
/// byte for byte. Exit code 4 on any mismatch.
RunOutcome replay_manifest(std::filesystem::path const& manifest, RunOptions const& opt, int threads = -1);

/// Writes checkpoints/<fnv1a64>.snsefld under `dir`; returns the hash.
std::string checkpoint(std::filesystem::path const& dir, SpectralField const& state);
/// Reads a checkpoint; StructuralError on a corrupt file or cutoff mismatch.
SpectralField restore(std::filesystem::path const& path, int expected_cutoff = -1);

/// Acceptance-criterion id of a check id ("" if the check is not tied to one).
std::string criterion_of(std::string const& check_id);

/// Entry point of snse-lab.
int cli_main(int argc, char** argv);

}  // namespace snse
