#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "snse/studies.hpp"

namespace snse {

/// Every experiment kind understood by the runner.
std::vector<std::string> const& experiment_kinds();

/// Effective configuration of one run. The tree has the sections
/// physics / discretization / experiment / nudge / reproducibility / io and
/// holds every field, defaulted ones included; it is what the manifest records.
struct RunConfig
{
    std::string kind;
    nlohmann::json tree;

    /// Defaults for `kind` (ConfigError "kind" for an unknown kind).
    static RunConfig defaults(std::string const& kind);

    /// Overlays `user` on the defaults. Unknown keys and type mismatches raise
    /// ConfigError naming the dotted path. "auto" values are resolved and the
    /// whole config is validated before returning.
    static RunConfig build(std::string const& kind, nlohmann::json const& user);

    std::uint64_t seed() const;
    unsigned threads() const;

    std::shared_ptr<ForcingBasis const> forcing() const;

    // Study configurations; valid only for the matching kind.
    TemporalConfig temporal() const;
    SpatialConfig spatial() const;
    HolderConfig holder() const;
    ContractionConfig contraction() const;
    WeakConfig weak() const;
    BiasConfig bias() const;
    CouplingConfig coupling() const;
    CertifyConfig certify() const;
};

/// Parses a YAML (or JSON) file into a json tree. ConfigError "config" on syntax errors.
nlohmann::json load_config_file(std::filesystem::path const& path);

/// Applies "a.b.c=value" to a tree; the value is parsed as YAML.
void apply_override(nlohmann::json& tree, std::string const& assignment);

/// Flattened "a.b.c" paths of every leaf.
std::vector<std::string> leaf_paths(nlohmann::json const& tree);

}  // namespace snse
