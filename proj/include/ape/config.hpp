#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ape/ape_builder.hpp"
#include "ape/problems/linear_iv.hpp"
#include "json.hpp"

namespace ape {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ProblemSpec {
    std::string name;  // gaussian-mean | boundary-iici | iv-fixed-omega | iv-fixed-sigma
    double rho = 0.7;
    double beta0 = 0.0;
    int k = 5;
    double correlation = 0.5;
};

struct SwitchingSpec {
    double switch_point = 0.0;
    double standard_start = 0.0;
};

struct PowerSpec {
    std::string test = "adhoc";  // adhoc | envelope | standard
    std::vector<ParameterPoint> grid;
    std::optional<std::filesystem::path> report;
};

/// Candidate seeds screened with tune_seed before a run. Empty: seeds as given.
struct SeedSearch {
    std::vector<std::uint64_t> candidates;
    bool similar = false;
};

struct RunConfig {
    ProblemSpec problem;
    std::string preset;  // paper-defaults name, empty if none
    double alpha = 0.05;
    std::uint64_t fit_seed = 101;
    std::uint64_t verify_seed = 202;
    std::uint64_t cv_seed = 20240601;
    SeedSearch seed_search;
    std::size_t fit_draws = 300000;
    std::size_t verify_draws = 300000;
    std::size_t cv_draws = 1000000;
    std::size_t cv_nodes = 400;
    bool standardize = true;
    bool symmetrize = false;
    OuterOptions outer;
    ThresholdConfig thresholds;
    std::optional<SwitchingSpec> switching;
    std::vector<NullComponent> null_support;
    AlternativeSupport alt_support;
    std::vector<double> init_weights;
    std::vector<double> inner_weights;
    PowerSpec power;
    std::optional<std::filesystem::path> output_dir;
    std::optional<std::filesystem::path> cache_dir;
    std::size_t threads = 0;
};

/// Built-in configurations. The "-ci" variants are reduced-scale versions.
RunConfig paper_configs(const std::string& name);
std::vector<std::string> paper_config_names();

/// Parses a JSON config. "paper_defaults": "<name>" (or "paper-defaults")
/// starts from paper_configs(name); other keys override it. Errors carry
/// the line of the offending key.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

/// Throws ConfigError when an invariant fails.
void validate_config(const RunConfig& cfg);

nlohmann::ordered_json config_to_json(const RunConfig& cfg);

/// Grid generator blocks: an explicit list of points, or
/// {"product": [[...], [...]], "local_to_axis": 1} where the first
/// coordinate is divided by the square root of the given axis.
std::vector<ParameterPoint> parse_grid(const nlohmann::json& j);

struct Assembled {
    ProblemPtr problem;
    TestPtr ad_hoc;
    TestPtr standard;
    std::optional<SwitchingRule> switching;
};

/// Instantiates the problem, tests and switching rule. IV problems build or
/// load the CLR table.
Assembled assemble(const RunConfig& cfg);

/// Replaces the fit and verify seeds by the tune_seed choices over the
/// candidates (the verify seed from those left after the fit choice),
/// scoring the ad hoc test on the fine null grid.
void apply_seed_search(RunConfig& cfg, const Assembled& a);

}  // namespace ape
