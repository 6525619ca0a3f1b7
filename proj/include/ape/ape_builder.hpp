#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ape/np_test.hpp"
#include "ape/outer_loop.hpp"

namespace ape {

struct ThresholdConfig {
    /// Size threshold; also the power threshold unless epsilon_power is set.
    double epsilon = 0.005;
    std::optional<double> epsilon_power;
    std::vector<ParameterPoint> fine_null_grid;
    std::vector<ParameterPoint> fine_alt_grid;
    std::size_t max_refinements = 10;
    /// Support points added per refinement at most.
    std::size_t max_additions = 5;
    /// Outer-loop rounds allowed for the step-1 exit condition.
    std::size_t step1_rounds = 1;

    double power_epsilon() const { return epsilon_power.value_or(epsilon); }
};

enum class Verdict { EffectivelyOptimal, EffectivelyDominated, Inconclusive };
std::string to_string(Verdict v);
Verdict verdict_from_string(const std::string& s);

struct RefinementRecord {
    std::size_t round = 0;
    std::string action;  // "added-null", "added-alternative", "final", "exhausted"
    std::vector<ParameterPoint> added;
    double max_size_verify = 0.0;
    double min_diff = 0.0;
    double max_diff = 0.0;
    bool step1_satisfied = false;
    std::size_t outer_rounds = 0;
};

struct SwitchingDiagnostic {
    ParameterPoint theta;
    double switch_probability = 0.0;
    bool ok = true;
};

struct ApeReport {
    std::string problem;
    double alpha = 0.05;
    double epsilon_size = 0.005;
    double epsilon_power = 0.005;
    std::uint64_t fit_seed = 0;
    std::uint64_t verify_seed = 0;
    std::size_t fit_draws = 0;
    std::size_t verify_draws = 0;

    std::vector<NullComponent> null;
    AlternativeSupport alt;
    std::vector<double> weights;
    std::vector<double> multipliers;
    double cv = 0.0;
    std::vector<double> lfd;

    /// Verify-bank power of both tests at the support points.
    std::vector<double> support_envelope;
    std::vector<double> support_adhoc;
    /// Fit-bank gaps and sizes at the chosen iterate.
    std::vector<double> fit_gamma;
    std::vector<double> fit_sizes;

    std::vector<ParameterPoint> alt_grid;
    std::vector<double> power_envelope;
    std::vector<double> power_adhoc;
    std::vector<double> diff_pp;  // (envelope - adhoc) * 100, 3 decimals

    std::vector<ParameterPoint> null_grid;
    std::vector<double> null_envelope;
    std::vector<double> null_adhoc;

    std::vector<SwitchingDiagnostic> switching;

    Verdict verdict = Verdict::Inconclusive;
    std::vector<ParameterPoint> violators;
    std::vector<RefinementRecord> history;
    OuterTrace trace;
    std::shared_ptr<NpTest> test;

    double max_diff_pp() const;
    double min_diff_pp() const;
    std::size_t argmax_diff() const;
    double max_null_envelope() const;
    double max_null_adhoc() const;
    /// Re-derives the verdict from the stored surfaces.
    Verdict recheck_verdict() const;
};

struct ApeInputs {
    ProblemPtr problem;
    TestPtr ad_hoc;
    std::optional<SwitchingRule> switching;
    std::vector<NullComponent> null;
    AlternativeSupport alt;
    /// Uniform when empty.
    std::vector<double> init_weights;
};

/// Runs the loops, scans the fine grids on the verify bank, adds support
/// points and returns the verdict with all surfaces.
ApeReport build_ape(const ApeInputs& in, const ThresholdConfig& thresholds, const OuterOptions& outer,
                    const DrawBank& fit_bank, const DrawBank& verify_bank);

/// Verdict rule on given surfaces.
Verdict classify(std::span<const double> diff, std::span<const double> null_sizes, double alpha,
                 double epsilon_size, double epsilon_power);

enum class TableFormat { Csv, Json };
/// Rows theta_1..theta_d, power_envelope, power_adhoc, diff_pp.
std::string heatmap_grid(const ApeReport& report, TableFormat format);

/// WAP of the envelope and the ad hoc test under weights over the report's
/// support, from the verify-bank support powers.
std::pair<double, double> wap_comparison(const ApeReport& report, std::span<const double> weights);

}  // namespace ape
