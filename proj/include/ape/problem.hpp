#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ape/types.hpp"

namespace ape {

/// A hypothesis test: maps an observation to a rejection probability.
class Test {
public:
    virtual ~Test() = default;
    virtual double decide(std::span<const double> y) const = 0;
    virtual std::string name() const = 0;
};

using TestPtr = std::shared_ptr<const Test>;

/// Wraps a callable as a Test.
class LambdaTest final : public Test {
public:
    LambdaTest(std::string name, std::function<double(std::span<const double>)> fn)
        : name_(std::move(name)), fn_(std::move(fn)) {}
    double decide(std::span<const double> y) const override { return fn_(y); }
    std::string name() const override { return name_; }

private:
    std::string name_;
    std::function<double(std::span<const double>)> fn_;
};

/// Defers to a standard test whenever statistic(y) > switch_point.
struct SwitchingRule {
    std::function<double(std::span<const double>)> statistic;
    double switch_point = 0.0;
    TestPtr standard_test;
    // Largest nuisance value of the "nonstandard" region; used only by
    // the build-time diagnostic.
    double standard_region_start = 0.0;
    std::size_t nuisance_axis = 1;

    bool switches(std::span<const double> y) const { return statistic(y) > switch_point; }
};

/// A family of densities f_theta on a common sample space, together with a
/// sampler that maps standardized baseline draws to observations.
///
/// log_density may omit any additive term that does not depend on theta;
/// only differences between two parameter values are meaningful.
class TestingProblem {
public:
    virtual ~TestingProblem() = default;

    virtual std::string name() const = 0;
    /// Columns of the baseline draw bank.
    virtual std::size_t base_dim() const = 0;
    /// Length of one observation.
    virtual std::size_t obs_dim() const = 0;
    virtual std::size_t param_dim() const = 0;

    virtual void sample(std::span<const double> base, const ParameterPoint& theta,
                        std::span<double> y) const = 0;
    virtual double log_density(const ParameterPoint& theta, std::span<const double> y) const = 0;

    virtual bool in_null(const ParameterPoint& theta) const = 0;
    virtual bool in_alt(const ParameterPoint& theta) const = 0;
    virtual ParameterPoint reference_point() const = 0;

    /// Closed-form log density of a uniform-segment mixture, if available.
    virtual std::optional<double> segment_log_density(const UniformSegment& seg,
                                                      std::span<const double> y) const;

    /// Log densities at every row of a row-major block of observations.
    virtual void log_density_batch(const ParameterPoint& theta, std::span<const double> ys,
                                   std::span<double> out) const;

    /// Batch form of segment_log_density; false when there is no closed form.
    virtual bool segment_log_density_batch(const UniformSegment& seg, std::span<const double> ys,
                                           std::span<double> out) const;
};

using ProblemPtr = std::shared_ptr<const TestingProblem>;

/// Log density of a null component at y. Segments use the problem's closed
/// form or, failing that, an N-point midpoint rule in log-sum-exp form.
double mixture_log_density(const NullComponent& component, std::span<const double> y,
                           const TestingProblem& problem);

/// mixture_log_density at every row of a row-major block.
void mixture_log_density_batch(const NullComponent& component, std::span<const double> ys,
                               std::span<double> out, const TestingProblem& problem);

/// Midpoint-rule value of log( (1/(b-a)) * integral f_theta(y) dtheta_axis ).
double segment_log_density_midpoint(const UniformSegment& seg, std::span<const double> y,
                                    const TestingProblem& problem, std::size_t nodes);

struct ValidationIssue {
    enum class Kind { PointInNull, PointNotInAlternative, NullOutsideNull, DuplicateSupportPoint,
                      DimensionMismatch, NonFiniteCoordinate, NonFiniteDensity, EmptySupport };
    Kind kind;
    std::string message;
};

struct ValidationReport {
    std::vector<ValidationIssue> issues;
    bool valid() const { return issues.empty(); }
    bool has(ValidationIssue::Kind k) const;
    std::string summary() const;
};

/// Checks membership, duplicates and finiteness of densities on a probe set
/// of draws. Never throws for invalid input; everything is reported.
ValidationReport validate_problem(const TestingProblem& problem,
                                  const std::vector<NullComponent>& null,
                                  const AlternativeSupport& alt, std::size_t probe_draws = 64,
                                  std::uint64_t probe_seed = 7);

}  // namespace ape
