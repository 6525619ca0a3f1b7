#pragma once

#include <atomic>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "ape/draw_bank.hpp"
#include "ape/monte_carlo.hpp"
#include "ape/problem.hpp"

namespace ape {

/// Fit-time evaluator for tests of the form
///   reject iff sum_j w_j f_j(y) >= sum_i lam_i f~_i(y)
/// over one common-random-number bank.
///
/// Every null component and alternative support point owns a sample set
/// (the bank translated to that parameter). For each set the engine keeps
/// the non-switched observations, a per-draw log scale s(y) (the largest
/// null log density at registration), and lazily filled single-precision
/// rows exp(log f(y) - s(y)) for the components that become active. The
/// combined alternative side is cached per set until the weights change.
class Workspace {
public:
    Workspace(ProblemPtr problem, const DrawBank& bank, std::optional<SwitchingRule> switching,
              TestPtr ad_hoc, std::size_t cache_budget_bytes = std::size_t(2500) << 20);
    ~Workspace();
    Workspace(const Workspace&) = delete;
    Workspace& operator=(const Workspace&) = delete;

    /// Register null components before alternatives so the per-draw scale
    /// covers them. Each call adds a sample set.
    std::size_t add_null(const NullComponent& c);
    std::size_t add_alternative(const ParameterPoint& p);

    std::size_t n_null() const { return null_.size(); }
    std::size_t n_alt() const { return alt_.size(); }
    const std::vector<NullComponent>& null_components() const { return null_; }
    const AlternativeSupport& alternatives() const { return alt_; }
    const TestingProblem& problem() const { return *problem_; }
    const ProblemPtr& problem_ptr() const { return problem_; }
    const std::optional<SwitchingRule>& switching() const { return switching_; }
    const DrawBank& bank() const { return bank_; }

    std::size_t null_set(std::size_t i) const { return null_set_[i]; }
    std::size_t alt_set(std::size_t j) const { return alt_set_[j]; }

    /// Ad hoc test rejection rate at a set.
    double adhoc_rejection(std::size_t set) const;
    /// Fraction of draws where the switching rule fires.
    double switched_fraction(std::size_t set) const;

    /// Fixes the alternative weights for subsequent rejection() calls.
    void set_weights(std::span<const double> weights);
    const std::vector<double>& weights() const { return weights_; }

    /// Rejection rates at `sets` of the test with the current weights and
    /// the given multipliers (length n_null()).
    void rejection(std::span<const double> multipliers, std::span<const std::size_t> sets,
                   std::span<double> out);

    std::size_t cached_bytes() const { return used_bytes_.load(); }

private:
    struct SampleSet;
    const std::vector<float>& row(SampleSet& s, bool null_side, std::size_t index,
                                  std::vector<float>& scratch);
    void fill_row(const SampleSet& s, bool null_side, std::size_t index, std::vector<float>& out) const;
    std::size_t add_set(const Target& target);
    double rejection_one(SampleSet& s, std::span<const double> multipliers,
                         std::span<const std::size_t> active_null);

    ProblemPtr problem_;
    const DrawBank& bank_;
    TargetSampler sampler_;
    std::optional<SwitchingRule> switching_;
    TestPtr ad_hoc_;
    std::size_t budget_;
    std::atomic<std::size_t> used_bytes_{0};

    std::vector<NullComponent> null_;
    AlternativeSupport alt_;
    std::vector<std::size_t> null_set_;
    std::vector<std::size_t> alt_set_;
    std::vector<std::unique_ptr<SampleSet>> sets_;
    std::vector<double> weights_;
    std::vector<std::size_t> active_alt_;
    std::uint64_t weights_version_ = 0;
};

}  // namespace ape
