#pragma once

#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "ape/np_test.hpp"
#include "ape/workspace.hpp"

namespace ape {

/// Step rules shared by both loops.
///  Adaptive: three-level rule on the subgradient (0.01 / 0.001 / 0.0001).
///  Constant: h = constant.
///  Epsilon:  h = epsilon / sqrt(M0 max(1-alpha, alpha)) inner,
///            h = epsilon / sqrt(M1) outer.
struct StepSchedule {
    enum class Kind { Adaptive, Constant, Epsilon };
    Kind kind = Kind::Adaptive;
    double constant = 0.01;
    double epsilon = 0.005;
    /// Normalize each coordinate separately (a sign step) instead of by the
    /// Euclidean norm of the whole subgradient.
    bool sign_update = false;
    /// Inner loop only: return the best-dual-value iterate instead of the
    /// final one.
    bool return_best = false;
};

/// Inner step size from tau = size - alpha.
double inner_step(const StepSchedule& s, std::span<const double> tau, double alpha);
/// Outer step size from gamma = power difference.
double outer_step(const StepSchedule& s, std::span<const double> gamma);

/// Per-iteration record of the dual subgradient method.
struct DualTrace {
    std::vector<double> values;       // dual value at iterate k
    std::vector<double> best_values;  // min over i <= k
    std::vector<double> steps;        // h_k
    std::vector<double> tau_norms;    // ||tau^(k)||_2
    std::vector<std::vector<double>> sizes;  // rejection rate per null component
    std::vector<double> best_multipliers;
    std::size_t best_iteration = 0;
    bool stopped_at_zero_subgradient = false;

    std::size_t iterations() const { return values.size(); }
};

void write_dual_trace_csv(const DualTrace& trace, std::ostream& out);

struct InnerResult {
    std::vector<double> multipliers;  // final iterate, or best with return_best
    std::vector<double> sizes;        // at that iterate
    std::vector<double> last;         // next iterate after the final update, for warm starts
    double dual_value = 0.0;
    DualTrace trace;
};

/// Dual subgradient descent for fixed weights on a prepared workspace.
/// init (length n_null) warm-starts the multipliers; zeros otherwise.
InnerResult run_inner(Workspace& ws, std::span<const double> weights, double alpha,
                      const StepSchedule& schedule, std::size_t n_iter,
                      std::span<const double> init = {});

/// Dual value sum_j w_j P_j - sum_i lam_i (size_i - alpha) on a workspace.
double dual_value(Workspace& ws, std::span<const double> multipliers, std::span<const double> weights,
                  double alpha);

/// Stand-alone forms that build a workspace over the given supports.
double dual_value(std::span<const double> multipliers, std::span<const double> weights,
                  const std::vector<NullComponent>& null, const AlternativeSupport& alt,
                  const DrawBank& bank, const ProblemPtr& problem, double alpha,
                  const std::optional<SwitchingRule>& switching = std::nullopt);

std::pair<std::shared_ptr<NpTest>, DualTrace> run_inner(
    std::span<const double> weights, const std::vector<NullComponent>& null,
    const AlternativeSupport& alt, const DrawBank& bank, const ProblemPtr& problem, double alpha,
    const StepSchedule& schedule, std::size_t n_iter,
    const std::optional<SwitchingRule>& switching = std::nullopt);

/// Convergence bound for the best dual value after k+1 steps:
///   sqrt(M0 max(1-alpha, alpha)) (||L0 - L*||^2 + sum h_i^2) / (2 sum h_i).
std::vector<double> inner_gap_bound(std::span<const double> steps, std::size_t m0, double alpha,
                                    double initial_distance_sq);

}  // namespace ape
