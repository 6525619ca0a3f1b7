#pragma once

#include <iosfwd>
#include <memory>
#include <vector>

#include "ape/inner_loop.hpp"

namespace ape {

struct OuterOptions {
    double alpha = 0.05;
    std::size_t n_iter = 1000;
    StepSchedule schedule;
    StepSchedule inner_schedule;
    std::size_t inner_iter = 1000;
    /// Inner iterations once warm-started from the previous outer iterate.
    std::size_t inner_iter_warm = 1000;
    bool warm_start = true;
    /// The last iterate is returned unless this is set, in which case the
    /// best-objective iterate among those with fit-bank sizes <= alpha +
    /// epsilon_size and gaps >= -epsilon_power is preferred.
    bool prefer_feasible = false;
    double epsilon_size = 0.005;
    double epsilon_power = 0.005;
};

struct OuterTrace {
    std::vector<std::vector<double>> weights;  // iterate k
    std::vector<std::vector<double>> gammas;
    std::vector<double> objectives;            // sum_j w_j gamma_j
    std::vector<double> best_objectives;
    std::vector<double> steps;
    std::vector<double> max_sizes;             // largest null rejection of the inner test
    std::vector<char> feasible;
    std::vector<std::size_t> inner_iterations;
    std::size_t best_index = 0;

    std::size_t iterations() const { return objectives.size(); }
};

void write_outer_trace_csv(const OuterTrace& trace, std::ostream& out);

struct OuterResult {
    std::vector<double> weights;
    std::vector<double> multipliers;
    /// Inner-loop state after the final outer iteration, for warm starts.
    std::vector<double> last_multipliers;
    std::vector<double> gamma;
    std::vector<double> sizes;
    double objective = 0.0;
    std::size_t chosen_index = 0;
    OuterTrace trace;
};

/// gamma_j = P_test(theta_j) - P_adhoc(theta_j) on the workspace sets.
std::vector<double> power_gap_vector(Workspace& ws, std::span<const double> weights,
                                     std::span<const double> multipliers);

/// Generic form for any pair of tests on one bank (common random numbers).
std::vector<double> power_gap_vector(const Test& test, const Test& ad_hoc, const AlternativeSupport& alt,
                                     const DrawBank& bank, const TestingProblem& problem);

/// Projected subgradient descent on the weight simplex. init_multipliers
/// warm-starts the first inner run.
OuterResult run_outer(Workspace& ws, std::span<const double> init_weights, const OuterOptions& opt,
                      std::span<const double> init_multipliers = {});

/// Convergence bound sqrt(M1) (||W0 - W*||^2 + sum h^2) / (2 sum h).
std::vector<double> outer_gap_bound(std::span<const double> steps, std::size_t m1, double initial_distance_sq);

}  // namespace ape
