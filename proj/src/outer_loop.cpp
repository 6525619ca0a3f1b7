#include "ape/outer_loop.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "ape/monte_carlo.hpp"
#include "ape/simplex.hpp"

namespace ape {

std::vector<double> power_gap_vector(Workspace& ws, std::span<const double> weights,
                                     std::span<const double> multipliers) {
    ws.set_weights(weights);
    std::vector<std::size_t> sets(ws.n_alt());
    for (std::size_t j = 0; j < ws.n_alt(); ++j) sets[j] = ws.alt_set(j);
    std::vector<double> gamma(sets.size());
    ws.rejection(multipliers, sets, gamma);
    for (std::size_t j = 0; j < sets.size(); ++j) gamma[j] -= ws.adhoc_rejection(sets[j]);
    return gamma;
}

std::vector<double> power_gap_vector(const Test& test, const Test& ad_hoc, const AlternativeSupport& alt,
                                     const DrawBank& bank, const TestingProblem& problem) {
    const TargetSampler sampler(problem, bank);
    std::vector<Target> targets(alt.points.begin(), alt.points.end());
    auto a = rejection_surface(test, targets, sampler);
    const auto b = rejection_surface(ad_hoc, targets, sampler);
    for (std::size_t j = 0; j < a.size(); ++j) a[j] -= b[j];
    return a;
}

void write_outer_trace_csv(const OuterTrace& trace, std::ostream& out) {
    const std::size_t m1 = trace.weights.empty() ? 0 : trace.weights.front().size();
    out << "iteration,objective,best_objective,step,max_size,feasible,inner_iterations";
    for (std::size_t j = 0; j < m1; ++j) out << ",weight_" << j + 1;
    for (std::size_t j = 0; j < m1; ++j) out << ",gamma_" << j + 1;
    out << '\n';
    out.precision(6);
    for (std::size_t k = 0; k < trace.iterations(); ++k) {
        out << k << ',' << trace.objectives[k] << ',' << trace.best_objectives[k] << ',' << trace.steps[k] << ','
            << trace.max_sizes[k] << ',' << int(trace.feasible[k]) << ',' << trace.inner_iterations[k];
        for (double w : trace.weights[k]) out << ',' << w;
        for (double g : trace.gammas[k]) out << ',' << g;
        out << '\n';
    }
}

OuterResult run_outer(Workspace& ws, std::span<const double> init_weights, const OuterOptions& opt,
                      std::span<const double> init_multipliers) {
    if (opt.n_iter == 0) throw std::invalid_argument("run_outer: n_iter must be >= 1");
    const std::size_t m1 = ws.n_alt();
    if (init_weights.size() != m1) throw std::invalid_argument("run_outer: weight length mismatch");
    if (!on_simplex(init_weights, 1e-9)) throw std::invalid_argument("run_outer: initial weights not on the simplex");

    std::vector<double> w(init_weights.begin(), init_weights.end());
    std::vector<double> lam;
    std::vector<double> next(init_multipliers.begin(), init_multipliers.end());
    bool warm = !next.empty();

    OuterResult result;
    auto& tr = result.trace;
    double best = std::numeric_limits<double>::infinity();
    double best_feasible = std::numeric_limits<double>::infinity();
    bool have_feasible = false;
    for (std::size_t k = 0; k < opt.n_iter; ++k) {
        const std::size_t iters = (warm && opt.warm_start) ? opt.inner_iter_warm : opt.inner_iter;
        auto inner = run_inner(ws, w, opt.alpha, opt.inner_schedule, iters,
                               (warm && opt.warm_start) ? std::span<const double>(next) : std::span<const double>());
        lam = inner.multipliers;
        next = inner.last;
        warm = true;

        const auto gamma = power_gap_vector(ws, w, lam);
        double objective = 0.0;
        for (std::size_t j = 0; j < m1; ++j) objective += w[j] * gamma[j];
        const double max_size = *std::max_element(inner.sizes.begin(), inner.sizes.end());
        const double min_gap = *std::min_element(gamma.begin(), gamma.end());
        const bool feasible = max_size <= opt.alpha + opt.epsilon_size && min_gap >= -opt.epsilon_power;

        if (objective < best) {
            best = objective;
            tr.best_index = k;
        }
        const bool last = k + 1 == opt.n_iter;
        const bool better_feasible = opt.prefer_feasible && feasible && objective < best_feasible;
        if (better_feasible || (last && !have_feasible)) {
            if (better_feasible) {
                best_feasible = objective;
                have_feasible = true;
            }
            result.weights = w;
            result.multipliers = lam;
            result.gamma = gamma;
            result.sizes = inner.sizes;
            result.objective = objective;
            result.chosen_index = k;
        }

        const double h = outer_step(opt.schedule, gamma);
        tr.weights.push_back(w);
        tr.gammas.push_back(gamma);
        tr.objectives.push_back(objective);
        tr.best_objectives.push_back(best);
        tr.steps.push_back(h);
        tr.max_sizes.push_back(max_size);
        tr.feasible.push_back(feasible ? 1 : 0);
        tr.inner_iterations.push_back(inner.trace.iterations());

        double nrm = 0.0;
        for (double g : gamma) nrm += g * g;
        nrm = std::sqrt(nrm);
        if (nrm == 0.0) continue;  // envelope matches everywhere; keep the weights
        std::vector<double> v(m1);
        for (std::size_t j = 0; j < m1; ++j) {
            const double dir = opt.schedule.sign_update ? (gamma[j] > 0 ? 1.0 : (gamma[j] < 0 ? -1.0 : 0.0))
                                                        : gamma[j] / nrm;
            v[j] = w[j] - h * dir;
        }
        w = project_simplex(v);
    }
    result.last_multipliers = next;
    return result;
}

std::vector<double> outer_gap_bound(std::span<const double> steps, std::size_t m1, double initial_distance_sq) {
    const double lip = std::sqrt(static_cast<double>(m1));
    std::vector<double> out(steps.size());
    double sh = 0.0, sh2 = 0.0;
    for (std::size_t k = 0; k < steps.size(); ++k) {
        sh += steps[k];
        sh2 += steps[k] * steps[k];
        out[k] = lip * (initial_distance_sq + sh2) / (2.0 * sh);
    }
    return out;
}

}  // namespace ape
