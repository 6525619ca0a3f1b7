#include "ape/inner_loop.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace ape {

namespace {

double norm2(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

}  // namespace

double inner_step(const StepSchedule& s, std::span<const double> tau, double alpha) {
    switch (s.kind) {
        case StepSchedule::Kind::Constant:
            return s.constant;
        case StepSchedule::Kind::Epsilon:
            return s.epsilon / std::sqrt(static_cast<double>(tau.size()) * std::max(1.0 - alpha, alpha));
        case StepSchedule::Kind::Adaptive:
            break;
    }
    const double top = *std::max_element(tau.begin(), tau.end());
    if (top > 0.02) return 0.01;
    if (top > 0.002) return 0.001;
    return 0.0001;
}

double outer_step(const StepSchedule& s, std::span<const double> gamma) {
    switch (s.kind) {
        case StepSchedule::Kind::Constant:
            return s.constant;
        case StepSchedule::Kind::Epsilon:
            return s.epsilon / std::sqrt(static_cast<double>(gamma.size()));
        case StepSchedule::Kind::Adaptive:
            break;
    }
    const double low = *std::min_element(gamma.begin(), gamma.end());
    if (low < -0.02) return 0.01;
    if (low < -0.002) return 0.001;
    return 0.0001;
}

void write_dual_trace_csv(const DualTrace& trace, std::ostream& out) {
    const std::size_t m0 = trace.sizes.empty() ? 0 : trace.sizes.front().size();
    out << "iteration,dual_value,best_value,step,tau_norm";
    for (std::size_t i = 0; i < m0; ++i) out << ",size_" << i + 1;
    out << '\n';
    out.precision(6);
    for (std::size_t k = 0; k < trace.iterations(); ++k) {
        out << k << ',' << trace.values[k] << ',' << trace.best_values[k] << ',' << trace.steps[k] << ','
            << trace.tau_norms[k];
        for (double v : trace.sizes[k]) out << ',' << v;
        out << '\n';
    }
}

InnerResult run_inner(Workspace& ws, std::span<const double> weights, double alpha,
                      const StepSchedule& schedule, std::size_t n_iter, std::span<const double> init) {
    if (n_iter == 0) throw std::invalid_argument("run_inner: n_iter must be >= 1");
    const std::size_t m0 = ws.n_null();
    if (m0 == 0) throw std::invalid_argument("run_inner: empty null support");
    ws.set_weights(weights);

    std::vector<double> lam(m0, 0.0);
    if (!init.empty()) {
        if (init.size() != m0) throw std::invalid_argument("run_inner: warm start length mismatch");
        for (std::size_t i = 0; i < m0; ++i) lam[i] = std::max(init[i], 0.0);
    }

    // Null sets first, then the sets of alternatives with positive weight.
    std::vector<std::size_t> sets, active;
    for (std::size_t i = 0; i < m0; ++i) sets.push_back(ws.null_set(i));
    for (std::size_t j = 0; j < weights.size(); ++j)
        if (weights[j] > 0.0) {
            sets.push_back(ws.alt_set(j));
            active.push_back(j);
        }
    std::vector<double> rates(sets.size()), tau(m0);

    InnerResult result;
    auto& tr = result.trace;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n_iter; ++k) {
        ws.rejection(lam, sets, rates);
        double power = 0.0;
        for (std::size_t a = 0; a < active.size(); ++a) power += weights[active[a]] * rates[m0 + a];
        double penalty = 0.0;
        for (std::size_t i = 0; i < m0; ++i) {
            tau[i] = rates[i] - alpha;
            penalty += lam[i] * tau[i];
        }
        const double value = power - penalty;
        if (value < best) {
            best = value;
            tr.best_iteration = k;
            tr.best_multipliers = lam;
        }
        if (!schedule.return_best || tr.best_iteration == k) {
            result.multipliers = lam;
            result.sizes.assign(rates.begin(), rates.begin() + static_cast<std::ptrdiff_t>(m0));
        }
        const double nrm = norm2(tau);
        const double h = inner_step(schedule, tau, alpha);
        tr.values.push_back(value);
        tr.best_values.push_back(best);
        tr.tau_norms.push_back(nrm);
        tr.steps.push_back(h);
        tr.sizes.emplace_back(rates.begin(), rates.begin() + static_cast<std::ptrdiff_t>(m0));
        if (nrm == 0.0) {
            tr.stopped_at_zero_subgradient = true;
            break;
        }
        for (std::size_t i = 0; i < m0; ++i) {
            const double dir = schedule.sign_update ? (tau[i] > 0 ? 1.0 : (tau[i] < 0 ? -1.0 : 0.0)) : tau[i] / nrm;
            lam[i] = std::max(lam[i] + h * dir, 0.0);
        }
    }
    result.last = lam;
    result.dual_value = best;
    return result;
}

double dual_value(Workspace& ws, std::span<const double> multipliers, std::span<const double> weights,
                  double alpha) {
    ws.set_weights(weights);
    std::vector<std::size_t> sets;
    for (std::size_t i = 0; i < ws.n_null(); ++i) sets.push_back(ws.null_set(i));
    std::vector<std::size_t> active;
    for (std::size_t j = 0; j < weights.size(); ++j)
        if (weights[j] > 0.0) {
            sets.push_back(ws.alt_set(j));
            active.push_back(j);
        }
    std::vector<double> rates(sets.size());
    ws.rejection(multipliers, sets, rates);
    const std::size_t m0 = ws.n_null();
    double value = 0.0;
    for (std::size_t a = 0; a < active.size(); ++a) value += weights[active[a]] * rates[m0 + a];
    for (std::size_t i = 0; i < m0; ++i) value -= multipliers[i] * (rates[i] - alpha);
    return value;
}

namespace {

std::unique_ptr<Workspace> make_workspace(const std::vector<NullComponent>& null, const AlternativeSupport& alt,
                                          const DrawBank& bank, const ProblemPtr& problem,
                                          const std::optional<SwitchingRule>& switching) {
    // The ad hoc rate is not used by the inner loop; any test will do.
    auto never = std::make_shared<LambdaTest>("none", [](std::span<const double>) { return 0.0; });
    auto ws = std::make_unique<Workspace>(problem, bank, switching, never);
    for (const auto& c : null) ws->add_null(c);
    for (const auto& p : alt.points) ws->add_alternative(p);
    return ws;
}

}  // namespace

double dual_value(std::span<const double> multipliers, std::span<const double> weights,
                  const std::vector<NullComponent>& null, const AlternativeSupport& alt,
                  const DrawBank& bank, const ProblemPtr& problem, double alpha,
                  const std::optional<SwitchingRule>& switching) {
    auto ws = make_workspace(null, alt, bank, problem, switching);
    return dual_value(*ws, multipliers, weights, alpha);
}

std::pair<std::shared_ptr<NpTest>, DualTrace> run_inner(
    std::span<const double> weights, const std::vector<NullComponent>& null,
    const AlternativeSupport& alt, const DrawBank& bank, const ProblemPtr& problem, double alpha,
    const StepSchedule& schedule, std::size_t n_iter, const std::optional<SwitchingRule>& switching) {
    auto ws = make_workspace(null, alt, bank, problem, switching);
    auto r = run_inner(*ws, weights, alpha, schedule, n_iter);
    auto test = std::make_shared<NpTest>(problem, alt, std::vector<double>(weights.begin(), weights.end()), null,
                                         r.multipliers, switching, alpha);
    return {test, std::move(r.trace)};
}

std::vector<double> inner_gap_bound(std::span<const double> steps, std::size_t m0, double alpha,
                                    double initial_distance_sq) {
    const double lip = std::sqrt(static_cast<double>(m0) * std::max(1.0 - alpha, alpha));
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
