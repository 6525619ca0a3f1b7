#include "ape/monte_carlo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "ape/np_test.hpp"
#include "ape/parallel.hpp"

namespace ape {

namespace {

constexpr std::size_t kBlock = 4096;

// Compensated running sum, deterministic for a fixed order.
struct Neumaier {
    double sum = 0.0, c = 0.0;
    void add(double x) {
        const double t = sum + x;
        c += std::abs(sum) >= std::abs(x) ? (sum - t) + x : (x - t) + sum;
        sum = t;
    }
    double value() const { return sum + c; }
};

double block_sum_generic(const Test& test, const Target& theta, const TargetSampler& sampler,
                         std::size_t begin, std::size_t end) {
    const std::size_t d = sampler.problem().obs_dim();
    std::vector<double> ys((end - begin) * d);
    sampler.sample_block(theta, begin, end, ys);
    Neumaier acc;
    for (std::size_t m = 0; m < end - begin; ++m) {
        const double v = test.decide(std::span<const double>(ys.data() + m * d, d));
        if (!(v >= 0.0 && v <= 1.0)) throw std::runtime_error(test.name() + ": decision outside [0,1]");
        acc.add(v);
    }
    return acc.value();
}

// Same decisions as NpTest::decide, with one density pass per active
// component over the block.
double block_sum_np(const NpTest& test, const Target& theta, const TargetSampler& sampler,
                    std::size_t begin, std::size_t end) {
    const auto& problem = test.problem();
    const std::size_t d = problem.obs_dim();
    const std::size_t n = end - begin;
    std::vector<double> ys(n * d);
    sampler.sample_block(theta, begin, end, ys);

    std::vector<char> switched(n, 0);
    Neumaier acc;
    std::vector<std::size_t> free;
    free.reserve(n);
    for (std::size_t m = 0; m < n; ++m) {
        std::span<const double> y(ys.data() + m * d, d);
        if (test.switching() && test.switching()->switches(y)) {
            switched[m] = 1;
            acc.add(test.switching()->standard_test->decide(y));
        } else {
            free.push_back(m);
        }
    }
    if (free.empty()) return acc.value();
    std::vector<double> yf(free.size() * d);
    for (std::size_t r = 0; r < free.size(); ++r)
        std::copy_n(ys.data() + free[r] * d, d, yf.data() + r * d);

    const double ninf = -std::numeric_limits<double>::infinity();
    auto lse = [&](const std::vector<std::size_t>& active, auto&& log_coef, auto&& fill) {
        std::vector<double> mx(free.size(), ninf), sm(free.size(), 0.0), tmp(free.size());
        for (std::size_t a : active) {
            fill(a, tmp);
            const double lc = log_coef(a);
            for (std::size_t r = 0; r < free.size(); ++r) {
                const double x = lc + tmp[r];
                if (std::isnan(x)) throw std::runtime_error("NpTest: non-finite density");
                if (x == ninf) continue;
                if (x <= mx[r]) {
                    sm[r] += std::exp(x - mx[r]);
                } else {
                    sm[r] = sm[r] * std::exp(mx[r] - x) + 1.0;
                    mx[r] = x;
                }
            }
        }
        for (std::size_t r = 0; r < free.size(); ++r) mx[r] = mx[r] == ninf ? ninf : mx[r] + std::log(sm[r]);
        return mx;
    };
    const auto& alt = test.alternatives();
    const auto& null = test.null_components();
    const auto lg = lse(
        test.active_alternatives(), [&](std::size_t j) { return std::log(test.weights()[j]); },
        [&](std::size_t j, std::vector<double>& out) { problem.log_density_batch(alt[j], yf, out); });
    const auto lh = lse(
        test.active_null(), [&](std::size_t i) { return std::log(test.multipliers()[i]); },
        [&](std::size_t i, std::vector<double>& out) { mixture_log_density_batch(null[i], yf, out, problem); });
    for (std::size_t r = 0; r < free.size(); ++r) acc.add(lg[r] >= lh[r] ? 1.0 : 0.0);
    return acc.value();
}

double estimate(const Test& test, const Target& theta, const TargetSampler& sampler) {
    const auto& bank = sampler.bank();
    const std::size_t blocks = (bank.n + kBlock - 1) / kBlock;
    const auto* np = dynamic_cast<const NpTest*>(&test);
    Neumaier total;
    for (std::size_t b = 0; b < blocks; ++b) {
        const std::size_t begin = b * kBlock, end = std::min(bank.n, begin + kBlock);
        total.add(np ? block_sum_np(*np, theta, sampler, begin, end)
                     : block_sum_generic(test, theta, sampler, begin, end));
    }
    return total.value() / static_cast<double>(bank.n);
}

}  // namespace

TargetSampler::TargetSampler(const TestingProblem& problem, const DrawBank& bank)
    : problem_(problem), bank_(bank), positions_(stratified_positions(bank)) {
    if (bank.dim != problem.base_dim())
        throw std::invalid_argument("bank dimension " + std::to_string(bank.dim) +
                                    " does not match problem base dimension " +
                                    std::to_string(problem.base_dim()));
}

ParameterPoint TargetSampler::parameter(const Target& target, std::size_t m) const {
    if (const auto* p = std::get_if<ParameterPoint>(&target)) return *p;
    const auto& c = std::get<NullComponent>(target);
    if (c.is_point()) return c.as_point();
    const auto& s = c.as_segment();
    return s.at(s.lower + (s.upper - s.lower) * positions_[m]);
}

void TargetSampler::sample(const Target& target, std::size_t m, std::span<double> y) const {
    problem_.sample(bank_.row(m), parameter(target, m), y);
}

void TargetSampler::sample_block(const Target& target, std::size_t begin, std::size_t end,
                                 std::span<double> out) const {
    const std::size_t d = problem_.obs_dim();
    const auto* point = std::get_if<ParameterPoint>(&target);
    const ParameterPoint* fixed = point;
    if (!fixed) {
        const auto& c = std::get<NullComponent>(target);
        if (c.is_point()) fixed = &c.as_point();
    }
    if (fixed) {
        for (std::size_t m = begin; m < end; ++m)
            problem_.sample(bank_.row(m), *fixed, out.subspan((m - begin) * d, d));
        return;
    }
    const auto& s = std::get<NullComponent>(target).as_segment();
    ParameterPoint theta = s.anchor;
    for (std::size_t m = begin; m < end; ++m) {
        theta.coords[s.axis] = s.lower + (s.upper - s.lower) * positions_[m];
        problem_.sample(bank_.row(m), theta, out.subspan((m - begin) * d, d));
    }
}

RejectionEstimate rejection_probability(const Test& test, const Target& theta,
                                        const TargetSampler& sampler) {
    return {estimate(test, theta, sampler), sampler.bank().n, theta};
}

RejectionEstimate rejection_probability(const Test& test, const Target& theta, const DrawBank& bank,
                                        const TestingProblem& problem) {
    const TargetSampler sampler(problem, bank);
    return rejection_probability(test, theta, sampler);
}

std::vector<double> rejection_surface(const Test& test, const std::vector<Target>& targets,
                                      const TargetSampler& sampler) {
    std::vector<double> out(targets.size());
    parallel_for(targets.size(), [&](std::size_t t) { out[t] = estimate(test, targets[t], sampler); });
    return out;
}

double wap(const Test& test, std::span<const double> weights, const AlternativeSupport& alt,
           const DrawBank& bank, const TestingProblem& problem) {
    if (weights.size() != alt.size()) throw std::invalid_argument("wap: weights and support differ in length");
    const TargetSampler sampler(problem, bank);
    std::vector<Target> targets;
    std::vector<double> w;
    for (std::size_t j = 0; j < alt.size(); ++j)
        if (weights[j] != 0.0) {
            targets.emplace_back(alt[j]);
            w.push_back(weights[j]);
        }
    const auto p = rejection_surface(test, targets, sampler);
    Neumaier acc;
    for (std::size_t j = 0; j < p.size(); ++j) acc.add(w[j] * p[j]);
    return acc.value();
}

std::uint64_t tune_seed(const std::vector<std::uint64_t>& candidates, const Test& test,
                        const std::vector<Target>& null_points, const BankParams& bank_params,
                        const TestingProblem& problem, double alpha, bool similar,
                        std::vector<SeedScore>* scores) {
    if (candidates.empty()) throw std::invalid_argument("tune_seed: no candidate seeds");
    if (candidates.size() == 1) {
        if (scores) scores->clear();
        return candidates.front();
    }
    std::uint64_t best_seed = 0;
    double best = std::numeric_limits<double>::infinity();
    if (scores) scores->clear();
    for (std::uint64_t seed : candidates) {
        const DrawBank bank = build_bank(seed, bank_params.n_draws, problem.base_dim(),
                                         bank_params.standardize, bank_params.symmetrize);
        const TargetSampler sampler(problem, bank);
        const auto p = rejection_surface(test, null_points, sampler);
        double score = 0.0;
        for (double v : p) score = std::max(score, similar ? std::abs(v - alpha) : std::max(v - alpha, 0.0));
        if (scores) scores->push_back({seed, score});
        if (score < best || (score == best && seed < best_seed)) {
            best = score;
            best_seed = seed;
        }
    }
    return best_seed;
}

}  // namespace ape
