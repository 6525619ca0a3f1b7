#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ape/draw_bank.hpp"
#include "ape/problem.hpp"

namespace ape {

/// Draws for one target: the problem sampler applied to every bank row.
/// Segment components place the mixing coordinate at the bank's stratified
/// positions.
class TargetSampler {
public:
    TargetSampler(const TestingProblem& problem, const DrawBank& bank);

    const TestingProblem& problem() const { return problem_; }
    const DrawBank& bank() const { return bank_; }
    const std::vector<double>& positions() const { return positions_; }

    /// Parameter value used for draw m of the target.
    ParameterPoint parameter(const Target& target, std::size_t m) const;
    void sample(const Target& target, std::size_t m, std::span<double> y) const;
    /// Rows [begin, end) into out (row-major, obs_dim per row).
    void sample_block(const Target& target, std::size_t begin, std::size_t end,
                      std::span<double> out) const;

private:
    const TestingProblem& problem_;
    const DrawBank& bank_;
    std::vector<double> positions_;
};

struct RejectionEstimate {
    double value = 0.0;
    std::size_t n_draws = 0;
    Target theta;
};

/// (1/N) sum_m test(y_m). NpTest arguments take a blocked log-density path
/// with identical decisions.
RejectionEstimate rejection_probability(const Test& test, const Target& theta, const DrawBank& bank,
                                        const TestingProblem& problem);
RejectionEstimate rejection_probability(const Test& test, const Target& theta,
                                        const TargetSampler& sampler);

/// Rejection probabilities at many targets, parallel over targets.
std::vector<double> rejection_surface(const Test& test, const std::vector<Target>& targets,
                                      const TargetSampler& sampler);

/// sum_j w_j * rejection_probability(test, theta_j).
double wap(const Test& test, std::span<const double> weights, const AlternativeSupport& alt,
           const DrawBank& bank, const TestingProblem& problem);

struct BankParams {
    std::size_t n_draws = 300000;
    bool standardize = true;
    bool symmetrize = false;
};

struct SeedScore {
    std::uint64_t seed;
    double score;
};

/// Seed minimizing max_theta |p(theta) - alpha| (similar tests) or
/// max_theta (p(theta) - alpha)_+ otherwise. Ties go to the smallest seed.
std::uint64_t tune_seed(const std::vector<std::uint64_t>& candidates, const Test& test,
                        const std::vector<Target>& null_points, const BankParams& bank_params,
                        const TestingProblem& problem, double alpha, bool similar,
                        std::vector<SeedScore>* scores = nullptr);

}  // namespace ape
