#pragma once

#include "ape/problem.hpp"

namespace ape {

/// Y ~ N(beta, 1), H0: beta = 0.
class GaussianMeanProblem final : public TestingProblem {
public:
    std::string name() const override { return "gaussian-mean"; }
    std::size_t base_dim() const override { return 1; }
    std::size_t obs_dim() const override { return 1; }
    std::size_t param_dim() const override { return 1; }

    void sample(std::span<const double> base, const ParameterPoint& theta,
                std::span<double> y) const override;
    double log_density(const ParameterPoint& theta, std::span<const double> y) const override;
    void log_density_batch(const ParameterPoint& theta, std::span<const double> ys,
                           std::span<double> out) const override;

    bool in_null(const ParameterPoint& theta) const override { return theta[0] == 0.0; }
    bool in_alt(const ParameterPoint& theta) const override { return theta[0] != 0.0; }
    ParameterPoint reference_point() const override { return {0.0}; }
};

/// 1 iff |y| > z_{1-alpha/2}.
double t_test(double y, double alpha);

/// Two-sided t-test on coordinate `index` of the observation, centered at `center`.
TestPtr make_t_test(double alpha, std::size_t index = 0, double center = 0.0);

}  // namespace ape
