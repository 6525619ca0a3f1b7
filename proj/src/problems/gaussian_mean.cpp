#include "ape/problems/gaussian_mean.hpp"

#include <cmath>

#include "ape/special_functions.hpp"

namespace ape {

void GaussianMeanProblem::sample(std::span<const double> base, const ParameterPoint& theta,
                                 std::span<double> y) const {
    y[0] = theta[0] + base[0];
}

double GaussianMeanProblem::log_density(const ParameterPoint& theta, std::span<const double> y) const {
    const double u = y[0] - theta[0];
    return -0.5 * u * u;
}

void GaussianMeanProblem::log_density_batch(const ParameterPoint& theta, std::span<const double> ys,
                                            std::span<double> out) const {
    const double b = theta[0];
    for (std::size_t m = 0; m < out.size(); ++m) {
        const double u = ys[m] - b;
        out[m] = -0.5 * u * u;
    }
}

double t_test(double y, double alpha) {
    return std::abs(y) > normal_quantile(1.0 - alpha / 2.0) ? 1.0 : 0.0;
}

TestPtr make_t_test(double alpha, std::size_t index, double center) {
    const double z = normal_quantile(1.0 - alpha / 2.0);
    return std::make_shared<LambdaTest>("t-test", [z, index, center](std::span<const double> y) {
        return std::abs(y[index] - center) > z ? 1.0 : 0.0;
    });
}

}  // namespace ape
