#pragma once

#include "ape/problem.hpp"

namespace ape {

/// Y ~ N((beta, delta), [[1, rho], [rho, 1]]) with delta >= 0 a nuisance
/// parameter on the boundary. H0: beta = beta0.
class BoundaryProblem final : public TestingProblem {
public:
    explicit BoundaryProblem(double rho, double beta0 = 0.0);

    std::string name() const override { return "boundary-iici"; }
    std::size_t base_dim() const override { return 2; }
    std::size_t obs_dim() const override { return 2; }
    std::size_t param_dim() const override { return 2; }

    void sample(std::span<const double> base, const ParameterPoint& theta,
                std::span<double> y) const override;
    /// Exact bivariate normal log density, constants included.
    double log_density(const ParameterPoint& theta, std::span<const double> y) const override;
    void log_density_batch(const ParameterPoint& theta, std::span<const double> ys,
                           std::span<double> out) const override;
    /// delta uniform on [lower, upper]: phi(y1 - beta) times a normal
    /// interval probability for y2 given y1.
    std::optional<double> segment_log_density(const UniformSegment& seg,
                                              std::span<const double> y) const override;
    bool segment_log_density_batch(const UniformSegment& seg, std::span<const double> ys,
                                   std::span<double> out) const override;

    bool in_null(const ParameterPoint& theta) const override;
    bool in_alt(const ParameterPoint& theta) const override;
    ParameterPoint reference_point() const override { return {beta0_, 0.0}; }

    double rho() const { return rho_; }
    double beta0() const { return beta0_; }

private:
    double rho_;
    double beta0_;
    double s_;  // sqrt(1 - rho^2)
    double log_norm_;
};

/// Threshold c = (1 - sqrt(1 - rho^2)) / rho * z_{1-alpha/2} of the IICI.
double iici_threshold(double rho, double alpha);

/// 1 iff beta0 lies outside the inequality-imposed confidence interval.
double iici_test(double y1, double y2, double beta0, double rho, double alpha);

TestPtr make_iici_test(double rho, double alpha, double beta0 = 0.0);

/// Defers to the t-test on Y1 when Y2 > switch_point.
SwitchingRule make_boundary_switching(double alpha, double switch_point, double standard_start,
                                      double beta0 = 0.0);

}  // namespace ape
