#pragma once

#include <array>
#include <memory>

#include "ape/problem.hpp"
#include "ape/special_functions.hpp"

namespace ape {

enum class IvDesign { FixedOmega, FixedSigma };

/// Homoskedastic linear IV model with k instruments, reduced to the
/// maximal invariant Q = (Q_S, Q_ST, Q_T). Parameter theta = (beta, lambda).
///
/// Fixed-Omega: Omega = [[1, r], [r, 1]] for every beta.
/// Fixed-Sigma: Omega(beta) = [[1 + 2 beta r + beta^2, r + beta], [r + beta, 1]].
class LinearIvProblem final : public TestingProblem {
public:
    LinearIvProblem(int k, IvDesign design, double correlation, double beta0 = 0.0);

    std::string name() const override { return "linear-iv"; }
    std::size_t base_dim() const override { return 2 * static_cast<std::size_t>(k_); }
    std::size_t obs_dim() const override { return 3; }
    std::size_t param_dim() const override { return 2; }

    /// S = s + c sqrt(lambda) e1, T = t + d sqrt(lambda) e1.
    void sample(std::span<const double> base, const ParameterPoint& theta,
                std::span<double> y) const override;
    /// log f_{beta,lambda}(Q) - log f_{beta0,0}(Q).
    double log_density(const ParameterPoint& theta, std::span<const double> y) const override;
    void log_density_batch(const ParameterPoint& theta, std::span<const double> ys,
                           std::span<double> out) const override;

    bool in_null(const ParameterPoint& theta) const override;
    bool in_alt(const ParameterPoint& theta) const override;
    ParameterPoint reference_point() const override { return {beta0_, 0.0}; }

    struct MeanCoefficients {
        double c;
        double d;
    };
    MeanCoefficients mean_coefficients(double beta) const;

    /// Reduced-form covariance at beta (constant under fixed-Omega).
    std::array<double, 3> omega(double beta) const;

    int k() const { return k_; }
    IvDesign design() const { return design_; }
    double correlation() const { return r_; }
    double beta0() const { return beta0_; }

private:
    int k_;
    IvDesign design_;
    double r_;
    double beta0_;
    std::shared_ptr<const LogScaledBesselTable> bessel_;
    double log_g0_;
};

/// Q from explicit k-vectors S and T.
std::array<double, 3> cross_products(std::span<const double> s, std::span<const double> t);

/// LR = (Q_S - Q_T + sqrt((Q_S - Q_T)^2 + 4 Q_ST^2)) / 2.
double clr_statistic(std::span<const double> q);

/// Q_ST^2 / Q_T.
double lm_statistic(std::span<const double> q);
double lm_test(std::span<const double> q, double alpha);
TestPtr make_lm_test(double alpha);

/// Defers to the LM test when Q_T > switch_point.
SwitchingRule make_iv_switching(double alpha, double switch_point, double standard_start);

}  // namespace ape
