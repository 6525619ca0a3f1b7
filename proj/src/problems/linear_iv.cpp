#include "ape/problems/linear_iv.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ape {

LinearIvProblem::LinearIvProblem(int k, IvDesign design, double correlation, double beta0)
    : k_(k), design_(design), r_(correlation), beta0_(beta0) {
    if (k < 1) throw std::invalid_argument("linear IV: k must be positive");
    if (!(std::abs(correlation) < 1.0)) throw std::invalid_argument("linear IV: |correlation| must be < 1");
    const double nu = 0.5 * (k - 2.0);
    if (nu < 0.0) throw std::invalid_argument("linear IV: k must be at least 2");
    bessel_ = std::make_shared<LogScaledBesselTable>(nu, 1024.0, 32);
    log_g0_ = log_scaled_bessel_i(nu, 0.0);
}

std::array<double, 3> LinearIvProblem::omega(double beta) const {
    if (design_ == IvDesign::FixedOmega) return {1.0, r_, 1.0};
    return {1.0 + 2.0 * beta * r_ + beta * beta, r_ + beta, 1.0};
}

LinearIvProblem::MeanCoefficients LinearIvProblem::mean_coefficients(double beta) const {
    const auto [o11, o12, o22] = omega(beta);
    const double det = o11 * o22 - o12 * o12;
    // b0 = (1, -beta0)', a0 = (beta0, 1)', a = (beta, 1)'
    const double b0ob0 = o11 - 2.0 * beta0_ * o12 + beta0_ * beta0_ * o22;
    // Omega^{-1} a0 = (o22 beta0 - o12, o11 - o12 beta0) / det
    const double w1 = (o22 * beta0_ - o12) / det;
    const double w2 = (o11 - o12 * beta0_) / det;
    const double a0w = beta0_ * w1 + w2;
    const double aw = beta * w1 + w2;
    return {(beta - beta0_) / std::sqrt(b0ob0), aw / std::sqrt(a0w)};
}

std::array<double, 3> cross_products(std::span<const double> s, std::span<const double> t) {
    double qs = 0.0, qst = 0.0, qt = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        qs += s[i] * s[i];
        qst += s[i] * t[i];
        qt += t[i] * t[i];
    }
    return {qs, qst, qt};
}

void LinearIvProblem::sample(std::span<const double> base, const ParameterPoint& theta,
                             std::span<double> y) const {
    if (theta[1] < 0.0) throw std::invalid_argument("linear IV: lambda must be >= 0");
    const auto k = static_cast<std::size_t>(k_);
    const auto [c, d] = mean_coefficients(theta[0]);
    const double mu = std::sqrt(theta[1]);
    const auto s = base.subspan(0, k);
    const auto t = base.subspan(k, k);
    auto q = cross_products(s, t);
    const double cm = c * mu, dm = d * mu;
    q[0] += 2.0 * cm * s[0] + cm * cm;
    q[1] += cm * t[0] + dm * s[0] + cm * dm;
    q[2] += 2.0 * dm * t[0] + dm * dm;
    y[0] = q[0];
    y[1] = q[1];
    y[2] = q[2];
}

double LinearIvProblem::log_density(const ParameterPoint& theta, std::span<const double> y) const {
    const double lambda = theta[1];
    if (lambda == 0.0) return 0.0;
    const auto [c, d] = mean_coefficients(theta[0]);
    const double xi = std::max(c * c * y[0] + 2.0 * c * d * y[1] + d * d * y[2], 0.0);
    return -0.5 * lambda * (c * c + d * d) + (*bessel_)(std::sqrt(lambda * xi)) - log_g0_;
}

void LinearIvProblem::log_density_batch(const ParameterPoint& theta, std::span<const double> ys,
                                        std::span<double> out) const {
    const double lambda = theta[1];
    if (lambda == 0.0) {
        std::fill(out.begin(), out.end(), 0.0);
        return;
    }
    const auto [c, d] = mean_coefficients(theta[0]);
    const double tilt = -0.5 * lambda * (c * c + d * d) - log_g0_;
    const double a0 = lambda * c * c, a1 = 2.0 * lambda * c * d, a2 = lambda * d * d;
    const auto& table = *bessel_;
    for (std::size_t m = 0; m < out.size(); ++m) {
        const double* q = ys.data() + 3 * m;
        const double x2 = std::max(a0 * q[0] + a1 * q[1] + a2 * q[2], 0.0);
        out[m] = tilt + table(std::sqrt(x2));
    }
}

bool LinearIvProblem::in_null(const ParameterPoint& theta) const {
    return theta[0] == beta0_ && theta[1] >= 0.0;
}

bool LinearIvProblem::in_alt(const ParameterPoint& theta) const {
    return theta[0] != beta0_ && theta[1] >= 0.0;
}

double clr_statistic(std::span<const double> q) {
    const double diff = q[0] - q[2];
    return 0.5 * (diff + std::sqrt(diff * diff + 4.0 * q[1] * q[1]));
}

double lm_statistic(std::span<const double> q) {
    if (!(q[2] > 0.0)) throw std::domain_error("LM statistic needs Q_T > 0");
    return q[1] * q[1] / q[2];
}

double lm_test(std::span<const double> q, double alpha) {
    return lm_statistic(q) > chi_squared_quantile(1.0 - alpha, 1.0) ? 1.0 : 0.0;
}

TestPtr make_lm_test(double alpha) {
    const double cv = chi_squared_quantile(1.0 - alpha, 1.0);
    return std::make_shared<LambdaTest>("lm", [cv](std::span<const double> q) {
        return lm_statistic(q) > cv ? 1.0 : 0.0;
    });
}

SwitchingRule make_iv_switching(double alpha, double switch_point, double standard_start) {
    SwitchingRule rule;
    rule.statistic = [](std::span<const double> q) { return q[2]; };
    rule.switch_point = switch_point;
    rule.standard_test = make_lm_test(alpha);
    rule.standard_region_start = standard_start;
    return rule;
}

}  // namespace ape
