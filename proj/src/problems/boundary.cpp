#include "ape/problems/boundary.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "ape/problems/gaussian_mean.hpp"
#include "ape/special_functions.hpp"

namespace ape {

BoundaryProblem::BoundaryProblem(double rho, double beta0)
    : rho_(rho), beta0_(beta0), s_(std::sqrt(1.0 - rho * rho)) {
    if (!(rho > -1.0 && rho < 1.0)) throw std::invalid_argument("boundary problem: rho must lie in (-1,1)");
    log_norm_ = -std::log(2.0 * std::numbers::pi * s_);
}

void BoundaryProblem::sample(std::span<const double> base, const ParameterPoint& theta,
                             std::span<double> y) const {
    y[0] = theta[0] + base[0];
    y[1] = theta[1] + rho_ * base[0] + s_ * base[1];
}

double BoundaryProblem::log_density(const ParameterPoint& theta, std::span<const double> y) const {
    const double u1 = y[0] - theta[0];
    const double u2 = y[1] - theta[1];
    return log_norm_ - 0.5 * (u1 * u1 - 2.0 * rho_ * u1 * u2 + u2 * u2) / (s_ * s_);
}

void BoundaryProblem::log_density_batch(const ParameterPoint& theta, std::span<const double> ys,
                                        std::span<double> out) const {
    const double b = theta[0], d = theta[1];
    const double k = 0.5 / (s_ * s_);
    for (std::size_t m = 0; m < out.size(); ++m) {
        const double u1 = ys[2 * m] - b;
        const double u2 = ys[2 * m + 1] - d;
        out[m] = log_norm_ - k * (u1 * u1 - 2.0 * rho_ * u1 * u2 + u2 * u2);
    }
}

std::optional<double> BoundaryProblem::segment_log_density(const UniformSegment& seg,
                                                           std::span<const double> y) const {
    if (seg.axis != 1) return std::nullopt;
    const double u1 = y[0] - seg.anchor[0];
    const double shift = rho_ * u1 - y[1];
    const double lo = (seg.lower + shift) / s_;
    const double hi = (seg.upper + shift) / s_;
    return -0.5 * u1 * u1 - 0.5 * std::log(2.0 * std::numbers::pi) + log_normal_interval(lo, hi) -
           std::log(seg.upper - seg.lower);
}

bool BoundaryProblem::segment_log_density_batch(const UniformSegment& seg, std::span<const double> ys,
                                                std::span<double> out) const {
    if (seg.axis != 1) return false;
    const double c0 = -0.5 * std::log(2.0 * std::numbers::pi) - std::log(seg.upper - seg.lower);
    const double k = 1.0 / (s_ * std::numbers::sqrt2);
    for (std::size_t m = 0; m < out.size(); ++m) {
        const double u1 = ys[2 * m] - seg.anchor[0];
        const double shift = rho_ * u1 - ys[2 * m + 1];
        const double lo = (seg.lower + shift) * k;  // scaled by 1/sqrt(2)
        const double hi = (seg.upper + shift) * k;
        double p;
        if (lo >= 0.0 && lo < 3.5) p = 0.5 * (std::erfc(lo) - std::erfc(hi));
        else if (hi <= 0.0 && hi > -3.5) p = 0.5 * (std::erfc(-hi) - std::erfc(-lo));
        else if (lo < 0.0 && hi > 0.0) p = 1.0 - 0.5 * (std::erfc(hi) + std::erfc(-lo));
        else p = -1.0;
        const double tail = p > 0.0 ? std::log(p)
                                    : log_normal_interval(lo * std::numbers::sqrt2, hi * std::numbers::sqrt2);
        out[m] = -0.5 * u1 * u1 + c0 + tail;
    }
    return true;
}

bool BoundaryProblem::in_null(const ParameterPoint& theta) const {
    return theta[0] == beta0_ && theta[1] >= 0.0;
}

bool BoundaryProblem::in_alt(const ParameterPoint& theta) const {
    return theta[0] != beta0_ && theta[1] >= 0.0;
}

double iici_threshold(double rho, double alpha) {
    return (1.0 - std::sqrt(1.0 - rho * rho)) / rho * normal_quantile(1.0 - alpha / 2.0);
}

namespace {

double iici_decide(double y1, double y2, double beta0, double rho, double z, double c) {
    const double s = std::sqrt(1.0 - rho * rho);
    const double lower = y2 > c ? y1 - z : y1 - rho * y2 - s * z;
    const double upper = y2 > -c ? y1 + z : y1 - rho * y2 + s * z;
    return (beta0 < lower || beta0 > upper) ? 1.0 : 0.0;
}

}  // namespace

double iici_test(double y1, double y2, double beta0, double rho, double alpha) {
    return iici_decide(y1, y2, beta0, rho, normal_quantile(1.0 - alpha / 2.0), iici_threshold(rho, alpha));
}

TestPtr make_iici_test(double rho, double alpha, double beta0) {
    const double z = normal_quantile(1.0 - alpha / 2.0);
    const double c = iici_threshold(rho, alpha);
    return std::make_shared<LambdaTest>("iici", [=](std::span<const double> y) {
        return iici_decide(y[0], y[1], beta0, rho, z, c);
    });
}

SwitchingRule make_boundary_switching(double alpha, double switch_point, double standard_start,
                                      double beta0) {
    SwitchingRule rule;
    rule.statistic = [](std::span<const double> y) { return y[1]; };
    rule.switch_point = switch_point;
    rule.standard_test = make_t_test(alpha, 0, beta0);
    rule.standard_region_start = standard_start;
    return rule;
}

}  // namespace ape
