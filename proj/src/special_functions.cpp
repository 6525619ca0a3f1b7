#include "ape/special_functions.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

namespace ape {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error("normal_quantile: p must lie in (0,1)");
    return boost::math::quantile(boost::math::normal_distribution<>(), p);
}

double chi_squared_quantile(double p, double df) {
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error("chi_squared_quantile: p must lie in (0,1)");
    return boost::math::quantile(boost::math::chi_squared_distribution<>(df), p);
}

namespace {

// log of the upper tail 1 - Phi(x).
double log_upper_tail(double x) {
    if (x < 5.0) return std::log(0.5 * std::erfc(x / std::numbers::sqrt2));
    // Mills-ratio continued fraction keeps precision far in the tail.
    double cf = x;
    for (int k = 40; k >= 1; --k) cf = x + k / cf;
    return -0.5 * x * x - 0.5 * std::log(2.0 * std::numbers::pi) - std::log(cf);
}

double log_diff_exp(double la, double lb) {  // log(e^la - e^lb), la >= lb
    if (lb == -std::numeric_limits<double>::infinity()) return la;
    return la + std::log(-std::expm1(lb - la));
}

}  // namespace

double log_normal_interval(double a, double b) {
    if (!(b > a)) return -std::numeric_limits<double>::infinity();
    if (a >= 0.0) return log_diff_exp(log_upper_tail(a), log_upper_tail(b));
    if (b <= 0.0) return log_diff_exp(log_upper_tail(-b), log_upper_tail(-a));
    // Straddles zero: no cancellation.
    return std::log(1.0 - std::exp(log_upper_tail(b)) - std::exp(log_upper_tail(-a)));
}

namespace {

constexpr double kSeriesLimit = 30.0;

double log_scaled_series(double nu, double x) {
    // x^{-nu} I_nu(x) = 2^{-nu} sum_m t^m / (m! Gamma(m+nu+1)),  t = x^2/4
    const double t = 0.25 * x * x;
    double term = 1.0;
    double sum = 1.0;
    for (int m = 0; m < 500; ++m) {
        term *= t / ((m + 1.0) * (m + nu + 1.0));
        sum += term;
        if (term < 1e-17 * sum) break;
    }
    return -nu * std::numbers::ln2 - std::lgamma(nu + 1.0) + std::log(sum);
}

// log(e^{-x} sqrt(2 pi x) I_nu(x)) from the Hankel expansion.
double log_hankel_factor(double nu, double x) {
    const double mu = 4.0 * nu * nu;
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k < 60; ++k) {
        const double odd = 2.0 * k - 1.0;
        const double next = -term * (mu - odd * odd) / (k * 8.0 * x);
        if (std::abs(next) >= std::abs(term)) break;
        term = next;
        sum += term;
        if (std::abs(term) < 1e-17 * std::abs(sum)) break;
    }
    return std::log(sum);
}

double log_scaled_hankel(double nu, double x) {
    return x - 0.5 * std::log(2.0 * std::numbers::pi * x) + log_hankel_factor(nu, x) -
           nu * std::log(x);
}

}  // namespace

double log_scaled_bessel_i(double nu, double x) {
    if (!(nu >= 0.0)) throw std::domain_error("log_scaled_bessel_i: nu must be >= 0");
    if (!(x >= 0.0) || !std::isfinite(x))
        throw std::domain_error("log_scaled_bessel_i: x must be finite and >= 0");
    return x <= kSeriesLimit ? log_scaled_series(nu, x) : log_scaled_hankel(nu, x);
}

double bessel_i_ratio(double nu, double x) {
    if (x == 0.0) return 0.0;
    // log(x^{-nu-1} I_{nu+1}) - log(x^{-nu} I_nu) = log(I_{nu+1}/I_nu) - log x
    return std::exp(log_scaled_bessel_i(nu + 1.0, x) - log_scaled_bessel_i(nu, x) + std::log(x));
}

LogScaledBesselTable::LogScaledBesselTable(double nu, double table_max, int nodes_per_unit)
    : nu_(nu), table_max_(table_max), step_(1.0 / nodes_per_unit), inv_step_(nodes_per_unit) {
    const auto n = static_cast<std::size_t>(table_max * nodes_per_unit) + 2;
    value_.resize(n);
    slope_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = static_cast<double>(i) * step_;
        value_[i] = log_scaled_bessel_i(nu, x);
        slope_[i] = bessel_i_ratio(nu, x);
    }
}

double LogScaledBesselTable::operator()(double x) const {
    if (x >= table_max_) return log_scaled_hankel(nu_, x);
    const double pos = x * inv_step_;
    const auto i = static_cast<std::size_t>(pos);
    const double t = pos - static_cast<double>(i);
    const double t2 = t * t;
    const double t3 = t2 * t;
    const double h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    const double h10 = t3 - 2.0 * t2 + t;
    const double h01 = -2.0 * t3 + 3.0 * t2;
    const double h11 = t3 - t2;
    return h00 * value_[i] + h10 * step_ * slope_[i] + h01 * value_[i + 1] +
           h11 * step_ * slope_[i + 1];
}

}  // namespace ape
