#pragma once

#include <vector>

namespace ape {

double normal_cdf(double x);
double normal_pdf(double x);
double normal_quantile(double p);
double chi_squared_quantile(double p, double df);

/// log(Phi(b) - Phi(a)) for a < b, accurate in both tails.
double log_normal_interval(double a, double b);

/// log(x^{-nu} I_nu(x)), the rotation-averaged factor of the noncentral
/// Wishart density. Finite at x = 0 where it equals -nu log 2 - lgamma(nu+1).
/// Direct evaluation: power series for small x, Hankel expansion otherwise.
double log_scaled_bessel_i(double nu, double x);

/// d/dx log(x^{-nu} I_nu(x)) = I_{nu+1}(x) / I_nu(x).
double bessel_i_ratio(double nu, double x);

/// Tabulated log(x^{-nu} I_nu(x)) with cubic Hermite interpolation on
/// [0, table_max] and the Hankel expansion beyond. Absolute error is below
/// 1e-10 over the whole range.
class LogScaledBesselTable {
public:
    explicit LogScaledBesselTable(double nu, double table_max = 64.0, int nodes_per_unit = 64);

    double operator()(double x) const;
    double nu() const { return nu_; }

private:
    double nu_;
    double table_max_;
    double step_;
    double inv_step_;
    std::vector<double> value_;
    std::vector<double> slope_;
};

}  // namespace ape
