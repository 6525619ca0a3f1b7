#include <gtest/gtest.h>

#include <gsl/gsl_cdf.h>
#include <gsl/gsl_sf_bessel.h>
#include <gsl/gsl_sf_gamma.h>

#include <cmath>

#include "ape/special_functions.hpp"

using namespace ape;

namespace {

double gsl_log_scaled_bessel(double nu, double x) {
    return std::log(gsl_sf_bessel_Inu_scaled(nu, x)) + x - nu * std::log(x);
}

}  // namespace

TEST(Special, NormalQuantilesAgainstGsl) {
    for (double p : {1e-10, 1e-4, 0.025, 0.3, 0.5, 0.9, 0.975, 1 - 1e-8})
        EXPECT_NEAR(normal_quantile(p), gsl_cdf_ugaussian_Pinv(p), 1e-9 * std::max(1.0, std::abs(normal_quantile(p))));
    EXPECT_NEAR(normal_quantile(0.975), 1.959964, 1e-6);
    EXPECT_THROW(normal_quantile(0.0), std::domain_error);
}

TEST(Special, NormalCdfPdf) {
    for (double x : {-8.0, -2.0, -0.3, 0.0, 1.0, 5.0}) {
        EXPECT_NEAR(normal_cdf(x), gsl_cdf_ugaussian_P(x), 1e-15);
        EXPECT_NEAR(normal_pdf(x), std::exp(-0.5 * x * x) / std::sqrt(2 * M_PI), 1e-16);
    }
}

TEST(Special, ChiSquaredQuantile) {
    EXPECT_NEAR(chi_squared_quantile(0.95, 1.0), 3.84146, 1e-5);
    EXPECT_NEAR(chi_squared_quantile(0.95, 5.0), gsl_cdf_chisq_Pinv(0.95, 5.0), 1e-9);
}

TEST(Special, LogNormalIntervalTails) {
    EXPECT_NEAR(log_normal_interval(-1.0, 1.0), std::log(gsl_cdf_ugaussian_P(1.0) - gsl_cdf_ugaussian_P(-1.0)), 1e-14);
    // Far upper tail: Q(a) - Q(b) with complementary CDFs.
    const double a = 30.0, b = 31.0;
    const double ref = std::log(gsl_cdf_ugaussian_Q(a) - gsl_cdf_ugaussian_Q(b));
    EXPECT_NEAR(log_normal_interval(a, b), ref, 1e-9 * std::abs(ref));
    EXPECT_NEAR(log_normal_interval(-b, -a), ref, 1e-9 * std::abs(ref));
    EXPECT_TRUE(std::isfinite(log_normal_interval(-40.0, -39.9)));
}

TEST(Special, LogScaledBesselAgainstGsl) {
    for (double nu : {0.5, 1.5, 4.0}) {
        for (double x : {1e-6, 0.01, 0.5, 1.0, 3.0, 7.5, 15.0, 40.0, 120.0, 700.0, 5000.0}) {
            const double ref = gsl_log_scaled_bessel(nu, x);
            EXPECT_NEAR(log_scaled_bessel_i(nu, x), ref, 1e-10 * std::max(1.0, std::abs(ref))) << nu << ' ' << x;
        }
        EXPECT_NEAR(log_scaled_bessel_i(nu, 0.0), -nu * std::log(2.0) - std::lgamma(nu + 1.0), 1e-15);
    }
}

TEST(Special, BesselTableAccuracy) {
    for (double nu : {1.5, 4.0}) {
        const LogScaledBesselTable table(nu);
        double worst = 0.0;
        for (double x = 0.0; x < 200.0; x += 0.0137) {
            const double ref = x == 0.0 ? -nu * std::log(2.0) - std::lgamma(nu + 1.0) : gsl_log_scaled_bessel(nu, x);
            worst = std::max(worst, std::abs(table(x) - ref));
        }
        EXPECT_LT(worst, 1e-10) << nu;
    }
}

TEST(Special, BesselRatio) {
    for (double nu : {1.5, 4.0})
        for (double x : {0.1, 2.0, 30.0, 400.0}) {
            const double ref = gsl_sf_bessel_Inu_scaled(nu + 1, x) / gsl_sf_bessel_Inu_scaled(nu, x);
            EXPECT_NEAR(bessel_i_ratio(nu, x), ref, 1e-10);
        }
}
