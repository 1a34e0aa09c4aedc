#include <catch2/catch_amalgamated.hpp>

#include "landscape/semicircle.hpp"
#include "support/quadrature.hpp"

#include <cmath>

using namespace landscape;

namespace {
double psi_star_quadrature(double x) {
    auto f = [x](double t) { return std::log(std::fabs(x - t)) * semicircle_density(t); };
    return oracle::integrate(f, -kSqrt2, kSqrt2, {x}, 1e-12);
}
}  // namespace

TEST_CASE("psi_star closed form") {
    // frozen branch values
    CHECK(psi_star_potential(0.0) == Catch::Approx(-0.5 - 0.5 * std::log(2.0)).epsilon(1e-15));
    CHECK(psi_star_potential(0.0) == Catch::Approx(-0.84657359027997265).epsilon(1e-14));
    // branch continuity at |x| = sqrt2
    CHECK(psi_star_potential(kSqrt2) ==
          Catch::Approx(1.0 - 0.5 - 0.5 * std::log(2.0)).epsilon(1e-13));
    CHECK(psi_star_potential(std::nextafter(kSqrt2, 2.0)) ==
          Catch::Approx(psi_star_potential(kSqrt2)).margin(1e-12));
    // outer-branch value against the quadrature oracle
    CHECK(psi_star_potential(3.0) == Catch::Approx(1.0691291347799284).epsilon(1e-12));
    CHECK(psi_star_potential(3.0) == Catch::Approx(psi_star_quadrature(3.0)).margin(1e-8));
    // even
    for (double x : {0.3, 1.0, 2.5, 7.0})
        CHECK(psi_star_potential(x) == Catch::Approx(psi_star_potential(-x)).epsilon(1e-15));
}

TEST_CASE("psi_star quadratic gap bound") {
    // Psi_*(x) - x^2/2 <= -1/2 - (1/2) log 2 on a grid
    const double cap = -0.5 - 0.5 * std::log(2.0);
    for (int i = 0; i <= 200; ++i) {
        const double x = -10.0 + 20.0 * i / 200.0;
        CHECK(psi_star_potential(x) - 0.5 * x * x <= cap + 1e-12);
    }
}

TEST_CASE("stieltjes transform") {
    CHECK(stieltjes_m(-kSqrt2) == Catch::Approx(kSqrt2).epsilon(1e-14));
    CHECK(stieltjes_m(-2.0) == Catch::Approx(2.0 - kSqrt2).epsilon(1e-14));
    // quadrature oracle at y = -2
    auto f = [](double x) { return semicircle_density(x) / (x + 2.0); };
    CHECK(stieltjes_m(-2.0) ==
          Catch::Approx(oracle::integrate(f, -kSqrt2, kSqrt2)).margin(1e-10));
    // decay: m(y) * (-y) -> 1
    CHECK(stieltjes_m(-1e4) * 1e4 == Catch::Approx(1.0).margin(1e-6));
    // strictly increasing on the domain
    double prev = stieltjes_m(-50.0);
    for (double y = -40.0; y <= -kSqrt2; y += 0.7) {
        const double cur = stieltjes_m(y);
        CHECK(cur > prev);
        prev = cur;
    }
    CHECK_THROWS_AS(stieltjes_m(-1.0), std::domain_error);
}

TEST_CASE("rate function J1") {
    CHECK(rate_j1(-kSqrt2) == Catch::Approx(0.0).margin(1e-14));
    CHECK(rate_j1(-1.0) == kInf);
    // frozen value, cross-checked against the defining integral
    CHECK(rate_j1(-2.0) == Catch::Approx(0.53283997535355202).epsilon(1e-13));
    auto speed = [](double z) { return std::sqrt(z * z - 2.0); };
    CHECK(rate_j1(-2.0) ==
          Catch::Approx(oracle::integrate(speed, -2.0, -kSqrt2)).margin(1e-9));
    // derivative identity d/dy J1 = -sqrt(y^2 - 2)
    for (double y : {-1.5, -2.0, -3.0, -7.0}) {
        const double h = 1e-5;
        const double fd = (rate_j1(y + h) - rate_j1(y - h)) / (2.0 * h);
        CHECK(fd == Catch::Approx(-std::sqrt(y * y - 2.0)).margin(1e-6));
    }
    // J1(y) = -log(2)/2 - y sqrt(y^2-2)/2 + log m(y) on a grid
    for (double y = -10.0; y <= -kSqrt2 - 1e-3; y += 0.113) {
        const double rhs = -0.5 * std::log(2.0) - 0.5 * y * std::sqrt(y * y - 2.0) +
                           std::log(stieltjes_m(y));
        CHECK(rate_j1(y) == Catch::Approx(rhs).margin(1e-12));
    }
    // J_k = k J1; J_0 = 0 even past the edge
    CHECK(rate_jk(3, -2.0) == Catch::Approx(3.0 * rate_j1(-2.0)).epsilon(1e-15));
    CHECK(rate_jk(0, -1.0) == 0.0);
}

TEST_CASE("semicircle quantiles") {
    CHECK(quantile_s_gamma(0.5) == Catch::Approx(0.0).margin(1e-12));
    // derived value via bisection on the analytic CDF, cross-checked by quadrature
    const double s25 = quantile_s_gamma(0.25);
    CHECK(s25 == Catch::Approx(-0.57130374654537772).margin(1e-9));
    const double mass = oracle::integrate(semicircle_density, -kSqrt2, s25);
    CHECK(mass == Catch::Approx(0.25).margin(1e-9));
    // monotone approach to the support edge
    CHECK(quantile_s_gamma(1e-3) > -kSqrt2);
    CHECK(quantile_s_gamma(1e-4) > -kSqrt2);
    CHECK(quantile_s_gamma(1e-4) < quantile_s_gamma(1e-3));
    // CDF round trip
    for (int i = 1; i <= 99; ++i) {
        const double g = i / 100.0;
        CHECK(semicircle_cdf(quantile_s_gamma(g)) == Catch::Approx(g).margin(1e-9));
    }
    CHECK_THROWS_AS(quantile_s_gamma(0.0), std::domain_error);
    CHECK_THROWS_AS(quantile_s_gamma(1.0), std::domain_error);
}

TEST_CASE("empirical log potential") {
    EmpiricalSpectrum one({0.0});
    CHECK(log_potential_empirical(one, std::exp(1.0)) == Catch::Approx(1.0).epsilon(1e-15));
    EmpiricalSpectrum zeros(std::vector<double>(37, 0.0));
    CHECK(log_potential_empirical(zeros, 1.0) == Catch::Approx(0.0).margin(1e-15));
    CHECK_THROWS_AS(log_potential_empirical(zeros, 0.0), std::domain_error);
}
