// Semicircle-law toolkit: logarithmic potential, Stieltjes transform,
// extreme-eigenvalue rate functions and quantiles.
//
// Conventions: the semicircle law sc is scaled to have support [-sqrt(2), sqrt(2)]
// with density sqrt(2 - x^2) / pi. The Stieltjes transform and the rate
// function J1 live on the left of the support; J1 is +infinity to the right
// of -sqrt(2) and the infinity is an honest IEEE infinity, not a sentinel.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace landscape {

inline constexpr double kSqrt2 = 1.4142135623730951;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// sqrt(y^2 - 2), computed as sqrt((y - sqrt2)(y + sqrt2)) so the spectral
// edge maps exactly to 0 and the cancellation near it costs nothing.
inline double edge_sqrt(double y) {
    return std::sqrt(std::max((y - kSqrt2) * (y + kSqrt2), 0.0));
}

// Density of sc on [-sqrt2, sqrt2], zero outside.
inline double semicircle_density(double x) {
    const double t = 2.0 - x * x;
    return t > 0.0 ? std::sqrt(t) / M_PI : 0.0;
}

// CDF of sc: (1/pi) * Integral_{-sqrt2}^{s} sqrt(2 - x^2) dx.
inline double semicircle_cdf(double s) {
    if (s <= -kSqrt2) return 0.0;
    if (s >= kSqrt2) return 1.0;
    return 0.5 + (0.5 * s * std::sqrt(2.0 - s * s) + std::asin(s / kSqrt2)) / M_PI;
}

// Log-potential of the semicircle law, Psi_*(x) = Integral log|x-t| sc(dt).
// Two closed-form branches; even in x.
inline double psi_star_potential(double x) {
    const double ax = std::fabs(x);
    const double inner = 0.5 * x * x - 0.5 - 0.5 * std::log(2.0);
    if (ax <= kSqrt2) return inner;
    const double s = edge_sqrt(ax);
    return inner - 0.5 * std::log(2.0) - 0.5 * ax * s + std::log(ax + s);
}

// Stieltjes transform of sc for y <= -sqrt2:
//   m(y) = Integral (x - y)^{-1} sc(dx) = -y - sqrt(y^2 - 2).
// Rationalized form 2 / (-y + sqrt(y^2-2)) stays accurate as y -> -inf.
inline double stieltjes_m(double y) {
    if (y > -kSqrt2) throw std::domain_error("stieltjes_m: y must be <= -sqrt(2)");
    return 2.0 / (-y + edge_sqrt(y));
}

// Large-deviation rate of the smallest GOE eigenvalue at level y:
// zero at the edge, +infinity to the right of it.
inline double rate_j1(double y) {
    if (y > -kSqrt2) return kInf;
    const double s = edge_sqrt(y);
    return 0.5 * std::log(2.0) - 0.5 * y * s - std::log(-y + s);
}

// Rate for the k-th smallest eigenvalue, J_k = k * J1. J_0 is identically 0.
inline double rate_jk(int k, double y) {
    if (k < 0) throw std::invalid_argument("rate_jk: k must be >= 0");
    if (k == 0) return 0.0;
    return static_cast<double>(k) * rate_j1(y);
}

// gamma-quantile of sc: the root of semicircle_cdf(s) = gamma.
// Bisection on the analytic CDF followed by Newton polish.
inline double quantile_s_gamma(double gamma) {
    if (!(gamma > 0.0 && gamma < 1.0))
        throw std::domain_error("quantile_s_gamma: gamma must lie in (0,1)");
    double lo = -kSqrt2, hi = kSqrt2;
    for (int i = 0; i < 80; ++i) {
        const double mid = 0.5 * (lo + hi);
        (semicircle_cdf(mid) < gamma ? lo : hi) = mid;
    }
    double s = 0.5 * (lo + hi);
    for (int i = 0; i < 4; ++i) {
        const double d = semicircle_density(s);
        if (d <= 0.0) break;
        s -= (semicircle_cdf(s) - gamma) / d;
        s = std::clamp(s, -kSqrt2, kSqrt2);
    }
    return s;
}

// Empirical spectrum of a symmetric matrix; eigenvalues kept sorted.
struct EmpiricalSpectrum {
    std::vector<double> eigenvalues;
    int n = 0;

    explicit EmpiricalSpectrum(std::vector<double> evs)
        : eigenvalues(std::move(evs)), n(static_cast<int>(eigenvalues.size())) {
        std::sort(eigenvalues.begin(), eigenvalues.end());
    }
};

// Psi(L(lambda), y) = (1/n) sum log|lambda_i - y|.
inline double log_potential_empirical(const EmpiricalSpectrum& spec, double y) {
    if (spec.eigenvalues.empty())
        throw std::invalid_argument("log_potential_empirical: empty spectrum");
    double acc = 0.0;
    for (double lam : spec.eigenvalues) {
        const double d = std::fabs(lam - y);
        if (d == 0.0)
            throw std::domain_error("log_potential_empirical: y equals an eigenvalue");
        acc += std::log(d);
    }
    return acc / static_cast<double>(spec.eigenvalues.size());
}

}  // namespace landscape
