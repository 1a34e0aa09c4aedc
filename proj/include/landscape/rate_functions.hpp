// Truncated-resolvent rate functions for singular Gaussian quadratic forms:
// the Lipschitz cutoff f_{y,delta}, the cumulant transform Lambda, its
// derivative, the dual Lambda*, and the exposing point tau_s.
//
// Lambda(t; f_{y,delta}) = m(y) t - (1/2) Integral log[1 + 2 f_{y,delta}(x) t] sc(dx),
// finite for t >= -delta/2 and +infinity below. On the semicircle support
// f_{y,delta} is the plain resolvent 1/(x - y), so the finite part does not
// depend on delta; delta only moves the domain edge, which is what makes
// Lambda*(s) delta-dependent for s < 0 and delta-free for s >= 0.
//
// The canonical choice delta = -sqrt2 - y is the default everywhere; the
// general-delta entry points exist for the Monte Carlo verifier.

#pragma once

#include <cmath>
#include <stdexcept>

#include "landscape/semicircle.hpp"

namespace landscape {

// Lipschitz truncation of x -> 1/(x - y): exact resolvent above y + delta,
// linear ramp on [y, y + delta), zero below y.
// Sup norm 1/delta, Lipschitz constant 1/delta^2.
struct TruncatedResolvent {
    double y;
    double delta;

    TruncatedResolvent(double y_, double delta_) : y(y_), delta(delta_) {
        if (!(y < -kSqrt2))
            throw std::domain_error("TruncatedResolvent: y must be < -sqrt(2)");
        if (!(delta > 0.0 && delta <= -kSqrt2 - y))
            throw std::domain_error("TruncatedResolvent: delta must lie in (0, -sqrt(2)-y]");
    }

    double sup_norm() const { return 1.0 / delta; }
    double lipschitz() const { return 1.0 / (delta * delta); }

    double operator()(double x) const {
        if (x >= y + delta) return 1.0 / (x - y);
        if (x >= y) return (x - y) / (delta * delta);
        return 0.0;
    }
};

inline double f_eval(const TruncatedResolvent& tr, double x) { return tr(x); }

namespace detail {

// Closed form of m(y) t - (1/2) Integral log(1 + 2t/(x-y)) sc(dx) for
// y - 2t <= -sqrt2. Needs y < -sqrt2 (or y = -sqrt2 with t > 0).
inline double lambda_closed(double y, double t) {
    const double w = y - 2.0 * t;
    const double sy = edge_sqrt(y);
    const double sw = edge_sqrt(w);
    const double m = stieltjes_m(y);
    return m * t -
           0.5 * (0.5 * w * w - 0.5 * y * y - 0.5 * y * sy + 0.5 * w * sw +
                  std::log(2.0 * t - y + sw) - std::log(-y + sy));
}

}  // namespace detail

// Lambda(t; f_{y,delta}) as an extended real.
inline double lambda_transform(double y, double delta, double t) {
    TruncatedResolvent tr(y, delta);  // validates (y, delta)
    if (t < -0.5 * delta) return kInf;
    return detail::lambda_closed(y, t);
}

// Lambda with the canonical delta = -sqrt2 - y.
inline double lambda_transform(double y, double t) {
    return lambda_transform(y, -kSqrt2 - y, t);
}

// Lambda'(t) = m(y) - m(y - 2t), for t > (sqrt2 + y)/2.
// The second transform is evaluated in rationalized form so the t -> inf
// limit m(y) comes out without cancellation.
inline double lambda_prime(double y, double t) {
    if (!(y < -kSqrt2)) throw std::domain_error("lambda_prime: y must be < -sqrt(2)");
    if (!(t >= 0.5 * (kSqrt2 + y)))
        throw std::domain_error("lambda_prime: t must be >= (sqrt(2)+y)/2");
    const double w = y - 2.0 * t;
    return stieltjes_m(y) - 2.0 / (-w + edge_sqrt(w));
}

// Right limit of Lambda' at the domain edge t = (sqrt2+y)/2:
// equals -sqrt2 + m(y).
inline double lambda_prime_edge(double y) {
    if (y > -kSqrt2) throw std::domain_error("lambda_prime_edge: y must be <= -sqrt(2)");
    return -kSqrt2 + stieltjes_m(y);
}

// Unique t with Lambda'(t) = s, for lambda_prime_edge(y) < s < m(y).
inline double tau_s(double y, double s) {
    if (!(y < -kSqrt2)) throw std::domain_error("tau_s: y must be < -sqrt(2)");
    const double m = stieltjes_m(y);
    if (!(s > lambda_prime_edge(y) && s < m))
        throw std::domain_error("tau_s: s outside the exposed range");
    return (s * s + 2.0 * s * edge_sqrt(y)) / (4.0 * (m - s));
}

enum class RateBranch { interior, linear_boundary, endpoint_s_infinity };

// Legendre dual Lambda*(s; f_{y,delta}) as an extended real, with all three
// branches. Accepts y = -sqrt2 through the continuous boundary extension
// (there the linear branch collapses to 0 for s <= 0).
inline double lambda_star(double y, double delta, double s,
                          RateBranch* branch_out = nullptr) {
    if (y > -kSqrt2) throw std::domain_error("lambda_star: y must be <= -sqrt(2)");
    const bool at_edge = !(y < -kSqrt2);
    if (!at_edge) TruncatedResolvent(y, delta);  // validate
    const double m = stieltjes_m(y);
    if (s >= m - 1e-12) {
        if (branch_out) *branch_out = RateBranch::endpoint_s_infinity;
        return kInf;
    }
    // slope at the left domain edge t = -delta/2: m(y) - m(y + delta)
    const double edge_slope =
        at_edge ? 0.0 : m - 2.0 / (-(y + delta) + edge_sqrt(y + delta));
    if (s > edge_slope) {
        if (branch_out) *branch_out = RateBranch::interior;
        // log1p keeps the pole at s = m(y) free of cancellation
        return -0.125 * s * s - 0.5 * s / m - 0.5 * std::log1p(-s / m);
    }
    if (branch_out) *branch_out = RateBranch::linear_boundary;
    if (at_edge) return 0.0;
    return -0.5 * s * delta - detail::lambda_closed(y, -0.5 * delta);
}

// Canonical-delta dual Lambda*(s; y) = Lambda*(s; f_{y, -sqrt2-y}).
inline double lambda_star(double y, double s, RateBranch* branch_out = nullptr) {
    if (y > -kSqrt2) throw std::domain_error("lambda_star: y must be <= -sqrt(2)");
    const double delta = -kSqrt2 - y;
    if (!(delta > 0.0)) {
        // y = -sqrt2 boundary extension
        const double m = kSqrt2;
        if (s >= m - 1e-12) {
            if (branch_out) *branch_out = RateBranch::endpoint_s_infinity;
            return kInf;
        }
        if (s > 0.0) {
            if (branch_out) *branch_out = RateBranch::interior;
            return -0.125 * s * s - 0.5 * s / m - 0.5 * std::log1p(-s / m);
        }
        if (branch_out) *branch_out = RateBranch::linear_boundary;
        return 0.0;
    }
    return lambda_star(y, delta, s, branch_out);
}

// Snapshot of the rate machinery at one (y, s) query.
struct RateBundle {
    double y = 0.0;
    double s = 0.0;
    double tau = 0.0;            // exposing point (domain edge on the linear branch)
    double lambda = 0.0;         // Lambda(tau)
    double lambda_prime = 0.0;   // Lambda'(tau) (= s on the interior branch)
    double lambda_star = 0.0;
    RateBranch branch = RateBranch::interior;
};

inline RateBundle rate_bundle(double y, double s) {
    RateBundle rb;
    rb.y = y;
    rb.s = s;
    rb.lambda_star = lambda_star(y, s, &rb.branch);
    switch (rb.branch) {
        case RateBranch::interior:
            rb.tau = (y < -kSqrt2) ? tau_s(y, s)
                                   : s * s / (4.0 * (kSqrt2 - s));  // boundary limit
            break;
        case RateBranch::linear_boundary:
            rb.tau = 0.5 * (kSqrt2 + y);
            break;
        case RateBranch::endpoint_s_infinity:
            rb.tau = kInf;
            rb.lambda = kInf;
            rb.lambda_prime = stieltjes_m(y);
            return rb;
    }
    rb.lambda = (y < -kSqrt2 || rb.tau > 0.0) ? detail::lambda_closed(y, rb.tau) : 0.0;
    rb.lambda_prime = (rb.branch == RateBranch::interior)
                          ? s
                          : lambda_prime_edge(y);
    return rb;
}

}  // namespace landscape
