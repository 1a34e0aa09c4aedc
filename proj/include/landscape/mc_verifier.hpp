// Desk-scale Monte Carlo verification: GOE sampling, the conditional Hessian
// law, index counting through the principal-minor decomposition, and
// empirical estimators for the rate functions and the complexity constants.
//
// All estimators draw one sample per RNG chunk (chunk = sample index), reduce
// in index order, and are therefore reproducible for any worker count.

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "landscape/complexity.hpp"
#include "landscape/rate_functions.hpp"
#include "landscape/rng.hpp"
#include "landscape/semicircle.hpp"
#include "landscape/structure_function.hpp"

namespace landscape::mc {

// Symmetric Gaussian matrix with E M_ij^2 = (1 + delta_ij) / (2n).
struct GOESample {
    int n = 0;
    Eigen::MatrixXd matrix;
    Eigen::VectorXd eigenvalues;  // ascending
};

inline Eigen::MatrixXd goe_matrix(int n, RngStream& rng) {
    Eigen::MatrixXd m(n, n);
    const double diag_sd = 1.0 / std::sqrt(static_cast<double>(n));
    const double off_sd = 1.0 / std::sqrt(2.0 * n);
    for (int i = 0; i < n; ++i) {
        m(i, i) = diag_sd * rng.normal();
        for (int j = i + 1; j < n; ++j) {
            const double v = off_sd * rng.normal();
            m(i, j) = v;
            m(j, i) = v;
        }
    }
    return m;
}

inline Eigen::VectorXd goe_eigenvalues(int n, RngStream& rng) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(goe_matrix(n, rng),
                                                      Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

inline GOESample sample_goe(int n, uint64_t seed, uint64_t chunk = 0) {
    if (n < 1) throw std::invalid_argument("sample_goe: n must be >= 1");
    RngStream rng(seed, chunk);
    GOESample s;
    s.n = n;
    s.matrix = goe_matrix(n, rng);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s.matrix, Eigen::EigenvaluesOnly);
    s.eigenvalues = es.eigenvalues();
    return s;
}

// One draw of the conditional Hessian block matrix
//   G = [ z1'  xi^T                                            ]
//       [ xi   sqrt(-4 D''(0)) ( sqrt((n-1)/n) GOE_{n-1} - z3' I ) ]
// with zeta = z1' - xi^T G_**^{-1} xi computed through the eigendecomposition
// of the minor.
struct HessianSample {
    int n = 0;
    Eigen::MatrixXd g;
    double z1p = 0.0;
    double z3p = 0.0;
    Eigen::VectorXd xi;
    double zeta = 0.0;
    Eigen::VectorXd minor_eigenvalues;  // of G_**, ascending
    int resample_count = 0;
};

inline HessianSample sample_conditional_hessian(const FieldParams& fp, int n,
                                                double rho, double u, RngStream& rng) {
    if (n < 2) throw std::invalid_argument("sample_conditional_hessian: n >= 2");
    const GeometryCoeffs gc = geometry_coeffs(fp, rho, u, -2.0);  // y only feeds a
    const double d2_0 = fp.D.eval(0.0).d2;
    const double root4 = std::sqrt(-4.0 * d2_0);
    const double sigma1 = std::sqrt(gc.n_sigma1_sq / n);
    const double sigma2 = std::sqrt(gc.n_sigma2_sq / n);
    const double mix_sd = std::sqrt(gc.alpha * gc.t) * rho / std::sqrt(n);
    const double xi_sd = std::sqrt(-2.0 * d2_0 / n);
    const double scale = std::sqrt((n - 1.0) / n);

    HessianSample hs;
    hs.n = n;
    for (int attempt = 0;; ++attempt) {
        const double z1 = rng.normal(), z2 = rng.normal(), z3 = rng.normal();
        hs.z1p = sigma1 * z1 - sigma2 * z2 + gc.m1;
        hs.z3p = (sigma2 * z2 + mix_sd * z3 - gc.m2) / root4;
        Eigen::MatrixXd goe = goe_matrix(n - 1, rng);
        hs.xi.resize(n - 1);
        for (int i = 0; i < n - 1; ++i) hs.xi(i) = xi_sd * rng.normal();

        Eigen::MatrixXd minor =
            root4 * (scale * goe - hs.z3p * Eigen::MatrixXd::Identity(n - 1, n - 1));
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(minor);
        const Eigen::VectorXd& ev = es.eigenvalues();
        if (ev.cwiseAbs().minCoeff() < 1e-12) {
            hs.resample_count = attempt + 1;
            continue;  // z3' collided with a minor eigenvalue
        }
        const Eigen::VectorXd proj = es.eigenvectors().transpose() * hs.xi;
        double quad = 0.0;
        for (int i = 0; i < n - 1; ++i) quad += proj(i) * proj(i) / ev(i);
        hs.zeta = hs.z1p - quad;
        hs.minor_eigenvalues = ev;
        hs.g.resize(n, n);
        hs.g(0, 0) = hs.z1p;
        hs.g.block(0, 1, 1, n - 1) = hs.xi.transpose();
        hs.g.block(1, 0, n - 1, 1) = hs.xi;
        hs.g.block(1, 1, n - 1, n - 1) = minor;
        return hs;
    }
}

inline HessianSample sample_conditional_hessian(const FieldParams& fp, int n,
                                                double rho, double u, uint64_t seed,
                                                uint64_t chunk = 0) {
    RngStream rng(seed, chunk);
    return sample_conditional_hessian(fp, n, rho, u, rng);
}

// Index = number of negative eigenvalues.
inline int matrix_index(const Eigen::MatrixXd& sym) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
    return static_cast<int>(
        (es.eigenvalues().array() < 0.0).count());
}

// Monte Carlo estimate with its provenance.
struct EstimatorReport {
    std::string name;
    double estimate = 0.0;
    double stderr_ = 0.0;
    long n_samples = 0;
    int n_dim = 0;
    double target = 0.0;
    uint64_t seed = 0;
};

namespace detail {

inline double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// 1.4826 * MAD / sqrt(n): robust scale of the sample median
inline double median_stderr(const std::vector<double>& v, double med) {
    std::vector<double> dev(v.size());
    for (size_t i = 0; i < v.size(); ++i) dev[i] = std::fabs(v[i] - med);
    return 1.4826 * median_of(dev) / std::sqrt(static_cast<double>(v.size()));
}

// log of the mean of exp(a_i), max-shifted
inline double log_mean_exp(const std::vector<double>& a, double* rel_se = nullptr) {
    const double mx = *std::max_element(a.begin(), a.end());
    double s = 0.0, s2 = 0.0;
    for (double x : a) {
        const double e = std::exp(x - mx);
        s += e;
        s2 += e * e;
    }
    const double n = static_cast<double>(a.size());
    const double mean = s / n;
    if (rel_se) {
        const double var = std::max(0.0, s2 / n - mean * mean);
        *rel_se = std::sqrt(var / n) / mean;
    }
    return mx + std::log(mean);
}

}  // namespace detail

// Median of Q(y) = (sqrt(-D''(0)) / n) sum Z_i^2 / (sqrt((n-1)/n) lambda_i - y)
// over GOE_{n-1} draws, against the almost-sure limit sqrt(-D''(0)) m(y).
// The median, not the mean: Q(y) is heavy-tailed and has no finite mean.
inline EstimatorReport estimate_q(const FieldParams& fp, int n, double y,
                                  long n_samples, uint64_t seed, int threads = 0) {
    if (!(y < -kSqrt2)) throw std::domain_error("estimate_q: y must be < -sqrt(2)");
    const double sd = std::sqrt(-fp.D.eval(0.0).d2);
    const double scale = std::sqrt((n - 1.0) / n);
    auto vals = chunked_map<double>(seed, n_samples, threads, [&](long, RngStream& rng) {
        const Eigen::VectorXd ev = goe_eigenvalues(n - 1, rng);
        double acc = 0.0;
        for (int i = 0; i < n - 1; ++i) {
            const double z = rng.normal();
            acc += z * z / (scale * ev(i) - y);
        }
        return sd * acc / n;
    });
    EstimatorReport rep;
    rep.name = "q_median";
    rep.estimate = detail::median_of(vals);
    rep.stderr_ = detail::median_stderr(vals, rep.estimate);
    rep.n_samples = n_samples;
    rep.n_dim = n;
    rep.target = sd * stieltjes_m(y);
    rep.seed = seed;
    return rep;
}

// (1/(n-1)) Lambda_n(n t) with the chi-squares integrated out analytically:
//   [n t m(y) + log E exp(-1/2 sum_{i=ell}^{n-1} log(1 + 2 t f_{y,delta}(lambda_i)))] / (n-1),
// against the closed-form Lambda(t; f_{y,delta}). ell is 1-based.
inline EstimatorReport estimate_lambda(int n, double y, double delta, double t, int ell,
                                       long n_samples, uint64_t seed, int threads = 0) {
    TruncatedResolvent f(y, delta);
    if (!(t > -0.5 * delta))
        throw std::domain_error("estimate_lambda: need t > -delta/2");
    if (ell < 1) throw std::invalid_argument("estimate_lambda: ell >= 1");
    auto exps = chunked_map<double>(seed, n_samples, threads, [&](long, RngStream& rng) {
        const Eigen::VectorXd ev = goe_eigenvalues(n - 1, rng);
        double acc = 0.0;
        for (int i = ell - 1; i < n - 1; ++i) acc += std::log1p(2.0 * t * f(ev(i)));
        return -0.5 * acc;
    });
    double rel_se = 0.0;
    const double lme = detail::log_mean_exp(exps, &rel_se);
    EstimatorReport rep;
    rep.name = "lambda";
    rep.estimate = (n * t * stieltjes_m(y) + lme) / (n - 1.0);
    rep.stderr_ = rel_se / (n - 1.0);
    rep.n_samples = n_samples;
    rep.n_dim = n;
    rep.target = lambda_transform(y, delta, t);
    rep.seed = seed;
    return rep;
}

// (1/n) log E_{GOE(n+1)} exp((n+1) phi(lambda_{k+1})),
// phi(x) = -x^2/2 - mu x / sqrt(-D''(0)); the Varadhan limit is I_k.
inline EstimatorReport estimate_ik(const FieldParams& fp, int n, int k, long n_samples,
                                   uint64_t seed, int threads = 0) {
    if (k < 0 || n < k + 2) throw std::invalid_argument("estimate_ik: need n >= k+2");
    const double sd = std::sqrt(-fp.D.eval(0.0).d2);
    const double mu = fp.mu;
    auto exps = chunked_map<double>(seed, n_samples, threads, [&](long, RngStream& rng) {
        const Eigen::VectorXd ev = goe_eigenvalues(n + 1, rng);
        const double lam = ev(k);
        return (n + 1.0) * (-0.5 * lam * lam - mu * lam / sd);
    });
    double rel_se = 0.0;
    const double lme = detail::log_mean_exp(exps, &rel_se);
    EstimatorReport rep;
    rep.name = "ik";
    rep.estimate = lme / n;
    rep.stderr_ = rel_se / n;
    rep.n_samples = n_samples;
    rep.n_dim = n;
    rep.target = rate_ik(mu, fp.D.eval(0.0).d2, k).value;
    rep.seed = seed;
    return rep;
}

// (1/n) log P( m(y) - (1/n) sum_{i=ell} f_{y,delta}(lambda_i) Z_i^2 >= s )
// by direct counting, against -Lambda*(s; f_{y,delta}). Refuses configurations
// whose predicted probability is below 1e-5 at this n: no events would be
// seen at desk scale and a silent -inf would be dishonest.
inline EstimatorReport estimate_tail(int n, double y, double delta, double s, int ell,
                                     long n_samples, uint64_t seed, int threads = 0) {
    TruncatedResolvent f(y, delta);
    const double m = stieltjes_m(y);
    if (!(s >= 0.0 && s < m))
        throw std::domain_error("estimate_tail: need 0 <= s < m(y)");
    if (ell < 1) throw std::invalid_argument("estimate_tail: ell >= 1");
    const double rate = lambda_star(y, delta, s);
    if (std::exp(-n * rate) < 1e-5)
        throw std::domain_error(
            "estimate_tail: predicted probability below 1e-5 at this n; "
            "increase n_samples scale or lower s");
    auto hits = chunked_map<int>(seed, n_samples, threads, [&](long, RngStream& rng) {
        const Eigen::VectorXd ev = goe_eigenvalues(n - 1, rng);
        double acc = 0.0;
        for (int i = ell - 1; i < n - 1; ++i) {
            const double z = rng.normal();
            acc += f(ev(i)) * z * z;
        }
        return (m - acc / n >= s) ? 1 : 0;
    });
    const long count = std::accumulate(hits.begin(), hits.end(), 0L);
    EstimatorReport rep;
    rep.name = "tail";
    const double p = static_cast<double>(count) / n_samples;
    rep.estimate = count > 0 ? std::log(p) / n : -kInf;
    rep.stderr_ = count > 0 ? std::sqrt((1.0 - p) / (p * n_samples)) / n : kInf;
    rep.n_samples = n_samples;
    rep.n_dim = n;
    rep.target = -rate;
    rep.seed = seed;
    return rep;
}

}  // namespace landscape::mc
