// The correlator D of a Gaussian field with isotropic increments, with its
// derivatives up to order four, plus every rho/u-dependent coefficient of the
// conditional Hessian law.
//
// The model input is D itself (with exact derivatives for the built-ins),
// never a spectral measure: everything downstream consumes only D, D', D''
// away from zero and D''''(0).

#pragma once

#include <cmath>
#include <fstream>
#include <functional>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "landscape/semicircle.hpp"

namespace landscape {

// D and its first four derivatives at one point r >= 0.
struct DerivSet {
    double d0 = 0.0, d1 = 0.0, d2 = 0.0, d3 = 0.0, d4 = 0.0;
};

class StructureFunction {
  public:
    using Evaluator = std::function<DerivSet(double)>;

    static StructureFunction log_correlator(double c, double s) {
        require_positive(c, s, "log-correlator");
        Evaluator f = [c, s](double r) {
            DerivSet d;
            const double q = s + r;
            d.d0 = c * std::log1p(r / s);
            d.d1 = c / q;
            d.d2 = -c / (q * q);
            d.d3 = 2.0 * c / (q * q * q);
            d.d4 = -6.0 * c / (q * q * q * q);
            return d;
        };
        return StructureFunction("log-correlator", std::move(f));
    }

    static StructureFunction exponential_mixture(double c, double s) {
        require_positive(c, s, "exponential-mixture");
        Evaluator f = [c, s](double r) {
            DerivSet d;
            const double e = std::exp(-s * r);
            d.d0 = -c * std::expm1(-s * r);
            d.d1 = c * s * e;
            d.d2 = -c * s * s * e;
            d.d3 = c * s * s * s * e;
            d.d4 = -c * s * s * s * s * e;
            return d;
        };
        return StructureFunction("exponential-mixture", std::move(f));
    }

    static StructureFunction make_builtin(const std::string& name,
                                          const std::vector<double>& params) {
        const double c = params.size() > 0 ? params[0] : 1.0;
        const double s = params.size() > 1 ? params[1] : 1.0;
        if (name == "log-correlator") return log_correlator(c, s);
        if (name == "exponential-mixture") return exponential_mixture(c, s);
        if (name == "user-table")
            throw std::invalid_argument(
                "make_builtin: user-table correlators load from CSV, use from_csv()");
        throw std::invalid_argument("make_builtin: unknown correlator '" + name + "'");
    }

    // Tabulated correlator on a strictly increasing grid starting at r = 0.
    // Values are interpolated by a local degree-6 Newton polynomial through
    // the seven nearest nodes. D' uses 5-point central differences with step
    // h = 1e-5 * max(1, r); the higher derivatives come from the polynomial
    // directly, since a 1e-5 step leaves no signal for d3/d4 in doubles.
    static StructureFunction from_table(std::vector<double> r, std::vector<double> d) {
        if (r.size() != d.size() || r.size() < 7)
            throw std::invalid_argument("from_table: need >= 7 matching (r, D) rows");
        if (r.front() != 0.0)
            throw std::invalid_argument("from_table: grid must start at r = 0");
        if (std::fabs(d.front()) > 1e-12)
            throw std::invalid_argument("from_table: D(0) must be 0");
        for (size_t i = 1; i < r.size(); ++i)
            if (!(r[i] > r[i - 1]))
                throw std::invalid_argument("from_table: r must be strictly increasing");
        auto grid = std::make_shared<Table>(Table{std::move(r), std::move(d)});
        const double r_max = grid->r.back();
        Evaluator f = [grid](double rr) { return grid->eval(rr); };
        return StructureFunction("user-table", std::move(f), r_max);
    }

    // Two-column CSV (r, D(r)); '#' comments and a non-numeric header row are skipped.
    static StructureFunction from_csv(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("from_csv: cannot open " + path);
        std::vector<double> r, d;
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#') continue;
            std::replace(line.begin(), line.end(), ',', ' ');
            std::istringstream ss(line);
            double a, b;
            if (ss >> a >> b) {
                r.push_back(a);
                d.push_back(b);
            }
        }
        return from_table(std::move(r), std::move(d));
    }

    DerivSet eval(double r) const {
        if (r < 0.0) throw std::domain_error("StructureFunction: r must be >= 0");
        if (r > r_max_)
            throw std::domain_error("StructureFunction: r beyond the tabulated range");
        return eval_(r);
    }
    double r_max() const { return r_max_; }
    double value(double r) const { return eval(r).d0; }
    double d1(double r) const { return eval(r).d1; }
    double d2(double r) const { return eval(r).d2; }
    const std::string& name() const { return name_; }

  private:
    struct Table {
        std::vector<double> r, d;

        DerivSet eval(double rr) const {
            const int n = static_cast<int>(r.size());
            // window of 7 nodes centered on rr
            int hi = static_cast<int>(std::lower_bound(r.begin(), r.end(), rr) - r.begin());
            int lo = std::clamp(hi - 3, 0, n - 7);
            double c[7], x[7];
            for (int i = 0; i < 7; ++i) {
                x[i] = r[lo + i];
                c[i] = d[lo + i];
            }
            for (int j = 1; j < 7; ++j)  // divided differences
                for (int i = 6; i >= j; --i) c[i] = (c[i] - c[i - 1]) / (x[i] - x[i - j]);
            auto poly = [&](double t) {
                double acc = c[6];
                for (int i = 5; i >= 0; --i) acc = acc * (t - x[i]) + c[i];
                return acc;
            };
            DerivSet out;
            out.d0 = poly(rr);
            const double h = 1e-5 * std::max(1.0, rr);
            if (rr >= 2.0 * h) {
                out.d1 = (-poly(rr + 2 * h) + 8 * poly(rr + h) - 8 * poly(rr - h) +
                          poly(rr - 2 * h)) /
                         (12.0 * h);
            } else {
                out.d1 = (poly(rr + h) - poly(std::max(rr - h, 0.0))) /
                         (h + std::min(rr, h));
            }
            // analytic derivatives of the Newton polynomial for orders 2..4
            double der[5] = {0, 0, 0, 0, 0};
            {
                // expand around rr by synthetic differentiation
                double a[7];  // Taylor coefficients at rr, degree 6 truncated at 4
                for (int i = 0; i < 7; ++i) a[i] = 0.0;
                a[0] = c[6];
                double shift[7];
                for (int i = 0; i < 7; ++i) shift[i] = rr - x[i];
                for (int i = 5; i >= 0; --i) {
                    // multiply Taylor poly by (t' + shift[i]) where t' = t - rr, add c[i]
                    for (int j = 6; j >= 1; --j) a[j] = a[j - 1] + a[j] * shift[i];
                    a[0] = a[0] * shift[i] + c[i];
                }
                double fact = 1.0;
                for (int m = 0; m <= 4; ++m) {
                    if (m > 0) fact *= m;
                    der[m] = a[m] * fact;
                }
            }
            out.d2 = der[2];
            out.d3 = der[3];
            out.d4 = der[4];
            return out;
        }
    };

    StructureFunction(std::string name, Evaluator f, double r_max = kInf)
        : name_(std::move(name)), eval_(std::move(f)), r_max_(r_max) {
        validate();
    }

    static void require_positive(double c, double s, const char* what) {
        if (!(c > 0.0) || !(s > 0.0))
            throw std::invalid_argument(std::string(what) +
                                        ": parameters must be positive (need D'(0)>0, D''(0)<0)");
    }

    void validate() const {
        const DerivSet at0 = eval_(0.0);
        if (std::fabs(at0.d0) > 1e-12)
            throw std::invalid_argument("StructureFunction: D(0) must be 0");
        if (!(at0.d1 > 0.0))
            throw std::invalid_argument("StructureFunction: D'(0) must be > 0");
        if (!(at0.d2 < 0.0))
            throw std::invalid_argument("StructureFunction: D''(0) must be < 0");
        if (!(std::fabs(at0.d4) > 0.0) || !std::isfinite(at0.d4))
            throw std::invalid_argument("StructureFunction: need 0 < |D''''(0)| < inf");
        // spot-check monotonicity and concavity on a log grid within range
        const double top = std::min(1e3, 0.98 * r_max_);
        for (double r = 1e-4; r <= top; r *= 10.0) {
            const DerivSet ds = eval_(r);
            if (ds.d1 < -1e-10 || ds.d2 > 1e-10)
                throw std::invalid_argument(
                    "StructureFunction: D must be nondecreasing and concave");
        }
    }

    std::string name_;
    Evaluator eval_;
    double r_max_ = kInf;
};

struct FieldParams {
    StructureFunction D;
    double mu = 0.0;
};

// rho -> 0 limits of the raw geometry coefficients (the coefficients
// themselves are singular at rho = 0, so the limits are a separate query):
//   t^2        -> -(2/3) D''(0)
//   alpha*t*rho^2 -> -(4/3) D''(0)
//   (alpha*rho^2)^2 -> -(8/3) D''(0)
//   N sigma_Y^2 / rho^4 -> -(3/2) D''(0)
struct SmallRhoLimits {
    double t_sq;
    double alpha_t_rho_sq;
    double alpha_rho_sq_sq;
    double sigma_y_sq_over_rho4;
};

inline SmallRhoLimits small_rho_limits(const StructureFunction& D) {
    const double d2 = D.eval(0.0).d2;
    return {-2.0 / 3.0 * d2, -4.0 / 3.0 * d2, -8.0 / 3.0 * d2, -1.5 * d2};
}

struct AssumptionReport {
    bool holds = true;
    std::vector<double> failures;  // grid rho values where an inequality fails
    bool limit_ok = true;          // rho -> 0 limit inequalities (non-strict)
};

namespace detail {

struct RawGeometry {
    double n_sigma_y_sq;  // D(rho^2) - D'(rho^2)^2 rho^2 / D'(0)
    double alpha;         // 2 D''(rho^2) / sqrt(n_sigma_y_sq)
    double t;             // (D'(rho^2) - D'(0)) / sqrt(n_sigma_y_sq)
    double d1_0, d2_0;    // D'(0), D''(0)
    DerivSet at_rho2;
};

inline RawGeometry raw_geometry(const StructureFunction& D, double rho) {
    if (!(rho > 0.0)) throw std::domain_error("geometry: rho must be > 0");
    RawGeometry g;
    const DerivSet at0 = D.eval(0.0);
    g.d1_0 = at0.d1;
    g.d2_0 = at0.d2;
    g.at_rho2 = D.eval(rho * rho);
    g.n_sigma_y_sq =
        g.at_rho2.d0 - g.at_rho2.d1 * g.at_rho2.d1 * rho * rho / g.d1_0;
    if (!(g.n_sigma_y_sq > 0.0))
        throw std::domain_error("geometry: N sigma_Y^2 <= 0 at rho (degenerate correlator)");
    const double sig = std::sqrt(g.n_sigma_y_sq);
    g.alpha = 2.0 * g.at_rho2.d2 / sig;
    g.t = (g.at_rho2.d1 - g.d1_0) / sig;
    return g;
}

}  // namespace detail

// Checks both conditional-variance inequalities
//   -2 D''(0) > (alpha rho^2 + t) t     and     -4 D''(0) > (alpha rho^2 + t) alpha rho^2
// on a geometric rho-grid in (0, rho_max], plus the rho -> 0 limits, which
// attain the bounds with equality and therefore pass non-strictly.
inline AssumptionReport check_assumptions(const StructureFunction& D, double rho_max,
                                          int n_grid) {
    if (!(rho_max > 0.0)) throw std::invalid_argument("check_assumptions: rho_max > 0");
    if (n_grid < 2) throw std::invalid_argument("check_assumptions: n_grid >= 2");
    AssumptionReport rep;
    const double d2_0 = D.eval(0.0).d2;
    const double bound1 = -2.0 * d2_0;
    const double bound2 = -4.0 * d2_0;
    const double margin = 1e-9 * std::max(bound1, bound2);
    const double lo = rho_max * 1e-4;
    for (int i = 0; i < n_grid; ++i) {
        const double rho =
            lo * std::pow(rho_max / lo, static_cast<double>(i) / (n_grid - 1));
        double lhs1, lhs2;
        try {
            const auto g = detail::raw_geometry(D, rho);
            const double ar2 = g.alpha * rho * rho;
            lhs1 = (ar2 + g.t) * g.t;
            lhs2 = (ar2 + g.t) * ar2;
        } catch (const std::domain_error&) {
            rep.holds = false;
            rep.failures.push_back(rho);
            continue;
        }
        if (lhs1 >= bound1 + margin || lhs2 >= bound2 + margin) {
            rep.holds = false;
            rep.failures.push_back(rho);
        }
    }
    const SmallRhoLimits lim = small_rho_limits(D);
    const double lim1 = lim.alpha_t_rho_sq + lim.t_sq;
    const double lim2 = lim.alpha_rho_sq_sq + lim.alpha_t_rho_sq;
    rep.limit_ok = (lim1 <= bound1 + margin) && (lim2 <= bound2 + margin);
    if (!rep.limit_ok) rep.holds = false;
    return rep;
}

// All rho/u/y-dependent coefficients of the conditional Hessian law.
// Quantities prefixed n_ are the N-free normalizations (N * variance).
struct GeometryCoeffs {
    double rho = 0.0;
    double alpha = 0.0;        // alpha(rho^2)
    double t = 0.0;            // t(rho^2), the increment-slope coefficient
    double m1 = 0.0;           // conditional mean of the radial Hessian entry
    double m2 = 0.0;           // conditional mean of a bulk diagonal entry
    double n_sigma1_sq = 0.0;  // N Var of the radial-entry private noise
    double n_sigma2_sq = 0.0;  // N Var of the shared radial/bulk noise
    double m_y = 0.0;          // mean of the independent energy variable Y
    double n_sigma_y_sq = 0.0; // N Var(Y)
    double b_sq = 0.0;         // N Var(z1' | z3')
    double a_bar = 0.0;        // conditional mean of z1' given z3' = y
    double a = 0.0;            // a_bar - sqrt(-D''(0)) m(y); NaN for y > -sqrt2
    double v = 0.0;            // normalized energy (u - m_Y)/sqrt(N sigma_Y^2)
};

inline GeometryCoeffs geometry_coeffs(const FieldParams& fp, double rho, double u,
                                      double y) {
    const auto g = detail::raw_geometry(fp.D, rho);
    const double mu = fp.mu;
    const double ar2 = g.alpha * rho * rho;

    GeometryCoeffs c;
    c.rho = rho;
    c.alpha = g.alpha;
    c.t = g.t;
    c.n_sigma_y_sq = g.n_sigma_y_sq;
    c.m_y = mu * rho * rho / 2.0 - mu * g.at_rho2.d1 * rho * rho / g.d1_0;
    c.v = (u - c.m_y) / std::sqrt(g.n_sigma_y_sq);
    c.m1 = mu + c.v * (ar2 + g.t);
    c.m2 = mu + c.v * g.t;
    c.n_sigma1_sq = -4.0 * g.d2_0 - (ar2 + g.t) * ar2;
    c.n_sigma2_sq = -2.0 * g.d2_0 - (ar2 + g.t) * g.t;
    if (!(c.n_sigma2_sq > 0.0) || !(c.n_sigma1_sq > 0.0))
        throw std::domain_error("geometry_coeffs: conditional variance <= 0 at rho");
    const double denom = c.n_sigma2_sq + ar2 * g.t;  // = -2D''(0) - t^2
    c.b_sq = c.n_sigma1_sq + c.n_sigma2_sq - c.n_sigma2_sq * c.n_sigma2_sq / denom;
    if (!(c.b_sq > 0.0))
        throw std::domain_error("geometry_coeffs: b^2 <= 0 at rho");
    const double root4 = std::sqrt(-4.0 * g.d2_0);
    c.a_bar = c.m1 - c.n_sigma2_sq * (root4 * y + c.m2) / denom;
    c.a = (y <= -kSqrt2)
              ? c.a_bar - std::sqrt(-g.d2_0) * stieltjes_m(std::min(y, -kSqrt2))
              : std::numeric_limits<double>::quiet_NaN();
    return c;
}

}  // namespace landscape
