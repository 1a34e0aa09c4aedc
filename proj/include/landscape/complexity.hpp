// Annealed complexity of critical points: the master exponent psi_*, the
// sign-activated corrections I^- (minima) and I^+ (saddles), the fixed-index
// functionals J_k^1 / J_k^2, the shell-mode variational solver, and the
// closed-form total-count constants.
//
// Shell-mode answer layout (all three index regimes):
//   (1/2) log[-4 D''(0)] - (1/2) log D'(0) + 1/2 + S,
// where S is the mode-specific supremum over (rho, u, y).

#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "landscape/grid_search.hpp"
#include "landscape/rate_functions.hpp"
#include "landscape/semicircle.hpp"
#include "landscape/structure_function.hpp"

namespace landscape {

// Thrown when a query violates a theorem hypothesis (e.g. mu = 0 with an
// unbounded shell); the CLI maps this to its own exit code.
struct hypothesis_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// psi_* and the corrections
// ---------------------------------------------------------------------------

// Master exponent psi_*(rho, u, y). Defined for all real y; the Gaussian
// weight in y is centered at -m2 / sqrt(-4 D''(0)).
inline double psi_star(const FieldParams& fp, double rho, double u, double y) {
    const GeometryCoeffs g = geometry_coeffs(fp, rho, u, y);
    const double j_sq = -2.0 * fp.D.eval(0.0).d2;  // J^2
    const double denom = j_sq - g.t * g.t;
    const double z = y + g.m2 / std::sqrt(2.0 * j_sq);
    return psi_star_potential(y) - 0.5 * g.v * g.v -
           fp.mu * fp.mu * rho * rho / (2.0 * fp.D.eval(0.0).d1) + std::log(rho) -
           (j_sq / denom) * z * z;
}

// Minimizers and values of the one-dimensional correction problems.
struct CorrectionPoint {
    double rho = 0.0, u = 0.0, y = 0.0;
    double x_hat = 0.0;   // stationary point of the I_- problem
    double x_tilde = 0.0; // minimizer of the I_+ problem (a > 0 regime)
    double B = 0.0, C = 0.0;
    double i_minus = 0.0;
    double i_plus = 0.0;
    double a = 0.0;       // the sign-deciding conditional mean gap
    double b_sq = 0.0;
};

// Both corrections at one (rho, u, y), y <= -sqrt2 (edge by continuity).
//   I_-(x) = Lambda*(x; y) + [(a + sqrt(-D''(0)) x)_-]^2 / (2 b^2),  x >= 0
//   I_+(x) = Lambda*(x; y) + [(a + sqrt(-D''(0)) x)_+]^2 / (2 b^2),  x <= 0
// I^- activates for a < 0 with interior minimizer x_hat in (0, m(y));
// I^+ activates for a > 0 with minimizer x_tilde in [-a/sqrt(-D''(0)), 0].
inline CorrectionPoint corrections(const FieldParams& fp, double rho, double u,
                                   double y) {
    if (y > -kSqrt2)
        throw std::domain_error("corrections: y must be <= -sqrt(2)");
    const GeometryCoeffs g = geometry_coeffs(fp, rho, u, y);
    const double d2_0 = fp.D.eval(0.0).d2;
    const double sd = std::sqrt(-d2_0);
    const double m = stieltjes_m(std::min(y, -kSqrt2));
    const double denom = -2.0 * d2_0 - g.t * g.t;

    CorrectionPoint cp;
    cp.rho = rho;
    cp.u = u;
    cp.y = y;
    cp.a = g.a;
    cp.b_sq = g.b_sq;
    const double ar2 = g.alpha * rho * rho;
    cp.B = -d2_0 * ar2 * ar2 / (denom * g.b_sq);
    cp.C = 1.0 / m - 2.0 * sd * g.a / g.b_sq;
    cp.x_hat = (cp.C + cp.B * m -
                std::sqrt((cp.C - cp.B * m) * (cp.C - cp.B * m) + 4.0 * cp.B)) /
               (2.0 * cp.B);

    if (g.a >= 0.0) {
        cp.i_minus = 0.0;
    } else {
        const double gap = std::min(g.a + sd * cp.x_hat, 0.0);
        cp.i_minus = lambda_star(y, cp.x_hat) + gap * gap / (2.0 * g.b_sq);
    }

    if (g.a <= 0.0) {
        cp.x_tilde = 0.0;
        cp.i_plus = 0.0;
    } else {
        const double x_prime = g.b_sq * (kSqrt2 + y) / (2.0 * d2_0) - g.a / sd;
        const double edge = -kSqrt2 + m;  // Lambda'((sqrt2+y)/2 +; y)
        cp.x_tilde = (x_prime <= edge) ? x_prime : cp.x_hat;
        const double gap = std::max(g.a + sd * cp.x_tilde, 0.0);
        cp.i_plus = lambda_star(y, cp.x_tilde) + gap * gap / (2.0 * g.b_sq);
    }
    return cp;
}

inline CorrectionPoint i_minus(const FieldParams& fp, double rho, double u, double y) {
    return corrections(fp, rho, u, y);
}
inline CorrectionPoint i_plus(const FieldParams& fp, double rho, double u, double y) {
    return corrections(fp, rho, u, y);
}

// ---------------------------------------------------------------------------
// Analytic elimination of the energy variable
// ---------------------------------------------------------------------------

namespace detail {

// v solving d(psi_*)/dv = 0 at fixed (rho, y): v = -t (sqrt2 J y + mu) / J^2.
inline double v_first_order(const FieldParams& fp, double rho, double y) {
    const auto g = raw_geometry(fp.D, rho);
    const double j_sq = -2.0 * g.d2_0;
    return -g.t * (std::sqrt(2.0 * j_sq) * y + fp.mu) / j_sq;
}

// v solving the stationarity of psi_* - I^+ in v (a > 0 branch):
// v = [ (sqrt2+y) J alpha rho^2 / sqrt2 - sqrt2 J t y - mu t ] / J^2.
inline double v_saddle_order(const FieldParams& fp, double rho, double y) {
    const auto g = raw_geometry(fp.D, rho);
    const double j = std::sqrt(-2.0 * g.d2_0);
    const double ar2 = g.alpha * rho * rho;
    return ((kSqrt2 + y) * j * ar2 / kSqrt2 - kSqrt2 * j * g.t * y - fp.mu * g.t) /
           (j * j);
}

inline double u_from_v(const FieldParams& fp, double rho, double v) {
    const auto g = raw_geometry(fp.D, rho);
    const double m_y =
        fp.mu * rho * rho / 2.0 - fp.mu * g.at_rho2.d1 * rho * rho / g.d1_0;
    return m_y + v * std::sqrt(g.n_sigma_y_sq);
}

}  // namespace detail

// Reduced objectives of the two fixed-index branches after eliminating u:
//   L = sup_u [psi_* - k J_1],   R = sup_u [psi_* - I^+ - (k-1) J_1],
// in closed form. Their difference is y^2/4 - J_1(y)/2 - 1/2 for every rho.
struct ReducedObjectives {
    double L = 0.0;
    double R = 0.0;
};

inline ReducedObjectives reduced_objectives(const FieldParams& fp, double rho, double y,
                                            int k) {
    if (!(rho > 0.0)) throw std::domain_error("reduced_objectives: rho must be > 0");
    if (y > -kSqrt2)
        throw std::domain_error("reduced_objectives: y must be <= -sqrt(2)");
    const DerivSet at0 = fp.D.eval(0.0);
    const double j = std::sqrt(-2.0 * at0.d2);
    const double mu = fp.mu;
    const double j1 = rate_j1(std::min(y, -kSqrt2));
    const double shared = -kSqrt2 * mu * y / j - mu * mu / (2.0 * j * j) -
                          mu * mu * rho * rho / (2.0 * at0.d1) + std::log(rho);
    ReducedObjectives out;
    out.L = -0.5 * y * y - (k + 1.0) * j1 + shared - 0.5 - 0.5 * std::log(2.0);
    out.R = -0.75 * y * y - (k + 0.5) * j1 + shared - 0.5 * std::log(2.0);
    return out;
}

// ---------------------------------------------------------------------------
// Query / result types
// ---------------------------------------------------------------------------

enum class Mode {
    minima,
    fixed_index,
    diverging_index,
    total_minima,
    total_fixed_index,
    total_diverging
};

enum class Branch { j1, iplus, minima, diverging };

inline const char* to_string(Branch b) {
    switch (b) {
        case Branch::j1: return "J1";
        case Branch::iplus: return "Iplus";
        case Branch::minima: return "minima";
        case Branch::diverging: return "diverging";
    }
    return "?";
}

// Energy window: a finite union of intervals (closures are used for the
// supremum); empty vector = all reals.
struct EnergyWindow {
    std::vector<std::pair<double, double>> intervals;

    static EnergyWindow all() { return {}; }
    static EnergyWindow interval(double lo, double hi) { return {{{lo, hi}}}; }
    bool is_all() const { return intervals.empty(); }
};

struct ComplexityQuery {
    FieldParams fp;
    Mode mode = Mode::minima;
    int k = 1;            // fixed_index / total_fixed_index
    double gamma = 0.5;   // diverging_index / total_diverging
    EnergyWindow energy;  // shell modes
    double r1 = 0.0;
    double r2 = kInf;
    std::optional<double> domain_constant;  // Xi (mu != 0) or Theta (mu = 0)
};

struct Diagnostics {
    double a_at_opt = std::numeric_limits<double>::quiet_NaN();
    double gradient_norm = std::numeric_limits<double>::quiet_NaN();
    std::vector<std::string> boundary_flags;
    bool converged = true;
    // I_k bookkeeping: the stationarity root actually used and the printed
    // variant it disagrees with (kept for inspection).
    double x_star = std::numeric_limits<double>::quiet_NaN();
    double x_printed = std::numeric_limits<double>::quiet_NaN();
};

struct ComplexityResult {
    double value = -kInf;
    double rho0 = std::numeric_limits<double>::quiet_NaN();
    double u0 = std::numeric_limits<double>::quiet_NaN();
    double y0 = std::numeric_limits<double>::quiet_NaN();
    Branch branch = Branch::minima;
    Diagnostics diagnostics;
};

struct SolverOptions {
    GridOptions grid;
    bool use_analytic_elimination = true;
};

// ---------------------------------------------------------------------------
// Total-count constants (Theorems on unrestricted critical values)
// ---------------------------------------------------------------------------

struct IkResult {
    double value = 0.0;
    double x_star = 0.0;     // maximizer of phi - J_{k+1}
    double x_printed = 0.0;  // the published stationarity formula (suspect)
};

namespace detail {

inline double phi_quad(double x, double mu, double sd) {
    return -0.5 * x * x - mu * x / sd;
}

// Golden-section maximization of the strictly concave phi - (k+1) J1 on
// [lo, -sqrt2]; the edge is always a candidate.
inline std::pair<double, double> ik_golden(double mu, double sd, int k, double lo) {
    auto g = [&](double x) { return phi_quad(x, mu, sd) - (k + 1.0) * rate_j1(x); };
    double a = lo, b = -kSqrt2;
    const double gr = 0.6180339887498949;
    double c = b - gr * (b - a), d = a + gr * (b - a);
    double fc = g(c), fd = g(d);
    for (int i = 0; i < 200; ++i) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = g(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = g(d);
        }
    }
    double xs = 0.5 * (a + b), vs = g(xs);
    if (g(-kSqrt2) >= vs) {
        xs = -kSqrt2;
        vs = g(-kSqrt2);
    }
    return {xs, vs};
}

}  // namespace detail

// I_k = sup_x [phi(x) - J_{k+1}(x)], phi(x) = -x^2/2 - mu x / sqrt(-D''(0)).
// The stationarity root is solved analytically and verified against a
// golden-section maximization; the published k >= 1 formula disagrees with
// direct stationarity and is reported in x_printed only.
inline IkResult rate_ik(double mu, double d2_0, int k) {
    if (k < 0) throw std::invalid_argument("rate_ik: k must be >= 0");
    const double sd = std::sqrt(-d2_0);
    const double j = std::sqrt(-2.0 * d2_0);
    IkResult res;
    const double lo = std::min(-10.0, -4.0 * (1.0 + std::fabs(mu) / sd));
    const auto [x_bf, v_bf] = detail::ik_golden(mu, sd, k, lo);
    if (mu <= j) {
        res.x_star = -kSqrt2;
        res.value = detail::phi_quad(-kSqrt2, mu, sd);
    } else if (k == 0) {
        res.x_star = -mu / (2.0 * sd) - sd / mu;
        res.value = detail::phi_quad(res.x_star, mu, sd) - rate_j1(res.x_star);
    } else {
        const double kk = static_cast<double>(k) * (k + 2.0);
        res.x_star = (mu - (k + 1.0) * std::sqrt(mu * mu + kk * j * j)) / (kk * sd);
        res.value = detail::phi_quad(res.x_star, mu, sd) - (k + 1.0) * rate_j1(res.x_star);
    }
    if (k >= 1) {
        const double kk = static_cast<double>(k) * (k + 2.0);
        res.x_printed = (mu - (k + 1.0) * std::sqrt(mu * mu - d2_0 * kk)) / (kk * sd);
    } else {
        res.x_printed = res.x_star;
    }
    if (v_bf > res.value + 1e-12) {  // analytic root failed, trust the search
        res.value = v_bf;
        res.x_star = x_bf;
    }
    return res;
}

// Closed forms for the total number of critical points over B_N.
inline ComplexityResult total_complexity(const ComplexityQuery& q) {
    if (!q.domain_constant)
        throw std::invalid_argument("total_complexity: domain_constant required");
    const DerivSet at0 = q.fp.D.eval(0.0);
    const double mu = q.fp.mu;
    const double d2_0 = at0.d2;
    const double j = std::sqrt(-2.0 * d2_0);
    const double dc = *q.domain_constant;
    ComplexityResult res;
    switch (q.mode) {
        case Mode::total_minima:
        case Mode::total_fixed_index: {
            const int k = (q.mode == Mode::total_minima) ? 0 : q.k;
            const IkResult ik = rate_ik(mu, d2_0, k);
            res.diagnostics.x_star = ik.x_star;
            res.diagnostics.x_printed = ik.x_printed;
            res.y0 = ik.x_star;
            if (mu != 0.0) {
                res.value = mu * mu / (4.0 * d2_0) - std::log(std::fabs(mu) / j) - 0.5 -
                            dc + ik.value;
            } else {
                res.value = std::log(j) - 1.5 - 0.5 * std::log(2.0 * M_PI) -
                            0.5 * std::log(at0.d1) + dc;
            }
            res.branch = (k == 0) ? Branch::minima : Branch::j1;
            return res;
        }
        case Mode::total_diverging: {
            const double s = quantile_s_gamma(q.gamma);
            res.y0 = s;
            res.branch = Branch::diverging;
            if (mu != 0.0) {
                res.value = mu * mu / (4.0 * d2_0) - std::log(std::fabs(mu) / j) - 0.5 -
                            0.5 * s * s - mu * s / std::sqrt(-d2_0) - dc;
            } else {
                res.value = std::log(j) - 0.5 - 0.5 * std::log(2.0 * M_PI) -
                            0.5 * std::log(at0.d1) - 0.5 * s * s + dc;
            }
            return res;
        }
        default:
            throw std::invalid_argument("total_complexity: not a total mode");
    }
}

// ---------------------------------------------------------------------------
// Shell-mode solver
// ---------------------------------------------------------------------------

namespace detail {

// log rho - mu^2 rho^2 / (2 D'(0)), the rho-profile shared by every mode.
inline double rho_profile(double rho, double mu, double d1_0) {
    return std::log(rho) - mu * mu * rho * rho / (2.0 * d1_0);
}

// Cap for the rho search: past the profile peak, chop where the profile has
// dropped 50 below its maximum (the objective's other terms are bounded on
// the relevant set).
inline double rho_cap(double mu, double d1_0, double r1) {
    if (mu == 0.0) return kInf;
    const double rho_star = std::sqrt(d1_0) / std::fabs(mu);
    const double peak = rho_profile(rho_star, mu, d1_0);
    double lo = rho_star, hi = rho_star;
    while (rho_profile(hi, mu, d1_0) > peak - 50.0) hi *= 2.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (rho_profile(mid, mu, d1_0) > peak - 50.0 ? lo : hi) = mid;
    }
    return std::max(hi, r1 * 1.0001);
}

struct SearchFrame {
    Box rho, y;
    std::vector<Box> u_boxes;  // one per energy component (possibly clamped)
    bool feasible = true;
};

inline SearchFrame make_frame(const ComplexityQuery& q, double y_for_u_box) {
    SearchFrame fr;
    const DerivSet at0 = q.fp.D.eval(0.0);
    const double mu = q.fp.mu;
    const double ymax = std::max(10.0, 2.0 + 4.0 * (1.0 + std::fabs(mu)) /
                                           std::sqrt(-2.0 * at0.d2));
    fr.y = {-ymax, -kSqrt2};
    const double lo = std::max(q.r1, 1e-4);
    const double hi = std::min(q.r2, rho_cap(mu, at0.d1, lo));
    fr.rho = {lo, hi};
    if (!(lo < hi)) {
        fr.feasible = false;
        return fr;
    }
    // u truncation: scan (rho, y) coarsely for the stationary v and take
    // +-10 in v (where the quadratic-in-u part of psi_* has dropped by 50).
    double u_lo = kInf, u_hi = -kInf;
    for (int i = 0; i <= 16; ++i) {
        const double rho = lo + (hi - lo) * i / 16.0;
        for (int jdx = 0; jdx <= 8; ++jdx) {
            const double y = (y_for_u_box == y_for_u_box)
                                 ? y_for_u_box
                                 : -ymax + (ymax - kSqrt2) * jdx / 8.0;
            try {
                const double v = v_first_order(q.fp, rho, y);
                const auto g = raw_geometry(q.fp.D, rho);
                const double sig = std::sqrt(g.n_sigma_y_sq);
                const double m_y = mu * rho * rho / 2.0 -
                                   mu * g.at_rho2.d1 * rho * rho / g.d1_0;
                u_lo = std::min(u_lo, m_y + (v - 10.0) * sig);
                u_hi = std::max(u_hi, m_y + (v + 10.0) * sig);
            } catch (...) {
            }
            if (y_for_u_box == y_for_u_box) break;
        }
    }
    if (!(u_lo < u_hi)) {
        fr.feasible = false;
        return fr;
    }
    if (q.energy.is_all()) {
        fr.u_boxes.push_back({u_lo, u_hi});
    } else {
        for (const auto& [elo, ehi] : q.energy.intervals) {
            double blo = std::max(elo, u_lo), bhi = std::min(ehi, u_hi);
            if (!(blo <= bhi)) {
                // window beyond the truncation: supremum sits at the nearest
                // window endpoint
                const double edge = (elo > u_hi) ? elo : ehi;
                if (std::isfinite(edge)) blo = bhi = edge;
                else { blo = u_lo; bhi = u_hi; }
            }
            fr.u_boxes.push_back({blo, bhi});
        }
    }
    return fr;
}

struct SupResult {
    double value = -kInf;
    double rho = 0.0, u = 0.0, y = 0.0;
    bool converged = true;
};

// 3-D (or 2-D with fixed y) supremum of `obj` over the frame.
template <typename Obj>
SupResult sup_over_frame(const ComplexityQuery& q, const SearchFrame& fr, Obj&& obj,
                         std::optional<double> fixed_y, const GridOptions& gopt,
                         const std::vector<std::vector<double>>& seeds3 = {}) {
    SupResult out;
    if (!fr.feasible) return out;
    for (const auto& ub : fr.u_boxes) {
        GridResult gr;
        if (fixed_y) {
            auto f2 = [&](const std::vector<double>& x) {
                return obj(x[0], x[1], *fixed_y);
            };
            std::vector<std::vector<double>> seeds2;
            for (const auto& s : seeds3)
                if (s.size() == 3) seeds2.push_back({s[0], s[1]});
            gr = maximize_refine(f2, {fr.rho, ub}, gopt, seeds2);
            if (gr.value > out.value) {
                out = {gr.value, gr.x[0], gr.x[1], *fixed_y, gr.converged};
            }
        } else {
            auto f3 = [&](const std::vector<double>& x) {
                return obj(x[0], x[1], x[2]);
            };
            gr = maximize_refine(f3, {fr.rho, ub, fr.y}, gopt, seeds3);
            if (gr.value > out.value) {
                out = {gr.value, gr.x[0], gr.x[1], gr.x[2], gr.converged};
            }
        }
    }
    return out;
}

// 2-D (rho, y) supremum used on the analytically eliminated path.
template <typename Obj>
SupResult sup_rho_y(const SearchFrame& fr, Obj&& obj, const GridOptions& gopt,
                    const std::vector<std::vector<double>>& seeds = {}) {
    SupResult out;
    if (!fr.feasible) return out;
    auto f2 = [&](const std::vector<double>& x) { return obj(x[0], x[1]); };
    const GridResult gr = maximize_refine(f2, {fr.rho, fr.y}, gopt, seeds);
    if (gr.value > out.value)
        out = {gr.value, gr.x[0], std::numeric_limits<double>::quiet_NaN(), gr.x[1],
               gr.converged};
    return out;
}

inline void flag_boundaries(const ComplexityQuery& q, const SearchFrame& fr,
                            SupResult& s, Diagnostics& d) {
    const double tol = 1e-6;
    if (std::fabs(s.rho - fr.rho.lo) < tol * std::max(1.0, fr.rho.lo))
        d.boundary_flags.push_back("rho_at_lower");
    if (std::fabs(s.rho - fr.rho.hi) < tol * std::max(1.0, fr.rho.hi) &&
        std::isfinite(q.r2) && std::fabs(fr.rho.hi - q.r2) < tol)
        d.boundary_flags.push_back("rho_at_upper");
    if (std::fabs(s.y + kSqrt2) < tol) d.boundary_flags.push_back("y_at_edge");
    if (!q.energy.is_all()) {
        for (const auto& [lo, hi] : q.energy.intervals)
            if (std::fabs(s.u - lo) < tol || std::fabs(s.u - hi) < tol) {
                d.boundary_flags.push_back("u_at_energy_boundary");
                break;
            }
    }
}

template <typename Obj>
double gradient_norm_at(Obj&& obj, const SearchFrame& fr, double rho, double u,
                        double y, bool u_free, bool y_free) {
    const double h = 1e-5;
    double acc = 0.0;
    auto sq = [](double t) { return t * t; };
    auto safe = [&](double r, double uu, double yy) {
        try {
            return obj(r, uu, yy);
        } catch (...) {
            return -kInf;
        }
    };
    // one-sided at box edges, central inside; boundary-pinned coordinates are
    // skipped by the caller through u_free / y_free
    const double rl = std::max(fr.rho.lo, rho - h), rr = std::min(fr.rho.hi, rho + h);
    if (rr > rl) acc += sq((safe(rr, u, y) - safe(rl, u, y)) / (rr - rl));
    if (u_free) {
        const double f1 = safe(rho, u + h, y), f0 = safe(rho, u - h, y);
        if (std::isfinite(f1) && std::isfinite(f0)) acc += sq((f1 - f0) / (2 * h));
    }
    if (y_free) {
        const double yl = y - h, yr = std::min(-kSqrt2, y + h);
        if (yr > yl) acc += sq((safe(rho, u, yr) - safe(rho, u, yl)) / (yr - yl));
    }
    return std::sqrt(acc);
}

}  // namespace detail

// Shell-mode solver for the three restricted-value regimes.
inline ComplexityResult solve_complexity(const ComplexityQuery& q,
                                         const SolverOptions& opt = {}) {
    switch (q.mode) {
        case Mode::total_minima:
        case Mode::total_fixed_index:
        case Mode::total_diverging:
            return total_complexity(q);
        default:
            break;
    }
    if (!(std::fabs(q.fp.mu) > 0.0) && !(q.r2 < kInf))
        throw hypothesis_error(
            "shell modes need |mu| + 1/R2 > 0: mu = 0 requires finite R2");
    if (!(q.r1 >= 0.0) || !(q.r2 > q.r1))
        throw std::invalid_argument("solve_complexity: need 0 <= R1 < R2");
    if (q.mode == Mode::fixed_index && q.k < 1)
        throw std::invalid_argument("solve_complexity: fixed_index needs k >= 1");
    if (q.mode == Mode::diverging_index && !(q.gamma > 0.0 && q.gamma < 1.0))
        throw std::invalid_argument("solve_complexity: gamma must be in (0,1)");

    const DerivSet at0 = q.fp.D.eval(0.0);
    const double prefactor = 0.5 * std::log(-4.0 * at0.d2) - 0.5 * std::log(at0.d1) + 0.5;
    const double mu = q.fp.mu;
    const double j = std::sqrt(-2.0 * at0.d2);

    const std::optional<double> fixed_y =
        (q.mode == Mode::diverging_index)
            ? std::optional<double>(quantile_s_gamma(q.gamma))
            : std::nullopt;
    const detail::SearchFrame frame = detail::make_frame(
        q, fixed_y ? *fixed_y : std::numeric_limits<double>::quiet_NaN());

    ComplexityResult res;
    if (!frame.feasible) {
        res.diagnostics.boundary_flags.push_back("infeasible_box");
        return res;
    }

    // closed-form candidate seeds
    const double rho_star =
        (mu != 0.0) ? std::clamp(std::sqrt(at0.d1) / std::fabs(mu), frame.rho.lo,
                                 frame.rho.hi)
                    : frame.rho.hi;
    std::vector<std::vector<double>> seeds_ry = {{rho_star, -kSqrt2},
                                                 {frame.rho.hi, -kSqrt2}};
    if (mu > j) {
        const double y_min_closed = -(mu / j + j / mu) / kSqrt2;
        if (y_min_closed <= -kSqrt2) seeds_ry.push_back({rho_star, y_min_closed});
        if (q.mode == Mode::fixed_index) {
            const double kk = static_cast<double>(q.k) * (q.k + 2.0);
            const double y1k = (kSqrt2 * mu - kSqrt2 * (q.k + 1.0) *
                                                  std::sqrt(mu * mu + kk * j * j)) /
                               (j * kk);
            if (y1k <= -kSqrt2) seeds_ry.push_back({rho_star, y1k});
        }
    }

    const bool eliminate = opt.use_analytic_elimination && q.energy.is_all();

    auto obj_minima = [&](double rho, double u, double y) {
        return psi_star(q.fp, rho, u, y) - corrections(q.fp, rho, u, y).i_minus;
    };
    auto obj_j1 = [&](double rho, double u, double y) {
        return psi_star(q.fp, rho, u, y) - rate_jk(q.k, y);
    };
    auto obj_iplus = [&](double rho, double u, double y) {
        return psi_star(q.fp, rho, u, y) - corrections(q.fp, rho, u, y).i_plus -
               rate_jk(q.k - 1, y);
    };
    auto obj_diverging = [&](double rho, double u, double y) {
        return psi_star(q.fp, rho, u, y);
    };

    detail::SupResult sup;
    Branch branch = Branch::minima;

    if (q.mode == Mode::minima) {
        branch = Branch::minima;
        if (eliminate) {
            auto g = [&](double rho, double y) {
                const double u = detail::u_from_v(q.fp, rho,
                                                  detail::v_first_order(q.fp, rho, y));
                return obj_minima(rho, u, y);
            };
            sup = detail::sup_rho_y(frame, g, opt.grid, seeds_ry);
            sup.u = detail::u_from_v(q.fp, sup.rho,
                                     detail::v_first_order(q.fp, sup.rho, sup.y));
        } else {
            sup = detail::sup_over_frame(q, frame, obj_minima, std::nullopt, opt.grid);
        }
        res.diagnostics.gradient_norm = detail::gradient_norm_at(
            obj_minima, frame, sup.rho, sup.u, sup.y, !eliminate, true);
    } else if (q.mode == Mode::fixed_index) {
        detail::SupResult s1, s2;
        if (eliminate) {
            auto g1 = [&](double rho, double y) {
                const double u = detail::u_from_v(q.fp, rho,
                                                  detail::v_first_order(q.fp, rho, y));
                return obj_j1(rho, u, y);
            };
            auto g2 = [&](double rho, double y) {
                const double u = detail::u_from_v(q.fp, rho,
                                                  detail::v_saddle_order(q.fp, rho, y));
                return obj_iplus(rho, u, y);
            };
            s1 = detail::sup_rho_y(frame, g1, opt.grid, seeds_ry);
            s1.u = detail::u_from_v(q.fp, s1.rho,
                                    detail::v_first_order(q.fp, s1.rho, s1.y));
            s2 = detail::sup_rho_y(frame, g2, opt.grid, seeds_ry);
            s2.u = detail::u_from_v(q.fp, s2.rho,
                                    detail::v_saddle_order(q.fp, s2.rho, s2.y));
        } else {
            s1 = detail::sup_over_frame(q, frame, obj_j1, std::nullopt, opt.grid);
            s2 = detail::sup_over_frame(q, frame, obj_iplus, std::nullopt, opt.grid);
        }
        if (s1.value >= s2.value) {
            sup = s1;
            branch = Branch::j1;
            res.diagnostics.gradient_norm = detail::gradient_norm_at(
                obj_j1, frame, sup.rho, sup.u, sup.y, !eliminate, true);
        } else {
            sup = s2;
            branch = Branch::iplus;
            res.diagnostics.gradient_norm = detail::gradient_norm_at(
                obj_iplus, frame, sup.rho, sup.u, sup.y, !eliminate, true);
        }
    } else {  // diverging_index
        branch = Branch::diverging;
        if (eliminate) {
            auto g = [&](double rho, double ignored_y) {
                const double u = detail::u_from_v(
                    q.fp, rho, detail::v_first_order(q.fp, rho, *fixed_y));
                return obj_diverging(rho, u, *fixed_y);
            };
            detail::SearchFrame f1 = frame;
            f1.y = {*fixed_y, *fixed_y};
            sup = detail::sup_rho_y(f1, g, opt.grid, {{rho_star, *fixed_y}});
            sup.y = *fixed_y;
            sup.u = detail::u_from_v(q.fp, sup.rho,
                                     detail::v_first_order(q.fp, sup.rho, *fixed_y));
        } else {
            sup = detail::sup_over_frame(q, frame, obj_diverging, fixed_y, opt.grid);
        }
        res.diagnostics.gradient_norm = detail::gradient_norm_at(
            obj_diverging, frame, sup.rho, sup.u, sup.y, !eliminate, false);
    }

    res.value = std::isfinite(sup.value) ? prefactor + sup.value : -kInf;
    res.rho0 = sup.rho;
    res.u0 = sup.u;
    res.y0 = sup.y;
    res.branch = branch;
    res.diagnostics.converged = sup.converged;
    if (sup.y <= -kSqrt2) {
        try {
            res.diagnostics.a_at_opt =
                geometry_coeffs(q.fp, sup.rho, sup.u, sup.y).a;
        } catch (...) {
        }
    }
    detail::flag_boundaries(q, frame, sup, res.diagnostics);
    return res;
}

}  // namespace landscape
