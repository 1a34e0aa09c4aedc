// Derivative-free maximization by multi-start coordinate-refined grid search.
//
// Determinism contract: the grid is partitioned across workers by row index
// and candidate bests are merged in index order (ties resolved toward the
// smaller linear index), so the result is bit-identical for any worker count.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <limits>
#include <thread>
#include <vector>

#include "landscape/semicircle.hpp"

namespace landscape {

struct Box {
    double lo = 0.0, hi = 0.0;
};

struct GridOptions {
    int n_per_dim = 64;       // initial grid resolution
    int refine_n = 17;        // resolution of refinement grids
    int rounds = 6;           // refinement rounds
    double contraction = 4.0; // half-width shrink per round
    int multistart = 8;       // top cells kept from the initial grid
    bool polish = true;       // parabolic coordinate polish at the end
    int threads = 0;          // 0 = hardware default / LANDSCAPE_THREADS
    double tol = 1e-8;        // objective convergence tolerance
};

struct GridResult {
    std::vector<double> x;
    double value = -kInf;
    bool converged = false;
};

namespace detail {

inline int resolve_threads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("LANDSCAPE_THREADS")) {
        const int t = std::atoi(env);
        if (t > 0) return t;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}

using Objective = std::function<double(const std::vector<double>&)>;

struct Cell {
    double value = -kInf;
    long index = -1;
};

// Evaluate f on the tensor grid and return every cell's value; parallel over
// the leading dimension, results stored by linear index.
inline std::vector<double> eval_grid(const Objective& f, const std::vector<Box>& box,
                                     int n, int threads,
                                     std::vector<std::vector<double>>& axes) {
    const int dim = static_cast<int>(box.size());
    axes.assign(dim, {});
    for (int d = 0; d < dim; ++d) {
        axes[d].resize(n);
        for (int i = 0; i < n; ++i)
            axes[d][i] = (n == 1) ? 0.5 * (box[d].lo + box[d].hi)
                                  : box[d].lo + (box[d].hi - box[d].lo) * i / (n - 1.0);
    }
    long total = 1;
    for (int d = 0; d < dim; ++d) total *= n;
    std::vector<double> values(static_cast<size_t>(total));
    const int nthreads = static_cast<int>(
        std::max<long>(1, std::min<long>(resolve_threads(threads), total)));
    auto worker = [&](long begin, long end) {
        std::vector<double> x(dim);
        for (long idx = begin; idx < end; ++idx) {
            long rem = idx;
            for (int d = dim - 1; d >= 0; --d) {
                x[d] = axes[d][rem % n];
                rem /= n;
            }
            double v;
            try {
                v = f(x);
            } catch (...) {
                v = -kInf;
            }
            values[static_cast<size_t>(idx)] = std::isnan(v) ? -kInf : v;
        }
    };
    if (nthreads == 1) {
        worker(0, total);
    } else {
        std::vector<std::thread> pool;
        const long chunk = (total + nthreads - 1) / nthreads;
        for (int t = 0; t < nthreads; ++t) {
            const long b = t * chunk, e = std::min(total, b + chunk);
            if (b < e) pool.emplace_back(worker, b, e);
        }
        for (auto& th : pool) th.join();
    }
    return values;
}

inline std::vector<double> point_at(const std::vector<std::vector<double>>& axes,
                                    long idx, int n) {
    const int dim = static_cast<int>(axes.size());
    std::vector<double> x(dim);
    for (int d = dim - 1; d >= 0; --d) {
        x[d] = axes[d][idx % n];
        idx /= n;
    }
    return x;
}

// One-dimensional parabolic polish of coordinate d within [lo, hi].
inline void polish_coordinate(const Objective& f, std::vector<double>& x, int d,
                              double lo, double hi, double step, double& fx) {
    for (int iter = 0; iter < 40 && step > 1e-14 * std::max(1.0, std::fabs(x[d])); ++iter) {
        std::vector<double> xl = x, xr = x;
        xl[d] = std::max(lo, x[d] - step);
        xr[d] = std::min(hi, x[d] + step);
        double fl, fr;
        try { fl = f(xl); } catch (...) { fl = -kInf; }
        try { fr = f(xr); } catch (...) { fr = -kInf; }
        if (fl > fx && fl >= fr) {
            x = xl;
            fx = fl;
            continue;
        }
        if (fr > fx) {
            x = xr;
            fx = fr;
            continue;
        }
        // parabola through (x-step, fl), (x, fx), (x+step, fr)
        const double denom = fl - 2.0 * fx + fr;
        if (std::isfinite(denom) && denom < 0.0) {
            const double shift = 0.5 * step * (fl - fr) / denom;
            if (std::fabs(shift) < step) {
                std::vector<double> xc = x;
                xc[d] = std::clamp(x[d] + shift, lo, hi);
                double fc;
                try { fc = f(xc); } catch (...) { fc = -kInf; }
                if (fc > fx) {
                    x = xc;
                    fx = fc;
                }
            }
        }
        step *= 0.25;
    }
}

}  // namespace detail

// Maximize f over the box. Seeds are extra multi-start centers (closed-form
// candidates, boundary points); they compete with the grid's own top cells.
inline GridResult maximize_refine(const detail::Objective& f, std::vector<Box> box,
                                  const GridOptions& opt = {},
                                  const std::vector<std::vector<double>>& seeds = {}) {
    const int dim = static_cast<int>(box.size());
    GridResult best;
    for (const auto& b : box)
        if (!(b.lo <= b.hi)) return best;  // infeasible, value = -inf

    std::vector<std::vector<double>> axes;
    const std::vector<double> values =
        detail::eval_grid(f, box, opt.n_per_dim, opt.threads, axes);

    // top multistart cells, merged deterministically by linear index
    std::vector<detail::Cell> top;
    for (long idx = 0; idx < static_cast<long>(values.size()); ++idx) {
        const double v = values[static_cast<size_t>(idx)];
        if (!std::isfinite(v)) continue;
        if (static_cast<int>(top.size()) < opt.multistart) {
            top.push_back({v, idx});
            std::sort(top.begin(), top.end(), [](const auto& a, const auto& b) {
                return a.value > b.value || (a.value == b.value && a.index < b.index);
            });
        } else if (v > top.back().value) {
            top.back() = {v, idx};
            std::sort(top.begin(), top.end(), [](const auto& a, const auto& b) {
                return a.value > b.value || (a.value == b.value && a.index < b.index);
            });
        }
    }

    std::vector<std::vector<double>> starts;
    for (const auto& c : top) starts.push_back(detail::point_at(axes, c.index, opt.n_per_dim));
    for (const auto& s : seeds)
        if (static_cast<int>(s.size()) == dim) starts.push_back(s);

    std::vector<double> width(dim);
    for (int d = 0; d < dim; ++d)
        width[d] = (box[d].hi - box[d].lo) / std::max(1, opt.n_per_dim - 1);

    for (auto start : starts) {
        for (int d = 0; d < dim; ++d) start[d] = std::clamp(start[d], box[d].lo, box[d].hi);
        double fv;
        try { fv = f(start); } catch (...) { fv = -kInf; }
        std::vector<double> x = start;
        std::vector<double> w = width;
        double prev = fv;
        bool converged = false;
        for (int round = 0; round < opt.rounds; ++round) {
            std::vector<Box> sub(dim);
            for (int d = 0; d < dim; ++d) {
                sub[d].lo = std::max(box[d].lo, x[d] - w[d]);
                sub[d].hi = std::min(box[d].hi, x[d] + w[d]);
            }
            std::vector<std::vector<double>> sub_axes;
            const std::vector<double> sv =
                detail::eval_grid(f, sub, opt.refine_n, opt.threads, sub_axes);
            long best_idx = -1;
            double best_v = fv;
            for (long idx = 0; idx < static_cast<long>(sv.size()); ++idx)
                if (sv[static_cast<size_t>(idx)] > best_v) {
                    best_v = sv[static_cast<size_t>(idx)];
                    best_idx = idx;
                }
            if (best_idx >= 0) {
                x = detail::point_at(sub_axes, best_idx, opt.refine_n);
                fv = best_v;
            }
            for (int d = 0; d < dim; ++d) w[d] /= opt.contraction;
            if (std::fabs(fv - prev) < opt.tol && round >= 2) converged = true;
            prev = fv;
        }
        if (opt.polish && std::isfinite(fv)) {
            for (int sweep = 0; sweep < 3; ++sweep)
                for (int d = 0; d < dim; ++d)
                    detail::polish_coordinate(f, x, d, box[d].lo, box[d].hi,
                                              std::max(w[d], 1e-9), fv);
        }
        if (fv > best.value) {
            best.value = fv;
            best.x = x;
            best.converged = converged;
        }
    }
    return best;
}

}  // namespace landscape
