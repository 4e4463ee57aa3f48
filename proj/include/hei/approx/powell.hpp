// Copyright 2026 The hei Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "hei/approx/activation.hpp"
#include "hei/approx/grid.hpp"
#include "hei/approx/poly.hpp"
#include "hei/approx/wls.hpp"

namespace hei::approx {

struct PowellOptions {
    int max_outer = 200;      // outer iteration cap
    double outer_tol = 1e-8;  // stop when the objective improves by less than this
    double line_tol = 1e-10;  // Brent line-minimization tolerance
};

namespace detail {

inline double checked(double v) {
    if (!std::isfinite(v)) throw std::runtime_error("powell: non-finite objective during search");
    return v;
}

// Brent line minimization of g on a bracket found by golden-ratio downhill
// expansion from alpha = 0. Returns the minimizing alpha.
inline double line_minimize(const std::function<double(double)>& g, double initial_step,
                            double tol) {
    constexpr double kGold = 1.618033988749895;
    constexpr double kCGold = 0.3819660112501051;
    constexpr int kMaxExpand = 60;
    constexpr int kMaxBrent = 120;

    // bracket the minimum: walk downhill from 0
    double ax = 0.0, bx = initial_step;
    double fa = checked(g(ax)), fb = checked(g(bx));
    if (fb > fa) {
        std::swap(ax, bx);
        std::swap(fa, fb);
    }
    double cx = bx + kGold * (bx - ax);
    double fc = checked(g(cx));
    for (int i = 0; i < kMaxExpand && fc < fb; ++i) {
        ax = bx;
        fa = fb;
        bx = cx;
        fb = fc;
        cx = bx + kGold * (bx - ax);
        fc = checked(g(cx));
    }
    if (fc < fb) return 0.0;  // no bracket within expansion budget; stay put

    if (ax > cx) std::swap(ax, cx);

    // Brent on [ax, cx]
    double x = bx, w = bx, v = bx;
    double fx = fb, fw = fb, fv = fb;
    double d = 0.0, e = 0.0;
    for (int iter = 0; iter < kMaxBrent; ++iter) {
        const double xm = 0.5 * (ax + cx);
        const double tol1 = tol + 1e-12 * std::fabs(x);
        const double tol2 = 2.0 * tol1;
        if (std::fabs(x - xm) <= tol2 - 0.5 * (cx - ax)) break;
        bool golden = true;
        if (std::fabs(e) > tol1) {
            // parabolic fit through x, w, v
            double r = (x - w) * (fx - fv);
            double q = (x - v) * (fx - fw);
            double p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if (q > 0.0) p = -p;
            q = std::fabs(q);
            double e_prev = e;
            e = d;
            if (std::fabs(p) < std::fabs(0.5 * q * e_prev) && p > q * (ax - x) && p < q * (cx - x)) {
                d = p / q;
                double u = x + d;
                if (u - ax < tol2 || cx - u < tol2) d = (xm > x) ? tol1 : -tol1;
                golden = false;
            }
        }
        if (golden) {
            e = (x >= xm) ? ax - x : cx - x;
            d = kCGold * e;
        }
        const double u = (std::fabs(d) >= tol1) ? x + d : x + (d > 0 ? tol1 : -tol1);
        const double fu = checked(g(u));
        if (fu <= fx) {
            if (u >= x) ax = x; else cx = x;
            v = w; w = x; x = u;
            fv = fw; fw = fx; fx = fu;
        } else {
            if (u < x) ax = u; else cx = u;
            if (fu <= fw || w == x) {
                v = w; fv = fw;
                w = u; fw = fu;
            } else if (fu <= fv || v == x || v == w) {
                v = u; fv = fu;
            }
        }
    }
    return fx <= fb ? x : bx;
}

}  // namespace detail

// Powell's conjugate-direction minimization, derivative-free. The direction
// set starts as coordinate axes; each outer iteration line-minimizes along
// every direction, replaces the direction of largest single decrease with
// the net displacement, and the whole set is reset to coordinate axes every
// n+1 outer iterations to avoid linear dependence.
inline std::vector<double> powell_minimize(
    const std::function<double(const std::vector<double>&)>& objective, std::vector<double> x,
    const PowellOptions& opts = {}) {
    const size_t n = x.size();
    if (n == 0) throw std::invalid_argument("powell_minimize: empty start vector");

    std::vector<std::vector<double>> dirs(n, std::vector<double>(n, 0.0));
    auto reset_dirs = [&] {
        for (size_t i = 0; i < n; ++i) {
            std::fill(dirs[i].begin(), dirs[i].end(), 0.0);
            dirs[i][i] = 1.0;
        }
    };
    reset_dirs();

    auto minimize_along = [&](const std::vector<double>& dir, double f_here) -> double {
        double norm = 0.0;
        for (double c : dir) norm = std::max(norm, std::fabs(c));
        if (norm == 0.0) return f_here;
        auto g = [&](double alpha) {
            std::vector<double> y(n);
            for (size_t i = 0; i < n; ++i) y[i] = x[i] + alpha * dir[i];
            return objective(y);
        };
        const double step = 0.1 / norm * (1.0 + 0.01 * std::fabs(f_here));
        const double alpha = detail::line_minimize(g, step, opts.line_tol);
        const double fnew = g(alpha);
        if (fnew < f_here) {
            for (size_t i = 0; i < n; ++i) x[i] += alpha * dir[i];
            return fnew;
        }
        return f_here;
    };

    double f = detail::checked(objective(x));
    for (int outer = 0; outer < opts.max_outer; ++outer) {
        const double f_start = f;
        const std::vector<double> x_start = x;
        size_t biggest_idx = 0;
        double biggest_drop = 0.0;
        for (size_t d = 0; d < n; ++d) {
            const double before = f;
            f = minimize_along(dirs[d], f);
            if (before - f > biggest_drop) {
                biggest_drop = before - f;
                biggest_idx = d;
            }
        }
        // composite direction: net displacement of this sweep
        std::vector<double> net(n);
        double net_norm = 0.0;
        for (size_t i = 0; i < n; ++i) {
            net[i] = x[i] - x_start[i];
            net_norm += net[i] * net[i];
        }
        if (net_norm > 0.0) {
            dirs[biggest_idx] = net;
            f = minimize_along(net, f);
        }
        if ((outer + 1) % static_cast<int>(n + 1) == 0) reset_dirs();
        if (f_start - f < opts.outer_tol) break;
    }
    return x;
}

// max_i w(x_i) |target_i - p(x_i)| over the grid.
inline double weighted_max_deviation(std::span<const double> coeffs, const SampleGrid& grid,
                                     std::span<const double> target_vals) {
    double m = 0.0;
    for (size_t i = 0; i < grid.size(); ++i) {
        const double e = grid.weights[i] * std::fabs(target_vals[i] - eval_poly(coeffs, grid.points[i]));
        if (e > m) m = e;
    }
    return m;
}

namespace detail {

// Weighted L_p mean of the residuals, numerically stable for large even p.
// Converges to the weighted max deviation as p grows; used as a smoothing
// homotopy so the line searches never face the raw kinks of the max.
inline double lp_objective(std::span<const double> coeffs, std::span<const double> pts,
                           std::span<const double> weights, std::span<const double> target,
                           int log2_p) {
    double m = 0.0;
    const size_t n = pts.size();
    std::vector<double> dev(n);
    for (size_t i = 0; i < n; ++i) {
        dev[i] = weights[i] * std::fabs(target[i] - eval_poly(coeffs, pts[i]));
        if (dev[i] > m) m = dev[i];
    }
    if (m == 0.0) return 0.0;
    double acc = 0.0;
    for (size_t i = 0; i < n; ++i) {
        double r = dev[i] / m;
        for (int s = 0; s < log2_p; ++s) r *= r;  // r^(2^log2_p)
        acc += r;
    }
    return m * std::pow(acc / static_cast<double>(n), 1.0 / std::pow(2.0, log2_p));
}

}  // namespace detail

// Minimax refinement of an initial coefficient vector: minimizes the
// weighted maximum absolute deviation from f over the grid. The returned
// objective never exceeds the initial one.
//
// Plain Powell jams on the raw max objective: at a kink where several grid
// points tie for the maximum, no single search direction improves and the
// method stalls well short of the optimum. The refinement therefore runs
// Powell on a sequence of weighted L_p objectives with p doubling from 2
// up to 1024 (each smooth, each warm-started from the previous stage) and
// finishes with a polish pass on the exact max. The search runs in the
// coefficient basis of powers of the rescaled variable
// t = (2x - lo - hi)/(hi - lo); raw x^k coefficients differ by orders of
// magnitude on wide domains, which starves the line searches.
inline std::vector<double> powell_refine(std::vector<double> init, const SampleGrid& grid,
                                         const std::function<double(double)>& f,
                                         const PowellOptions& opts = {}) {
    if (init.empty()) throw std::invalid_argument("powell_refine: empty coefficient vector");
    const double lo = grid.points.front(), hi = grid.points.back();
    const double a = 2.0 / (hi - lo), b = -(hi + lo) / (hi - lo);
    // x = (t - b)/a
    std::vector<double> scaled = detail::affine_substitute(init, 1.0 / a, -b / a);

    std::vector<double> target(grid.size());
    std::vector<double> ts(grid.size());
    for (size_t i = 0; i < grid.size(); ++i) {
        target[i] = f(grid.points[i]);
        ts[i] = a * grid.points[i] + b;
    }
    auto exact_max = [&](const std::vector<double>& q) {
        double m = 0.0;
        for (size_t i = 0; i < ts.size(); ++i) {
            const double e = grid.weights[i] * std::fabs(target[i] - eval_poly(q, ts[i]));
            if (e > m) m = e;
        }
        return m;
    };

    std::vector<double> best = scaled;
    double best_obj = exact_max(best);
    for (int log2_p = 1; log2_p <= 10; ++log2_p) {
        auto stage = [&](const std::vector<double>& q) {
            return detail::lp_objective(q, ts, grid.weights, target, log2_p);
        };
        scaled = powell_minimize(stage, std::move(scaled), opts);
        const double obj = exact_max(scaled);
        if (obj < best_obj) {
            best_obj = obj;
            best = scaled;
        }
    }
    scaled = powell_minimize(exact_max, std::move(scaled), opts);
    if (exact_max(scaled) < best_obj) best = scaled;

    return detail::affine_substitute(best, a, b);
}

inline std::vector<double> powell_refine(std::vector<double> init, const SampleGrid& grid,
                                         Activation kind, const PowellOptions& opts = {}) {
    return powell_refine(std::move(init), grid,
                         [kind](double x) { return eval_activation(kind, x); }, opts);
}

}  // namespace hei::approx
