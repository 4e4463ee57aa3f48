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
#include <stdexcept>
#include <vector>

#include "hei/approx/activation.hpp"
#include "hei/approx/grid.hpp"

namespace hei::approx {

namespace detail {

// Compose q(a*x + b): coefficients of q in the scaled variable mapped back
// to ascending powers of x. Horner over coefficient vectors.
inline std::vector<double> affine_substitute(const std::vector<double>& q, double a, double b) {
    std::vector<double> p{q.empty() ? 0.0 : q.back()};
    for (size_t k = q.size() - 1; k-- > 0;) {
        std::vector<double> next(p.size() + 1, 0.0);
        for (size_t i = 0; i < p.size(); ++i) {
            next[i] += b * p[i];
            next[i + 1] += a * p[i];
        }
        next[0] += q[k];
        p = std::move(next);
    }
    return p;
}

// Solve the SPD system G c = rhs in place via Cholesky. Throws on
// (numerically) rank-deficient input.
inline std::vector<double> solve_spd(std::vector<std::vector<double>> g, std::vector<double> rhs) {
    const size_t n = rhs.size();
    for (size_t j = 0; j < n; ++j) {
        double d = g[j][j];
        for (size_t k = 0; k < j; ++k) d -= g[j][k] * g[j][k];
        if (!(d > 1e-14 * std::fabs(g[j][j]) + 1e-300))
            throw std::runtime_error("wls_fit: rank-deficient design matrix");
        g[j][j] = std::sqrt(d);
        for (size_t i = j + 1; i < n; ++i) {
            double s = g[i][j];
            for (size_t k = 0; k < j; ++k) s -= g[i][k] * g[j][k];
            g[i][j] = s / g[j][j];
        }
    }
    // forward then backward substitution
    for (size_t i = 0; i < n; ++i) {
        for (size_t k = 0; k < i; ++k) rhs[i] -= g[i][k] * rhs[k];
        rhs[i] /= g[i][i];
    }
    for (size_t i = n; i-- > 0;) {
        for (size_t k = i + 1; k < n; ++k) rhs[i] -= g[k][i] * rhs[k];
        rhs[i] /= g[i][i];
    }
    return rhs;
}

}  // namespace detail

// Weighted least-squares polynomial fit: minimizes
// sum_i w(x_i) (p(x_i) - f(x_i))^2 over ascending-power coefficient vectors.
//
// The normal equations are assembled in the affinely rescaled variable
// t in [-1, 1] (raw powers of x up to x^8 on wide domains make the Gram
// matrix too ill-conditioned for a 1e-10 residual), solved by Cholesky
// with one step of iterative refinement, and mapped back to powers of x.
inline std::vector<double> wls_fit(const SampleGrid& grid, const std::function<double(double)>& f,
                                   int degree) {
    if (degree < 0) throw std::invalid_argument("wls_fit: negative degree");
    const size_t n_coef = static_cast<size_t>(degree) + 1;
    if (grid.size() <= n_coef) throw std::invalid_argument("wls_fit: grid must have > degree + 1 points");

    const double lo = grid.points.front(), hi = grid.points.back();
    const double a = 2.0 / (hi - lo), b = -(hi + lo) / (hi - lo);

    std::vector<std::vector<double>> gram(n_coef, std::vector<double>(n_coef, 0.0));
    std::vector<double> rhs(n_coef, 0.0);
    std::vector<double> tp(2 * n_coef - 1);
    for (size_t i = 0; i < grid.size(); ++i) {
        const double w = grid.weights[i];
        const double t = a * grid.points[i] + b;
        const double y = f(grid.points[i]);
        tp[0] = 1.0;
        for (size_t k = 1; k < tp.size(); ++k) tp[k] = tp[k - 1] * t;
        for (size_t r = 0; r < n_coef; ++r) {
            rhs[r] += w * tp[r] * y;
            for (size_t c = 0; c <= r; ++c) gram[r][c] += w * tp[r + c];
        }
    }
    for (size_t r = 0; r < n_coef; ++r)
        for (size_t c = r + 1; c < n_coef; ++c) gram[r][c] = gram[c][r];

    std::vector<double> q = detail::solve_spd(gram, rhs);

    // one refinement pass on the residual of the normal equations
    std::vector<double> resid(n_coef, 0.0);
    for (size_t r = 0; r < n_coef; ++r) {
        double gq = 0.0;
        for (size_t c = 0; c < n_coef; ++c) gq += gram[r][c] * q[c];
        resid[r] = rhs[r] - gq;
    }
    std::vector<double> corr = detail::solve_spd(gram, resid);
    for (size_t r = 0; r < n_coef; ++r) q[r] += corr[r];

    return detail::affine_substitute(q, a, b);
}

inline std::vector<double> wls_fit(const SampleGrid& grid, Activation kind, int degree) {
    return wls_fit(grid, [kind](double x) { return eval_activation(kind, x); }, degree);
}

}  // namespace hei::approx
