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

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "hei/approx/activation.hpp"
#include "hei/approx/grid.hpp"
#include "hei/approx/poly.hpp"
#include "hei/approx/wls.hpp"

namespace hei::approx {

// Result of the LP global-optimality check of a weighted minimax fit.
struct MinimaxCertificate {
    std::vector<double> coeffs;      // the LP-optimal polynomial, ascending powers of x
    double e_max_weighted = 0.0;     // optimal value of the epigraph LP
    int alternation_count = 0;       // sign alternations of the residual at near-extremal points
};

namespace detail {

// Dense LU with partial pivoting for the (degree+2)-sized basis systems.
struct SmallLu {
    std::vector<double> lu;
    std::vector<size_t> perm;
    size_t n = 0;

    void factor(const std::vector<double>& a, size_t dim) {
        n = dim;
        lu = a;
        perm.resize(n);
        for (size_t i = 0; i < n; ++i) perm[i] = i;
        for (size_t k = 0; k < n; ++k) {
            size_t piv = k;
            for (size_t i = k + 1; i < n; ++i)
                if (std::fabs(lu[i * n + k]) > std::fabs(lu[piv * n + k])) piv = i;
            if (std::fabs(lu[piv * n + k]) < 1e-300)
                throw std::runtime_error("lp_minimax_verify: singular basis matrix");
            if (piv != k) {
                for (size_t j = 0; j < n; ++j) std::swap(lu[k * n + j], lu[piv * n + j]);
                std::swap(perm[k], perm[piv]);
            }
            for (size_t i = k + 1; i < n; ++i) {
                lu[i * n + k] /= lu[k * n + k];
                for (size_t j = k + 1; j < n; ++j) lu[i * n + j] -= lu[i * n + k] * lu[k * n + j];
            }
        }
    }

    std::vector<double> solve(const std::vector<double>& b) const {
        std::vector<double> x(n);
        for (size_t i = 0; i < n; ++i) x[i] = b[perm[i]];
        for (size_t i = 1; i < n; ++i)
            for (size_t k = 0; k < i; ++k) x[i] -= lu[i * n + k] * x[k];
        for (size_t i = n; i-- > 0;) {
            for (size_t k = i + 1; k < n; ++k) x[i] -= lu[i * n + k] * x[k];
            x[i] /= lu[i * n + i];
        }
        return x;
    }

    // solve A^T y = b
    std::vector<double> solve_transposed(const std::vector<double>& b) const {
        std::vector<double> y = b;
        for (size_t i = 0; i < n; ++i) {
            for (size_t k = 0; k < i; ++k) y[i] -= lu[k * n + i] * y[k];
            y[i] /= lu[i * n + i];
        }
        for (size_t i = n; i-- > 0;)
            for (size_t k = i + 1; k < n; ++k) y[i] -= lu[k * n + i] * y[k];
        std::vector<double> x(n);
        for (size_t i = 0; i < n; ++i) x[perm[i]] = y[i];
        return x;
    }
};

// Discrete weighted minimax as a linear program, solved through its dual.
//
// Primal (epigraph form):   min t  s.t.  -t <= w_i (p_c(s_i) - f_i) <= t
// with free coefficients c and points s_i in the rescaled variable
// t_i in [-1, 1]. The dual is a standard-form LP with one column per signed
// grid point,
//     max  sum_i g_i (u_i - v_i)
//     s.t. sum_i a_i (u_i - v_i) = 0,  sum_i (u_i + v_i) = 1,  u, v >= 0,
// where a_i = w_i (1, s_i, ..., s_i^deg) and g_i = w_i f_i. Its simplex
// multipliers at optimality are exactly the primal solution (c*, t*). The
// basis has degree+2 columns, so the revised simplex stays tiny regardless
// of grid density.
class MinimaxLp {
public:
    MinimaxLp(const std::vector<double>& scaled_points, const std::vector<double>& weights,
              const std::vector<double>& values, int degree)
        : pts_(scaled_points), w_(weights), f_(values), deg_(degree),
          m_(static_cast<size_t>(degree) + 2) {}

    // Returns {coeffs in the scaled variable, optimal t}.
    std::pair<std::vector<double>, double> solve() {
        const size_t npts = pts_.size();
        if (npts < m_) throw std::invalid_argument("lp_minimax_verify: grid too small for degree");

        // Initial basis: degree+2 spread-out points. The signs are taken
        // from the null vector of the (degree+1) x (degree+2) point matrix,
        // which alternates strictly for a polynomial (Haar) system; with
        // that choice the basic solution is nonnegative and phase one is
        // unnecessary.
        basis_.clear();
        {
            std::vector<size_t> idx(m_);
            for (size_t k = 0; k < m_; ++k) idx[k] = (npts - 1) * k / (m_ - 1);
            // solve M[:, :m-1] x = -M[:, m-1], null vector = (x, 1)
            std::vector<double> sq((m_ - 1) * (m_ - 1));
            std::vector<double> rhs_col(m_ - 1);
            for (size_t r = 0; r + 1 < m_; ++r) {
                for (size_t j = 0; j + 1 < m_; ++j)
                    sq[r * (m_ - 1) + j] = w_[idx[j]] * std::pow(pts_[idx[j]], static_cast<double>(r));
                rhs_col[r] = -w_[idx[m_ - 1]] * std::pow(pts_[idx[m_ - 1]], static_cast<double>(r));
            }
            SmallLu init_lu;
            init_lu.factor(sq, m_ - 1);
            std::vector<double> lam = init_lu.solve(rhs_col);
            lam.push_back(1.0);
            for (size_t k = 0; k < m_; ++k) basis_.push_back({idx[k], lam[k] > 0.0});
        }

        const size_t max_iter = 20000;
        for (size_t iter = 0; iter < max_iter; ++iter) {
            std::vector<double> bmat(m_ * m_);
            for (size_t j = 0; j < m_; ++j) {
                std::vector<double> col = column(basis_[j]);
                for (size_t r = 0; r < m_; ++r) bmat[r * m_ + j] = col[r];
            }
            lu_.factor(bmat, m_);

            std::vector<double> rhs(m_, 0.0);
            rhs[m_ - 1] = 1.0;
            std::vector<double> xb = lu_.solve(rhs);

            std::vector<double> gb(m_);
            for (size_t j = 0; j < m_; ++j) gb[j] = gain(basis_[j]);
            std::vector<double> prices = lu_.solve_transposed(gb);

            // pricing: most positive reduced cost; Bland's rule once the
            // iteration count suggests degenerate cycling
            const bool bland = iter > 5000;
            double best_rc = 1e-9;
            Col entering{npts, true};
            bool found = false;
            for (size_t i = 0; i < npts; ++i) {
                double pa = prices[m_ - 1];
                double tp = 1.0;
                for (size_t r = 0; r + 1 < m_; ++r) {
                    pa += prices[r] * w_[i] * tp;
                    tp *= pts_[i];
                }
                const double rc_u = w_[i] * f_[i] - pa;
                double pa_v = prices[m_ - 1];
                tp = 1.0;
                for (size_t r = 0; r + 1 < m_; ++r) {
                    pa_v -= prices[r] * w_[i] * tp;
                    tp *= pts_[i];
                }
                const double rc_v = -w_[i] * f_[i] - pa_v;
                if (rc_u > best_rc) {
                    best_rc = rc_u;
                    entering = {i, true};
                    found = true;
                    if (bland) break;
                }
                if (rc_v > best_rc) {
                    best_rc = rc_v;
                    entering = {i, false};
                    found = true;
                    if (bland) break;
                }
            }
            if (!found) {
                // optimal: prices are the primal (c*, t*)
                std::vector<double> coeffs(prices.begin(), prices.end() - 1);
                double t = prices[m_ - 1];
                return {coeffs, std::max(t, 0.0)};
            }

            std::vector<double> dir = lu_.solve(column(entering));
            double min_ratio = std::numeric_limits<double>::infinity();
            size_t leave = m_;
            for (size_t j = 0; j < m_; ++j) {
                if (dir[j] > 1e-11) {
                    const double ratio = xb[j] / dir[j];
                    if (ratio < min_ratio - 1e-13) {
                        min_ratio = ratio;
                        leave = j;
                    }
                }
            }
            if (leave == m_)
                throw std::runtime_error("lp_minimax_verify: LP unbounded (internal error)");
            basis_[leave] = entering;
        }
        throw std::runtime_error("lp_minimax_verify: simplex iteration limit (internal error)");
    }

private:
    struct Col {
        size_t point;
        bool positive;  // u column if true, v column if false
    };

    std::vector<double> column(const Col& c) const {
        std::vector<double> col(m_);
        const double sign = c.positive ? 1.0 : -1.0;
        double tp = 1.0;
        for (size_t r = 0; r + 1 < m_; ++r) {
            col[r] = sign * w_[c.point] * tp;
            tp *= pts_[c.point];
        }
        col[m_ - 1] = 1.0;
        return col;
    }

    double gain(const Col& c) const {
        return (c.positive ? 1.0 : -1.0) * w_[c.point] * f_[c.point];
    }

    const std::vector<double>& pts_;
    const std::vector<double>& w_;
    const std::vector<double>& f_;
    int deg_;
    size_t m_;
    std::vector<Col> basis_;
    SmallLu lu_;
};

// Longest alternating-sign run of the weighted residual over near-extremal
// grid points (|r| >= 0.95 t*), scanned in increasing x.
inline int count_alternations(const std::vector<double>& xs, const std::vector<double>& ws,
                              const std::vector<double>& fs, const std::vector<double>& coeffs,
                              double t_opt) {
    if (t_opt < 1e-10) return 0;
    const double thresh = 0.95 * t_opt;
    int count = 0;
    int prev_sign = 0;
    for (size_t i = 0; i < xs.size(); ++i) {
        const double r = ws[i] * (eval_poly(coeffs, xs[i]) - fs[i]);
        if (std::fabs(r) < thresh) continue;
        const int s = r > 0 ? 1 : -1;
        if (s != prev_sign) {
            ++count;
            prev_sign = s;
        }
    }
    return count;
}

}  // namespace detail

// Global verification of the weighted minimax fit via the LP epigraph
// formulation. Solves the discrete problem exactly on the given grid, then
// runs one refinement pass: the 10 worst points of a dense check grid are
// inserted and the LP is re-solved. When refine_scheme is null, inserted
// points inherit the weight of the nearest original grid point.
inline MinimaxCertificate lp_minimax_verify(const SampleGrid& grid,
                                            const std::function<double(double)>& f, int degree,
                                            const WeightScheme* refine_scheme = nullptr,
                                            int check_points = 100001) {
    if (degree < 0) throw std::invalid_argument("lp_minimax_verify: negative degree");
    const double lo = grid.points.front(), hi = grid.points.back();
    const double a = 2.0 / (hi - lo), b = -(hi + lo) / (hi - lo);

    std::vector<double> xs = grid.points;
    std::vector<double> ws = grid.weights;
    std::vector<double> fs(xs.size());
    for (size_t i = 0; i < xs.size(); ++i) fs[i] = f(xs[i]);

    auto solve_scaled = [&]() {
        std::vector<double> ts(xs.size());
        for (size_t i = 0; i < xs.size(); ++i) ts[i] = a * xs[i] + b;
        detail::MinimaxLp lp(ts, ws, fs, degree);
        auto [c_scaled, t] = lp.solve();
        return std::make_pair(detail::affine_substitute(c_scaled, a, b), t);
    };

    auto [coeffs, t_opt] = solve_scaled();

    // refinement pass: pull in the worst off-grid points
    {
        struct Bad {
            double err, x, w;
        };
        std::vector<Bad> worst;
        const double step = (hi - lo) / (check_points - 1);
        for (int i = 0; i < check_points; ++i) {
            const double x = (i == check_points - 1) ? hi : lo + step * i;
            double w;
            if (refine_scheme) {
                w = refine_scheme->weight_at(x);
            } else {
                size_t near = static_cast<size_t>(
                    std::lround((x - lo) / (hi - lo) * (grid.size() - 1)));
                w = grid.weights[std::min(near, grid.size() - 1)];
            }
            const double err = w * std::fabs(eval_poly(coeffs, x) - f(x));
            if (err > t_opt) worst.push_back({err, x, w});
        }
        std::sort(worst.begin(), worst.end(), [](const Bad& l, const Bad& r) { return l.err > r.err; });
        if (!worst.empty()) {
            for (size_t k = 0; k < std::min<size_t>(10, worst.size()); ++k) {
                xs.push_back(worst[k].x);
                ws.push_back(worst[k].w);
                fs.push_back(f(worst[k].x));
            }
            // keep x order for the alternation scan
            std::vector<size_t> order(xs.size());
            for (size_t i = 0; i < order.size(); ++i) order[i] = i;
            std::sort(order.begin(), order.end(), [&](size_t l, size_t r) { return xs[l] < xs[r]; });
            std::vector<double> x2(xs.size()), w2(xs.size()), f2(xs.size());
            for (size_t i = 0; i < order.size(); ++i) {
                x2[i] = xs[order[i]];
                w2[i] = ws[order[i]];
                f2[i] = fs[order[i]];
            }
            xs = std::move(x2);
            ws = std::move(w2);
            fs = std::move(f2);
            std::tie(coeffs, t_opt) = solve_scaled();
        }
    }

    MinimaxCertificate cert;
    cert.coeffs = std::move(coeffs);
    cert.e_max_weighted = t_opt;
    cert.alternation_count = detail::count_alternations(xs, ws, fs, cert.coeffs, t_opt);
    return cert;
}

inline MinimaxCertificate lp_minimax_verify(const SampleGrid& grid, Activation kind, int degree,
                                            const WeightScheme* refine_scheme = nullptr,
                                            int check_points = 100001) {
    return lp_minimax_verify(grid, [kind](double x) { return eval_activation(kind, x); }, degree,
                             refine_scheme, check_points);
}

}  // namespace hei::approx
