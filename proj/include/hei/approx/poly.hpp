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
#include <span>
#include <stdexcept>
#include <vector>

#include "hei/approx/activation.hpp"

namespace hei::approx {

// Coefficients are stored in ascending power order throughout: coeffs[k]
// multiplies x^k. Horner evaluation.
inline double eval_poly(std::span<const double> coeffs, double x) {
    double acc = 0.0;
    for (size_t i = coeffs.size(); i-- > 0;) acc = acc * x + coeffs[i];
    return acc;
}

// Fitted polynomial replacement for an activation over a bounded domain.
struct PolyApprox {
    int degree = 0;
    std::vector<double> coeffs;  // ascending powers, degree + 1 entries
    double domain_lo = 0.0;
    double domain_hi = 0.0;
    double e_max_unweighted = 0.0;
    double e_max_weighted = 0.0;

    double operator()(double x) const { return eval_poly(coeffs, x); }

    void validate() const {
        if (degree < 0 || coeffs.size() != static_cast<size_t>(degree) + 1)
            throw std::invalid_argument("PolyApprox: coeffs length must equal degree + 1");
        if (!(domain_lo < domain_hi)) throw std::invalid_argument("PolyApprox: empty domain");
    }

    bool operator==(const PolyApprox&) const = default;
};

struct MaxErrorResult {
    double e_max = 0.0;
    double argmax_x = 0.0;
};

// Dense-grid unweighted maximum deviation |p(x) - f(x)| over [lo, hi],
// plus the location where it is attained. Weights are deliberately ignored:
// this is the final certification metric.
inline MaxErrorResult max_error(std::span<const double> coeffs, Activation kind, double lo,
                                double hi, int n_eval) {
    if (n_eval < 2) throw std::invalid_argument("max_error: need at least 2 evaluation points");
    if (!(lo < hi)) throw std::invalid_argument("max_error: lo must be < hi");
    MaxErrorResult r{0.0, lo};
    const double step = (hi - lo) / (n_eval - 1);
    for (int i = 0; i < n_eval; ++i) {
        double x = (i == n_eval - 1) ? hi : lo + step * i;
        double err = std::fabs(eval_poly(coeffs, x) - eval_activation(kind, x));
        if (err > r.e_max) {
            r.e_max = err;
            r.argmax_x = x;
        }
    }
    return r;
}

// Best-approximation decay rate for a function analytic in a horizontal
// strip of half-width alpha around [-1, 1]: the minimax error of degree-n
// polynomials shrinks like rho^(-n) with rho = e^alpha. Returned value is
// the raw rate rho^(-degree) with no constant prefactor.
inline double bernstein_rate(double strip_half_width, int degree) {
    if (!(strip_half_width > 0.0))
        throw std::invalid_argument("bernstein_rate: strip half-width must be positive");
    if (degree < 0) throw std::invalid_argument("bernstein_rate: negative degree");
    return std::exp(-strip_half_width * degree);
}

}  // namespace hei::approx
