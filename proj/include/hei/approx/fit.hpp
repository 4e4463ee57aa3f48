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

#include <ostream>
#include <string>
#include <string_view>

#include "json.hpp"

#include "hei/approx/activation.hpp"
#include "hei/approx/grid.hpp"
#include "hei/approx/lp_verify.hpp"
#include "hei/approx/poly.hpp"
#include "hei/approx/powell.hpp"
#include "hei/approx/wls.hpp"
#include "hei/common.hpp"

namespace hei::approx {

// Default grid density for fitting on [-7, 7]: step 0.01.
inline constexpr int kDefaultFitGridPoints = 1401;

// Full fitting pipeline: weighted least squares -> Powell minimax
// refinement -> dense unweighted error certification.
inline PolyApprox fit_activation(Activation kind, double lo, double hi,
                                 const WeightScheme& scheme, int degree,
                                 int grid_points = kDefaultFitGridPoints,
                                 const PowellOptions& opts = {}, int certify_points = 100001) {
    SampleGrid grid = build_grid(lo, hi, scheme, grid_points);
    std::vector<double> coeffs = wls_fit(grid, kind, degree);
    coeffs = powell_refine(std::move(coeffs), grid, kind, opts);

    PolyApprox p;
    p.degree = degree;
    p.coeffs = std::move(coeffs);
    p.domain_lo = lo;
    p.domain_hi = hi;
    p.e_max_unweighted = max_error(p.coeffs, kind, lo, hi, certify_points).e_max;
    std::vector<double> target(grid.size());
    for (size_t i = 0; i < grid.size(); ++i) target[i] = eval_activation(kind, grid.points[i]);
    p.e_max_weighted = weighted_max_deviation(p.coeffs, grid, target);
    return p;
}

// The degree-4 softplus replacement shipped as the default activation for
// inference, produced by fit_activation over [-7, 7] under the
// center-weighted scheme. The x^3 coefficient sits at roundoff scale
// (softplus minus x/2 is even) and is carried as-is.
inline PolyApprox softplus_quartic_reference() {
    PolyApprox p;
    p.degree = 4;
    p.coeffs = {0.738099333, 0.5, 0.0887234775, -1.5983e-17, -0.00068481};
    p.domain_lo = -7.0;
    p.domain_hi = 7.0;
    p.e_max_unweighted = 0.067;
    p.e_max_weighted = 0.1243;
    return p;
}

inline nlohmann::json poly_to_json(const PolyApprox& p, std::string_view activation) {
    return nlohmann::json{{"activation", std::string(activation)},
                          {"degree", p.degree},
                          {"domain", {p.domain_lo, p.domain_hi}},
                          {"coeffs_ascending", p.coeffs},
                          {"e_max_unweighted", p.e_max_unweighted},
                          {"e_max_weighted", p.e_max_weighted}};
}

struct NamedPoly {
    PolyApprox poly;
    std::string activation;
};

inline NamedPoly poly_from_json(const nlohmann::json& j) {
    NamedPoly np;
    try {
        np.activation = j.at("activation").get<std::string>();
        np.poly.degree = j.at("degree").get<int>();
        np.poly.domain_lo = j.at("domain").at(0).get<double>();
        np.poly.domain_hi = j.at("domain").at(1).get<double>();
        np.poly.coeffs = j.at("coeffs_ascending").get<std::vector<double>>();
        np.poly.e_max_unweighted = j.value("e_max_unweighted", 0.0);
        np.poly.e_max_weighted = j.value("e_max_weighted", 0.0);
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(std::string("polynomial json: ") + e.what());
    }
    np.poly.validate();
    return np;
}

// CSV error curve: x, f(x), p(x), abs_error.
inline void write_error_curve_csv(std::ostream& os, std::span<const double> coeffs,
                                  Activation kind, double lo, double hi, int n_points) {
    os << "x,f_x,p_x,abs_error\n";
    const double step = (hi - lo) / (n_points - 1);
    for (int i = 0; i < n_points; ++i) {
        const double x = (i == n_points - 1) ? hi : lo + step * i;
        const double fx = eval_activation(kind, x);
        const double px = eval_poly(coeffs, x);
        os << x << ',' << fx << ',' << px << ',' << std::fabs(px - fx) << '\n';
    }
}

}  // namespace hei::approx
