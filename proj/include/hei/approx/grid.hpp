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

#include <charconv>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hei::approx {

// Closed interval with a multiplicative error weight.
struct WeightRegion {
    double lo;
    double hi;
    double weight;
};

// Region-weighted error measure over a fitting domain. Lookup is
// deterministic: the first region containing x wins, otherwise
// default_weight applies.
struct WeightScheme {
    std::vector<WeightRegion> regions;
    double default_weight = 1.0;

    double weight_at(double x) const {
        for (const auto& r : regions) {
            if (x >= r.lo && x <= r.hi) return r.weight;
        }
        return default_weight;
    }

    void validate() const {
        if (default_weight <= 0.0) throw std::invalid_argument("WeightScheme: default weight must be positive");
        for (const auto& r : regions) {
            if (r.weight <= 0.0) throw std::invalid_argument("WeightScheme: region weights must be positive");
            if (r.lo > r.hi) throw std::invalid_argument("WeightScheme: region lo > hi");
        }
    }

    // Center-emphasized scheme used for activation fitting on [-7, 7]:
    // weight 3 on [-3, 3] where nearly all batch-normalized pre-activations
    // land, weight 2 on the tails [-7, -4] and [4, 7], 1 elsewhere.
    static WeightScheme center_weighted() {
        WeightScheme s;
        s.regions = {{-3.0, 3.0, 3.0}, {-7.0, -4.0, 2.0}, {4.0, 7.0, 2.0}};
        s.default_weight = 1.0;
        return s;
    }

    static WeightScheme uniform(double w = 1.0) {
        WeightScheme s;
        s.default_weight = w;
        return s;
    }

    // Parse a scheme spec: the named aliases "standard" (alias "paper") and
    // "uniform", or a comma list of lo:hi:w regions with an optional
    // default:w entry, e.g. "-3:3:3,-7:-4:2,4:7:2,default:1".
    static WeightScheme parse(std::string_view spec) {
        if (spec == "standard" || spec == "paper") return center_weighted();
        if (spec == "uniform" || spec == "none") return uniform();
        WeightScheme s;
        auto to_double = [&](std::string_view tok) {
            double v = 0.0;
            auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
            if (ec != std::errc() || p != tok.data() + tok.size())
                throw std::invalid_argument("weight spec: bad number '" + std::string(tok) + "'");
            return v;
        };
        size_t pos = 0;
        while (pos <= spec.size()) {
            size_t comma = spec.find(',', pos);
            if (comma == std::string_view::npos) comma = spec.size();
            std::string_view entry = spec.substr(pos, comma - pos);
            pos = comma + 1;
            if (entry.empty()) continue;
            const size_t c1 = entry.find(':');
            if (c1 == std::string_view::npos)
                throw std::invalid_argument("weight spec: expected lo:hi:w or default:w");
            if (entry.substr(0, c1) == "default") {
                s.default_weight = to_double(entry.substr(c1 + 1));
                continue;
            }
            const size_t c2 = entry.find(':', c1 + 1);
            if (c2 == std::string_view::npos)
                throw std::invalid_argument("weight spec: expected lo:hi:w");
            WeightRegion r{to_double(entry.substr(0, c1)),
                           to_double(entry.substr(c1 + 1, c2 - c1 - 1)),
                           to_double(entry.substr(c2 + 1))};
            s.regions.push_back(r);
        }
        s.validate();
        return s;
    }
};

// Uniform sample points over [lo, hi] with per-point weights.
struct SampleGrid {
    std::vector<double> points;   // strictly increasing, endpoints included
    std::vector<double> weights;  // same length, all positive

    size_t size() const { return points.size(); }
};

inline SampleGrid build_grid(double lo, double hi, const WeightScheme& scheme, int n_points) {
    if (n_points < 2) throw std::invalid_argument("build_grid: need at least 2 points");
    if (!(lo < hi)) throw std::invalid_argument("build_grid: lo must be < hi");
    scheme.validate();
    SampleGrid g;
    g.points.resize(static_cast<size_t>(n_points));
    g.weights.resize(static_cast<size_t>(n_points));
    const double step = (hi - lo) / (n_points - 1);
    for (int i = 0; i < n_points; ++i) {
        double x = (i == n_points - 1) ? hi : lo + step * i;
        g.points[static_cast<size_t>(i)] = x;
        g.weights[static_cast<size_t>(i)] = scheme.weight_at(x);
    }
    return g;
}

}  // namespace hei::approx
