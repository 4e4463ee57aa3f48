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

// Independent reference implementations used as test oracles. These must
// stay naive: they are the ground truth the fast paths are checked against.

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "hei/ckks/modarith.hpp"

namespace testhelpers {

// O(n^2) negacyclic convolution mod p: c = a * b mod (X^n + 1, p).
inline std::vector<uint64_t> schoolbook_negacyclic(std::span<const uint64_t> a,
                                                   std::span<const uint64_t> b,
                                                   const hei::ckks::Modulus& m) {
    const size_t n = a.size();
    std::vector<uint64_t> out(n, 0);
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = 0; j < n; ++j) {
            const uint64_t prod = hei::ckks::mul_mod(a[i], b[j], m);
            const size_t k = i + j;
            if (k < n) {
                out[k] = hei::ckks::add_mod(out[k], prod, m);
            } else {
                out[k - n] = hei::ckks::sub_mod(out[k - n], prod, m);
            }
        }
    }
    return out;
}

// Naive power-sum polynomial evaluation (no Horner).
inline double naive_poly_eval(std::span<const double> coeffs, double x) {
    double acc = 0.0;
    for (size_t k = 0; k < coeffs.size(); ++k) acc += coeffs[k] * std::pow(x, static_cast<double>(k));
    return acc;
}

inline std::vector<double> random_vector(std::mt19937_64& rng, size_t n, double lo, double hi) {
    std::uniform_real_distribution<double> dist(lo, hi);
    std::vector<double> v(n);
    for (double& x : v) x = dist(rng);
    return v;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    double m = 0.0;
    const size_t n = std::min(a.size(), b.size());
    for (size_t i = 0; i < n; ++i) m = std::max(m, std::fabs(a[i] - b[i]));
    return m;
}

}  // namespace testhelpers
