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

#include <cstdint>
#include <vector>

#include "hei/ckks/modarith.hpp"
#include "hei/ckks/primes.hpp"

namespace hei::ckks {

// Negacyclic number-theoretic transform for one prime: evaluation of
// polynomials mod (X^N + 1, p) at odd powers of a primitive 2N-th root of
// unity. Cooley-Tukey forward / Gentleman-Sande inverse with twiddles in
// bit-reversed order and Shoup precomputation (Harvey-style butterflies,
// eager reduction).
class NttTable {
public:
    NttTable() = default;

    NttTable(size_t n, const Modulus& m) : n_(n), mod_(m) {
        size_t log_n = 0;
        while ((size_t(1) << log_n) < n) ++log_n;
        const uint64_t psi = find_primitive_root(2 * n, m);
        const uint64_t psi_inv = inv_mod(psi, m);
        roots_.resize(n);
        roots_shoup_.resize(n);
        inv_roots_.resize(n);
        inv_roots_shoup_.resize(n);
        uint64_t pow_f = 1, pow_i = 1;
        for (size_t i = 0; i < n; ++i) {
            size_t rev = bit_reverse(i, log_n);
            roots_[rev] = pow_f;
            roots_shoup_[rev] = shoup_precompute(pow_f, m);
            inv_roots_[rev] = pow_i;
            inv_roots_shoup_[rev] = shoup_precompute(pow_i, m);
            pow_f = mul_mod(pow_f, psi, m);
            pow_i = mul_mod(pow_i, psi_inv, m);
        }
        n_inv_ = inv_mod(static_cast<uint64_t>(n), m);
        n_inv_shoup_ = shoup_precompute(n_inv_, m);
    }

    // coefficient order in (reduced), bit-reversed evaluation order out
    // (reduced). Internally values ride in [0, 4p) and are corrected once
    // at the end (Harvey's lazy butterflies); requires p < 2^62.
    void forward(uint64_t* a) const {
        const uint64_t p = mod_.value;
        const uint64_t two_p = 2 * p;
        size_t t = n_;
        for (size_t m = 1; m < n_; m <<= 1) {
            t >>= 1;
            for (size_t i = 0; i < m; ++i) {
                const uint64_t s = roots_[m + i];
                const uint64_t s_sh = roots_shoup_[m + i];
                uint64_t* x = a + 2 * i * t;
                uint64_t* y = x + t;
                for (size_t j = 0; j < t; ++j) {
                    uint64_t u = x[j];
                    if (u >= two_p) u -= two_p;
                    const uint64_t q = static_cast<uint64_t>((uint128_t(y[j]) * s_sh) >> 64);
                    const uint64_t v = y[j] * s - q * p;  // < 2p
                    x[j] = u + v;
                    y[j] = u - v + two_p;
                }
            }
        }
        for (size_t j = 0; j < n_; ++j) {
            uint64_t v = a[j];
            if (v >= two_p) v -= two_p;
            if (v >= p) v -= p;
            a[j] = v;
        }
    }

    // bit-reversed evaluation order in (reduced), coefficient order out
    // (reduced); same lazy-reduction scheme, values kept in [0, 2p).
    void inverse(uint64_t* a) const {
        const uint64_t p = mod_.value;
        const uint64_t two_p = 2 * p;
        size_t t = 1;
        for (size_t m = n_; m > 1; m >>= 1) {
            const size_t h = m >> 1;
            size_t j1 = 0;
            for (size_t i = 0; i < h; ++i) {
                const uint64_t s = inv_roots_[h + i];
                const uint64_t s_sh = inv_roots_shoup_[h + i];
                uint64_t* x = a + j1;
                uint64_t* y = x + t;
                for (size_t j = 0; j < t; ++j) {
                    const uint64_t u = x[j];
                    const uint64_t v = y[j];
                    uint64_t sum = u + v;  // < 4p
                    if (sum >= two_p) sum -= two_p;
                    x[j] = sum;
                    const uint64_t diff = u - v + two_p;  // < 4p
                    const uint64_t q = static_cast<uint64_t>((uint128_t(diff) * s_sh) >> 64);
                    y[j] = diff * s - q * p;  // < 2p
                }
                j1 += 2 * t;
            }
            t <<= 1;
        }
        for (size_t j = 0; j < n_; ++j) {
            const uint64_t q = static_cast<uint64_t>((uint128_t(a[j]) * n_inv_shoup_) >> 64);
            uint64_t v = a[j] * n_inv_ - q * p;
            if (v >= p) v -= p;
            a[j] = v;
        }
    }

    const Modulus& modulus() const { return mod_; }
    size_t size() const { return n_; }

private:
    static size_t bit_reverse(size_t v, size_t bits) {
        size_t r = 0;
        for (size_t i = 0; i < bits; ++i) {
            r = (r << 1) | (v & 1);
            v >>= 1;
        }
        return r;
    }

    size_t n_ = 0;
    Modulus mod_;
    std::vector<uint64_t> roots_, roots_shoup_;
    std::vector<uint64_t> inv_roots_, inv_roots_shoup_;
    uint64_t n_inv_ = 0, n_inv_shoup_ = 0;
};

}  // namespace hei::ckks
