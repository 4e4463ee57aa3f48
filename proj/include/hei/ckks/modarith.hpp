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
#include <stdexcept>

namespace hei::ckks {

using uint128_t = unsigned __int128;

// Prime modulus (< 2^62) with the precomputed Barrett constant
// floor(2^128 / p), split into two 64-bit words.
struct Modulus {
    uint64_t value = 0;
    uint64_t ratio_lo = 0;
    uint64_t ratio_hi = 0;

    Modulus() = default;
    explicit Modulus(uint64_t p) : value(p) {
        if (p < 2 || p >= (uint64_t(1) << 62))
            throw std::invalid_argument("Modulus: prime must be in [2, 2^62)");
        // floor((2^128 - 1) / p) == floor(2^128 / p) for any p not a power of two
        uint128_t r = ~uint128_t(0) / p;
        ratio_lo = static_cast<uint64_t>(r);
        ratio_hi = static_cast<uint64_t>(r >> 64);
    }
};

inline uint64_t add_mod(uint64_t a, uint64_t b, const Modulus& m) {
    uint64_t s = a + b;
    return s >= m.value ? s - m.value : s;
}

inline uint64_t sub_mod(uint64_t a, uint64_t b, const Modulus& m) {
    return a >= b ? a - b : a + m.value - b;
}

inline uint64_t neg_mod(uint64_t a, const Modulus& m) { return a == 0 ? 0 : m.value - a; }

// Barrett reduction of a 128-bit product.
inline uint64_t reduce_128(uint128_t x, const Modulus& m) {
    const uint64_t x_lo = static_cast<uint64_t>(x);
    const uint64_t x_hi = static_cast<uint64_t>(x >> 64);
    const uint64_t tmp1 = static_cast<uint64_t>((uint128_t(x_lo) * m.ratio_lo) >> 64);
    const uint128_t tmp2 = uint128_t(x_lo) * m.ratio_hi;
    const uint128_t tmp3 = uint128_t(x_hi) * m.ratio_lo;
    const uint128_t mid = uint128_t(tmp1) + static_cast<uint64_t>(tmp2) + static_cast<uint64_t>(tmp3);
    const uint64_t q = x_hi * m.ratio_hi + static_cast<uint64_t>(tmp2 >> 64) +
                       static_cast<uint64_t>(tmp3 >> 64) + static_cast<uint64_t>(mid >> 64);
    uint64_t r = x_lo - q * m.value;
    if (r >= m.value) r -= m.value;
    return r;
}

inline uint64_t mul_mod(uint64_t a, uint64_t b, const Modulus& m) {
    return reduce_128(uint128_t(a) * b, m);
}

// Shoup multiplication: w fixed, w_shoup = floor(w * 2^64 / p). Requires a < p.
inline uint64_t mul_mod_shoup(uint64_t a, uint64_t w, uint64_t w_shoup, const Modulus& m) {
    const uint64_t q = static_cast<uint64_t>((uint128_t(a) * w_shoup) >> 64);
    uint64_t r = a * w - q * m.value;
    if (r >= m.value) r -= m.value;
    return r;
}

inline uint64_t shoup_precompute(uint64_t w, const Modulus& m) {
    return static_cast<uint64_t>((uint128_t(w) << 64) / m.value);
}

inline uint64_t pow_mod(uint64_t base, uint64_t exp, const Modulus& m) {
    uint64_t acc = 1;
    uint64_t b = base >= m.value ? base % m.value : base;
    while (exp > 0) {
        if (exp & 1) acc = mul_mod(acc, b, m);
        b = mul_mod(b, b, m);
        exp >>= 1;
    }
    return acc;
}

// Inverse modulo a prime.
inline uint64_t inv_mod(uint64_t a, const Modulus& m) {
    if (a == 0) throw std::invalid_argument("inv_mod: zero has no inverse");
    return pow_mod(a, m.value - 2, m);
}

// Centered signed representative in (-p/2, p/2].
inline int64_t center(uint64_t a, const Modulus& m) {
    return a > m.value / 2 ? static_cast<int64_t>(a) - static_cast<int64_t>(m.value)
                           : static_cast<int64_t>(a);
}

// Reduce a signed integer into [0, p).
inline uint64_t from_signed(int64_t v, const Modulus& m) {
    int64_t r = v % static_cast<int64_t>(m.value);
    if (r < 0) r += static_cast<int64_t>(m.value);
    return static_cast<uint64_t>(r);
}

}  // namespace hei::ckks
