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
#include <vector>

#include "hei/ckks/modarith.hpp"

namespace hei::ckks {

// Deterministic Miller-Rabin for 64-bit integers.
inline bool is_prime(uint64_t n) {
    if (n < 2) return false;
    for (uint64_t p : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
        if (n == p) return true;
        if (n % p == 0) return false;
    }
    Modulus m(n);
    uint64_t d = n - 1;
    int r = 0;
    while ((d & 1) == 0) {
        d >>= 1;
        ++r;
    }
    for (uint64_t a : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
        uint64_t x = pow_mod(a, d, m);
        if (x == 1 || x == n - 1) continue;
        bool witness = true;
        for (int i = 1; i < r; ++i) {
            x = mul_mod(x, x, m);
            if (x == n - 1) {
                witness = false;
                break;
            }
        }
        if (witness) return false;
    }
    return true;
}

// Largest primes of exactly bit_length bits with p = 1 (mod 2N), skipping
// any already in `taken`. NTT-friendliness for the negacyclic ring of
// dimension N requires a primitive 2N-th root of unity mod p.
inline uint64_t generate_ntt_prime(int bit_length, uint64_t two_n,
                                   const std::vector<uint64_t>& taken) {
    if (bit_length < 20 || bit_length > 61)
        throw std::invalid_argument("generate_ntt_prime: bit length out of range");
    const uint64_t hi = (uint64_t(1) << bit_length) - 1;
    const uint64_t lo = uint64_t(1) << (bit_length - 1);
    uint64_t p = (hi / two_n) * two_n + 1;
    while (p >= lo) {
        if (p <= hi && is_prime(p)) {
            bool used = false;
            for (uint64_t t : taken)
                if (t == p) used = true;
            if (!used) return p;
        }
        p -= two_n;
    }
    throw std::runtime_error("generate_ntt_prime: no prime found");
}

// Primitive 2N-th root of unity modulo p (p = 1 mod 2N, 2N a power of two).
inline uint64_t find_primitive_root(uint64_t two_n, const Modulus& m) {
    const uint64_t exp = (m.value - 1) / two_n;
    for (uint64_t g = 2; g < 1000; ++g) {
        uint64_t root = pow_mod(g, exp, m);
        // order is exactly 2N iff root^N = -1
        if (pow_mod(root, two_n / 2, m) == m.value - 1) return root;
    }
    throw std::runtime_error("find_primitive_root: no generator found");
}

}  // namespace hei::ckks
