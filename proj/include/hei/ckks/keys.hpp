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
#include <map>
#include <set>
#include <vector>

#include "hei/ckks/ciphertext.hpp"
#include "hei/ckks/ring.hpp"
#include "hei/ckks/rng.hpp"
#include "hei/common.hpp"

namespace hei::ckks {

// Ternary secret, stored in NTT form over all moduli (ciphertext primes
// plus the key-switching prime).
struct SecretKey {
    RingPoly s;
};

// RLWE public key (b, a) with b = -a s + e, over the ciphertext primes.
struct PublicKey {
    RingPoly b, a;
};

// Key-switching key: one row per decomposition digit t, each row an RLWE
// pair over all moduli whose payload carries P * s_old on digit t's prime.
struct KeySwitchKey {
    std::vector<RingPoly> b_rows, a_rows;
    bool empty() const { return b_rows.empty(); }
};

// Everything the evaluating party may hold: no secret material.
struct EvalKeys {
    PublicKey pk;
    KeySwitchKey relin;                    // switches s^2 -> s
    std::map<uint64_t, KeySwitchKey> rot;  // per rotation step, switches s(X^g) -> s
};

struct KeySet {
    SecretKey secret;
    EvalKeys eval;
};

namespace detail {

inline RingPoly sample_uniform(const RingContext& ctx, size_t n_primes, Sampler& rng) {
    RingPoly p = ctx.make_poly(n_primes, true);  // uniform residues, valid in any form
    for (size_t t = 0; t < n_primes; ++t) {
        uint64_t* row = p.row(t);
        const uint64_t q = ctx.modulus(t).value;
        for (size_t i = 0; i < p.n; ++i) row[i] = rng.uniform_below(q);
    }
    return p;
}

inline RingPoly sample_ternary(const RingContext& ctx, size_t n_primes, Sampler& rng) {
    RingPoly p = ctx.make_poly(n_primes, false);
    for (size_t i = 0; i < p.n; ++i) {
        const int v = rng.ternary();
        for (size_t t = 0; t < n_primes; ++t)
            p.row(t)[i] = from_signed(v, ctx.modulus(t));
    }
    return p;
}

inline RingPoly sample_gaussian(const RingContext& ctx, size_t n_primes, Sampler& rng,
                                double sigma = 3.2) {
    RingPoly p = ctx.make_poly(n_primes, false);
    for (size_t i = 0; i < p.n; ++i) {
        const int v = rng.gaussian(sigma);
        for (size_t t = 0; t < n_primes; ++t)
            p.row(t)[i] = from_signed(v, ctx.modulus(t));
    }
    return p;
}

// Build one key-switching key for payload s_old (NTT form, all moduli):
// row t: (b_t, a_t) with b_t = -a_t s + e_t + D_t, where D_t is zero
// except for [P]_{q_t} * s_old on prime row t. Digits of the switched
// polynomial are its plain per-prime residues, so the keys work at every
// level without regeneration.
inline KeySwitchKey make_kswitch_key(const RingContext& ctx, const RingPoly& s_ntt,
                                     const RingPoly& s_old_ntt, Sampler& rng) {
    const size_t L = ctx.chain_length();
    const size_t all = L + 1;
    KeySwitchKey key;
    key.b_rows.reserve(L);
    key.a_rows.reserve(L);
    for (size_t t = 0; t < L; ++t) {
        RingPoly a = sample_uniform(ctx, all, rng);
        RingPoly e = sample_gaussian(ctx, all, rng);
        ctx.to_ntt(e);
        RingPoly b = a;
        ctx.mul_inplace(b, s_ntt);
        ctx.negate_inplace(b);
        ctx.add_inplace(b, e);
        // add the gadget payload on row t
        {
            uint64_t* row = b.row(t);
            const uint64_t* sold = s_old_ntt.row(t);
            const Modulus& m = ctx.modulus(t);
            const uint64_t p_mod_q = ctx.special_mod_q(t);
            for (size_t i = 0; i < b.n; ++i)
                row[i] = add_mod(row[i], mul_mod(p_mod_q, sold[i], m), m);
        }
        key.b_rows.push_back(std::move(b));
        key.a_rows.push_back(std::move(a));
    }
    return key;
}

}  // namespace detail

// Deterministic key generation. Rotation keys cover the power-of-two steps
// up to half the slot count plus any explicitly requested steps (packed
// matrix-vector kernels ask for their baby/giant steps here).
inline KeySet keygen(const RingContext& ctx, uint64_t seed,
                     const std::vector<uint64_t>& extra_rotation_steps = {}) {
    Sampler rng = Sampler::derive(seed, 0);
    const size_t L = ctx.chain_length();
    const size_t all = L + 1;
    const size_t n = ctx.degree();

    KeySet ks;
    RingPoly s = detail::sample_ternary(ctx, all, rng);
    ctx.to_ntt(s);
    ks.secret.s = s;

    // public key over ciphertext primes only
    {
        RingPoly a = detail::sample_uniform(ctx, L, rng);
        RingPoly e = detail::sample_gaussian(ctx, L, rng);
        ctx.to_ntt(e);
        RingPoly s_ct = RingContext::truncated(s, L);
        RingPoly b = a;
        ctx.mul_inplace(b, s_ct);
        ctx.negate_inplace(b);
        ctx.add_inplace(b, e);
        ks.eval.pk = PublicKey{std::move(b), std::move(a)};
    }

    // relinearization key: payload s^2
    {
        RingPoly s2 = s;
        ctx.mul_inplace(s2, s);
        ks.eval.relin = detail::make_kswitch_key(ctx, s, s2, rng);
    }

    // rotation keys: payload s(X^g) for g = 5^step mod 2N
    std::set<uint64_t> steps;
    for (uint64_t st = 1; st <= ctx.slots() / 2; st <<= 1) steps.insert(st);
    for (uint64_t st : extra_rotation_steps) {
        if (st == 0) continue;
        steps.insert(st % ctx.slots());
    }
    RingPoly s_coeff = s;
    ctx.to_coeff(s_coeff);
    for (uint64_t st : steps) {
        if (st == 0) continue;
        uint64_t g = 1;
        for (uint64_t k = 0; k < st; ++k) g = (g * 5) % (2 * n);
        RingPoly s_rot = ctx.automorphism(s_coeff, g);
        ctx.to_ntt(s_rot);
        ks.eval.rot.emplace(st, detail::make_kswitch_key(ctx, s, s_rot, rng));
    }
    return ks;
}

}  // namespace hei::ckks
