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
#include <memory>
#include <vector>

#include "hei/ckks/modarith.hpp"
#include "hei/ckks/ntt.hpp"
#include "hei/ckks/params.hpp"
#include "hei/ckks/primes.hpp"
#include "hei/common.hpp"

namespace hei::ckks {

// Polynomial in Z_Q[X]/(X^N + 1), residue-number-system representation:
// one row of N residues per active prime. Rows 0..n_primes-1 map to the
// context's modulus list in order; key material carries one extra row for
// the special prime. ntt_form marks evaluation (NTT) representation.
struct RingPoly {
    std::vector<uint64_t> data;  // n_primes rows of n residues, contiguous
    size_t n = 0;
    size_t n_primes = 0;
    bool ntt_form = false;

    RingPoly() = default;
    RingPoly(size_t n_, size_t n_primes_, bool ntt)
        : data(n_ * n_primes_, 0), n(n_), n_primes(n_primes_), ntt_form(ntt) {}

    uint64_t* row(size_t t) { return data.data() + t * n; }
    const uint64_t* row(size_t t) const { return data.data() + t * n; }

    bool operator==(const RingPoly& o) const {
        return n == o.n && n_primes == o.n_primes && ntt_form == o.ntt_form && data == o.data;
    }
};

// Shared immutable state for one parameter set: moduli (ciphertext primes
// followed by the key-switching prime), NTT tables, and the precomputed
// constants used by rescale and key switching.
class RingContext {
public:
    explicit RingContext(CkksParams params) : params_(std::move(params)) {
        params_.validate();
        const uint64_t two_n = 2ull * params_.ring_dim;
        std::vector<uint64_t> taken;
        for (int bits : params_.coeff_mod_bits) {
            uint64_t p = generate_ntt_prime(bits, two_n, taken);
            taken.push_back(p);
            mods_.emplace_back(p);
        }
        for (const Modulus& m : mods_) ntt_.emplace_back(params_.ring_dim, m);

        const size_t L = chain_length();
        // special prime residues and inverses mod each ciphertext prime
        const uint64_t sp = mods_[L].value;
        special_mod_q_.resize(L);
        special_inv_mod_q_.resize(L);
        for (size_t j = 0; j < L; ++j) {
            special_mod_q_[j] = sp % mods_[j].value;
            special_inv_mod_q_[j] = inv_mod(special_mod_q_[j], mods_[j]);
        }
        // q_l mod q_j and inverses, for rescale from level l
        prime_inv_mod_q_.resize(L);
        for (size_t l = 0; l < L; ++l) {
            prime_inv_mod_q_[l].resize(l);
            for (size_t j = 0; j < l; ++j)
                prime_inv_mod_q_[l][j] = inv_mod(mods_[l].value % mods_[j].value, mods_[j]);
        }
    }

    const CkksParams& params() const { return params_; }
    size_t degree() const { return params_.ring_dim; }
    size_t slots() const { return params_.ring_dim / 2; }
    size_t chain_length() const { return params_.chain_length(); }
    size_t top_level() const { return chain_length() - 1; }

    const Modulus& modulus(size_t t) const { return mods_[t]; }
    const Modulus& special_modulus() const { return mods_[chain_length()]; }
    const NttTable& ntt(size_t t) const { return ntt_[t]; }

    uint64_t special_mod_q(size_t j) const { return special_mod_q_[j]; }
    uint64_t special_inv_mod_q(size_t j) const { return special_inv_mod_q_[j]; }
    uint64_t prime_inv_mod_q(size_t l, size_t j) const { return prime_inv_mod_q_[l][j]; }

    // ---- polynomial helpers ----

    RingPoly make_poly(size_t n_primes, bool ntt) const {
        return RingPoly(degree(), n_primes, ntt);
    }

    void to_ntt(RingPoly& p) const {
        if (p.ntt_form) return;
        for (size_t t = 0; t < p.n_primes; ++t) ntt_[t].forward(p.row(t));
        p.ntt_form = true;
    }

    void to_coeff(RingPoly& p) const {
        if (!p.ntt_form) return;
        for (size_t t = 0; t < p.n_primes; ++t) ntt_[t].inverse(p.row(t));
        p.ntt_form = false;
    }

    void add_inplace(RingPoly& a, const RingPoly& b) const {
        check_compatible(a, b);
        for (size_t t = 0; t < a.n_primes; ++t) {
            uint64_t* ra = a.row(t);
            const uint64_t* rb = b.row(t);
            const Modulus& m = mods_[t];
            for (size_t i = 0; i < a.n; ++i) ra[i] = add_mod(ra[i], rb[i], m);
        }
    }

    void sub_inplace(RingPoly& a, const RingPoly& b) const {
        check_compatible(a, b);
        for (size_t t = 0; t < a.n_primes; ++t) {
            uint64_t* ra = a.row(t);
            const uint64_t* rb = b.row(t);
            const Modulus& m = mods_[t];
            for (size_t i = 0; i < a.n; ++i) ra[i] = sub_mod(ra[i], rb[i], m);
        }
    }

    void negate_inplace(RingPoly& a) const {
        for (size_t t = 0; t < a.n_primes; ++t) {
            uint64_t* ra = a.row(t);
            const Modulus& m = mods_[t];
            for (size_t i = 0; i < a.n; ++i) ra[i] = neg_mod(ra[i], m);
        }
    }

    // pointwise product; both operands must be in NTT form
    void mul_inplace(RingPoly& a, const RingPoly& b) const {
        check_compatible(a, b);
        if (!a.ntt_form || !b.ntt_form)
            throw state_error("RingContext::mul_inplace: operands must be in NTT form");
        for (size_t t = 0; t < a.n_primes; ++t) {
            uint64_t* ra = a.row(t);
            const uint64_t* rb = b.row(t);
            const Modulus& m = mods_[t];
            for (size_t i = 0; i < a.n; ++i) ra[i] = mul_mod(ra[i], rb[i], m);
        }
    }

    void mul_acc(const RingPoly& a, const RingPoly& b, RingPoly& acc) const {
        check_compatible(a, b);
        check_compatible(a, acc);
        for (size_t t = 0; t < a.n_primes; ++t) {
            const uint64_t* ra = a.row(t);
            const uint64_t* rb = b.row(t);
            uint64_t* rc = acc.row(t);
            const Modulus& m = mods_[t];
            for (size_t i = 0; i < a.n; ++i)
                rc[i] = add_mod(rc[i], mul_mod(ra[i], rb[i], m), m);
        }
    }

    // Galois automorphism X -> X^g on a coefficient-form polynomial.
    RingPoly automorphism(const RingPoly& p, uint64_t g) const {
        if (p.ntt_form) throw state_error("automorphism: coefficient form required");
        const size_t n = p.n;
        RingPoly out(n, p.n_primes, false);
        for (size_t t = 0; t < p.n_primes; ++t) {
            const uint64_t* src = p.row(t);
            uint64_t* dst = out.row(t);
            const Modulus& m = mods_[t];
            for (size_t i = 0; i < n; ++i) {
                const uint64_t j = (i * g) % (2 * n);
                if (j < n) {
                    dst[j] = src[i];
                } else {
                    dst[j - n] = neg_mod(src[i], m);
                }
            }
        }
        return out;
    }

    // Drop rows above new_n_primes (e.g. after rescale).
    static RingPoly truncated(const RingPoly& p, size_t new_n_primes) {
        RingPoly out(p.n, new_n_primes, p.ntt_form);
        std::copy(p.data.begin(), p.data.begin() + new_n_primes * p.n, out.data.begin());
        return out;
    }

private:
    void check_compatible(const RingPoly& a, const RingPoly& b) const {
        if (a.n != b.n || a.n_primes != b.n_primes)
            throw state_error("RingContext: polynomial shape mismatch");
        if (a.ntt_form != b.ntt_form)
            throw state_error("RingContext: polynomial form mismatch");
    }

    CkksParams params_;
    std::vector<Modulus> mods_;  // chain_length ciphertext primes + special
    std::vector<NttTable> ntt_;
    std::vector<uint64_t> special_mod_q_, special_inv_mod_q_;
    std::vector<std::vector<uint64_t>> prime_inv_mod_q_;
};

using RingContextPtr = std::shared_ptr<const RingContext>;

inline RingContextPtr make_context(const CkksParams& params) {
    return std::make_shared<const RingContext>(params);
}

}  // namespace hei::ckks
