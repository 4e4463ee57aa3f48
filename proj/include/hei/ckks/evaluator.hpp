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

#include <atomic>
#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "hei/ckks/ciphertext.hpp"
#include "hei/ckks/encoding.hpp"
#include "hei/ckks/keys.hpp"
#include "hei/ckks/ring.hpp"
#include "hei/ckks/rng.hpp"
#include "hei/common.hpp"

namespace hei::ckks {

namespace detail {

inline void check_same_level(const Ciphertext& a, const Ciphertext& b) {
    if (a.level != b.level) throw state_error("ciphertext levels do not match");
}

inline void check_scale_close(double a, double b) {
    const double rel = std::fabs(a - b) / std::max(a, b);
    if (rel > std::ldexp(1.0, -20)) throw state_error("operand scales differ beyond tolerance");
}

// Key switching: given d (coefficient form, level+1 prime rows) and a key
// for secret payload s_old, produce (p0, p1) with p0 + p1 s ~ d * s_old.
// Digits are the plain per-prime residues of d; each digit, lifted exactly
// into every modulus (residues fit a word, so the lift is just reduction),
// multiplies the matching key row over Q*P; dividing by the special prime
// P afterwards shrinks the key noise to O(1) coefficients.
inline std::pair<RingPoly, RingPoly> key_switch(const RingContext& ctx, const RingPoly& d,
                                                const KeySwitchKey& key) {
    if (d.ntt_form) throw state_error("key_switch: coefficient form required");
    if (key.empty()) throw key_error("key_switch: missing key material");
    const size_t lv = d.n_primes;
    const size_t L = ctx.chain_length();
    const size_t n = d.n;
    const Modulus& sp = ctx.special_modulus();
    const NttTable& sp_ntt = ctx.ntt(L);

    RingPoly acc0 = ctx.make_poly(lv, true);
    RingPoly acc1 = ctx.make_poly(lv, true);
    std::vector<uint64_t> sp0(n, 0), sp1(n, 0);

    // lift every digit into every modulus up front, then accumulate the
    // (at most four) products per slot in 128 bits with one reduction
    std::vector<std::vector<uint64_t>> digit_ntt(lv * (lv + 1));
    for (size_t t = 0; t < lv; ++t) {
        const uint64_t* src = d.row(t);
        for (size_t j = 0; j <= lv; ++j) {
            const Modulus& mj = j == lv ? sp : ctx.modulus(j);
            auto& dig = digit_ntt[t * (lv + 1) + j];
            dig.resize(n);
            if (j == t) {
                std::copy(src, src + n, dig.begin());
            } else {
                for (size_t i = 0; i < n; ++i)
                    dig[i] = src[i] >= mj.value ? src[i] % mj.value : src[i];
            }
            (j == lv ? sp_ntt : ctx.ntt(j)).forward(dig.data());
        }
    }
    auto accumulate = [&](size_t j, const Modulus& mj, uint64_t* r0, uint64_t* r1,
                          size_t key_row) {
        for (size_t i = 0; i < n; ++i) {
            uint128_t s0 = 0, s1 = 0;
            for (size_t t = 0; t < lv; ++t) {
                const uint64_t dg = digit_ntt[t * (lv + 1) + j][i];
                s0 += uint128_t(dg) * key.b_rows[t].row(key_row)[i];
                s1 += uint128_t(dg) * key.a_rows[t].row(key_row)[i];
            }
            r0[i] = reduce_128(s0, mj);
            r1[i] = reduce_128(s1, mj);
        }
    };
    for (size_t j = 0; j < lv; ++j)
        accumulate(j, ctx.modulus(j), acc0.row(j), acc1.row(j), j);
    accumulate(lv, sp, sp0.data(), sp1.data(), L);

    // divide by the special prime: (x - [x]_P) / P per row
    ctx.to_coeff(acc0);
    ctx.to_coeff(acc1);
    sp_ntt.inverse(sp0.data());
    sp_ntt.inverse(sp1.data());
    auto mod_down = [&](RingPoly& acc, const std::vector<uint64_t>& sp_row) {
        for (size_t i = 0; i < n; ++i) {
            const int64_t vc = center(sp_row[i], sp);
            for (size_t j = 0; j < lv; ++j) {
                const Modulus& mj = ctx.modulus(j);
                const uint64_t diff = sub_mod(acc.row(j)[i], from_signed(vc, mj), mj);
                acc.row(j)[i] = mul_mod(diff, ctx.special_inv_mod_q(j), mj);
            }
        }
    };
    mod_down(acc0, sp0);
    mod_down(acc1, sp1);
    return {std::move(acc0), std::move(acc1)};
}

}  // namespace detail

// Public-key encryption with seed-derived randomness: stream index =
// running call counter, so a fixed call order reproduces ciphertexts
// bit for bit. Concurrent encryption should use per-thread sub-seeds.
class Encryptor {
public:
    Encryptor(RingContextPtr ctx, PublicKey pk, uint64_t seed)
        : ctx_(std::move(ctx)), pk_(std::move(pk)), seed_(seed) {}

    Ciphertext encrypt(const Plaintext& pt) const {
        if (pt.level != ctx_->top_level())
            throw state_error("encrypt: fresh encryption requires a top-level plaintext");
        Sampler rng = Sampler::derive(seed_, 1 + counter_.fetch_add(1, std::memory_order_relaxed));
        const size_t L = ctx_->chain_length();
        RingPoly u = detail::sample_ternary(*ctx_, L, rng);
        ctx_->to_ntt(u);
        RingPoly e0 = detail::sample_gaussian(*ctx_, L, rng);
        RingPoly e1 = detail::sample_gaussian(*ctx_, L, rng);
        ctx_->to_ntt(e0);
        ctx_->to_ntt(e1);

        RingPoly m = pt.poly;
        ctx_->to_ntt(m);

        RingPoly c0 = pk_.b;
        ctx_->mul_inplace(c0, u);
        ctx_->add_inplace(c0, e0);
        ctx_->add_inplace(c0, m);
        RingPoly c1 = pk_.a;
        ctx_->mul_inplace(c1, u);
        ctx_->add_inplace(c1, e1);

        Ciphertext ct;
        ct.parts = {std::move(c0), std::move(c1)};
        ct.scale = pt.scale;
        ct.level = pt.level;
        return ct;
    }

    const RingContextPtr& context() const { return ctx_; }

private:
    RingContextPtr ctx_;
    PublicKey pk_;
    uint64_t seed_;
    mutable std::atomic<uint64_t> counter_{0};
};

class Decryptor {
public:
    Decryptor(RingContextPtr ctx, SecretKey sk) : ctx_(std::move(ctx)), sk_(std::move(sk)) {}

    Plaintext decrypt(const Ciphertext& ct) const {
        const size_t lv = ct.level + 1;
        RingPoly s = RingContext::truncated(sk_.s, lv);
        RingPoly acc = ct.parts[0];
        ctx_->to_ntt(acc);
        RingPoly c1 = ct.parts[1];
        ctx_->to_ntt(c1);
        ctx_->mul_inplace(c1, s);
        ctx_->add_inplace(acc, c1);
        if (ct.parts.size() == 3) {
            RingPoly c2 = ct.parts[2];
            ctx_->to_ntt(c2);
            ctx_->mul_inplace(c2, s);
            ctx_->mul_inplace(c2, s);
            ctx_->add_inplace(acc, c2);
        }
        ctx_->to_coeff(acc);
        return Plaintext{std::move(acc), ct.scale, ct.level};
    }

    // Decrypt with a cheap sanity check: if the message-plus-noise
    // coefficients approach the modulus, the level budget was blown and
    // the output is garbage rather than approximately correct.
    Plaintext decrypt_checked(const Ciphertext& ct) const {
        Plaintext pt = decrypt(ct);
        const Modulus& top = ctx_->modulus(ct.level);
        size_t near_modulus = 0;
        const uint64_t quarter = top.value / 4;
        const uint64_t upper = top.value - quarter;
        const uint64_t* row = pt.poly.row(ct.level);
        for (size_t i = 0; i < pt.poly.n; ++i)
            if (row[i] > quarter && row[i] < upper) ++near_modulus;
        if (near_modulus > pt.poly.n / 8)
            throw precision_error("decrypt: coefficients approach the modulus; precision lost");
        return pt;
    }

    const RingContextPtr& context() const { return ctx_; }

private:
    RingContextPtr ctx_;
    SecretKey sk_;
};

// Homomorphic operations over public material only.
class Evaluator {
public:
    Evaluator(RingContextPtr ctx, const EvalKeys& keys)
        : ctx_(std::move(ctx)), keys_(&keys), encoder_(ctx_) {}

    const Encoder& encoder() const { return encoder_; }
    const RingContextPtr& context() const { return ctx_; }

    Ciphertext add(const Ciphertext& a, const Ciphertext& b) const {
        detail::check_same_level(a, b);
        detail::check_scale_close(a.scale, b.scale);
        Ciphertext out = a;
        Ciphertext rhs = b;
        align_form(out, rhs);
        for (size_t p = 0; p < out.parts.size(); ++p)
            ctx_->add_inplace(out.parts[p], rhs.parts[p]);
        return out;
    }

    Ciphertext sub(const Ciphertext& a, const Ciphertext& b) const {
        detail::check_same_level(a, b);
        detail::check_scale_close(a.scale, b.scale);
        Ciphertext out = a;
        Ciphertext rhs = b;
        align_form(out, rhs);
        for (size_t p = 0; p < out.parts.size(); ++p)
            ctx_->sub_inplace(out.parts[p], rhs.parts[p]);
        return out;
    }

    Ciphertext negate(const Ciphertext& a) const {
        Ciphertext out = a;
        for (auto& p : out.parts) ctx_->negate_inplace(p);
        return out;
    }

    Ciphertext add_plain(const Ciphertext& a, const Plaintext& pt) const {
        if (a.level != pt.level) throw state_error("add_plain: level mismatch");
        detail::check_scale_close(a.scale, pt.scale);
        Ciphertext out = a;
        RingPoly m = pt.poly;
        if (out.parts[0].ntt_form) {
            ctx_->to_ntt(m);
        } else {
            ctx_->to_coeff(m);
        }
        ctx_->add_inplace(out.parts[0], m);
        return out;
    }

    Ciphertext add_plain(const Ciphertext& a, std::span<const double> v) const {
        return add_plain(a, encoder_.encode(v, a.scale, a.level));
    }

    // Elementwise product with a plaintext, rescaled: consumes one level,
    // the scale returns to ~2^scale_log2 when the plaintext is encoded at
    // the ciphertext scale.
    Ciphertext mul_plain(const Ciphertext& a, const Plaintext& pt) const {
        if (a.level != pt.level) throw state_error("mul_plain: level mismatch");
        if (a.level == 0) throw depth_error("mul_plain: no levels remaining for rescale");
        Ciphertext out = a;
        for (auto& p : out.parts) ctx_->to_ntt(p);
        RingPoly m = pt.poly;
        ctx_->to_ntt(m);
        for (auto& p : out.parts) ctx_->mul_inplace(p, m);
        out.scale = a.scale * pt.scale;
        return rescale(out);
    }

    Ciphertext mul_plain(const Ciphertext& a, std::span<const double> v) const {
        return mul_plain(a, encoder_.encode(v, a.scale, a.level));
    }

    // Plaintext product without the trailing rescale: callers accumulating
    // many products (matrix-vector kernels) rescale once at the end.
    Ciphertext mul_plain_raw(const Ciphertext& a, const Plaintext& pt) const {
        if (a.level != pt.level) throw state_error("mul_plain_raw: level mismatch");
        Ciphertext out = a;
        for (auto& p : out.parts) ctx_->to_ntt(p);
        RingPoly m = pt.poly;
        ctx_->to_ntt(m);
        for (auto& p : out.parts) ctx_->mul_inplace(p, m);
        out.scale = a.scale * pt.scale;
        return out;
    }

    // Ciphertext product: tensor, relinearize back to two parts, rescale.
    Ciphertext mul(const Ciphertext& a, const Ciphertext& b) const {
        detail::check_same_level(a, b);
        if (a.level == 0) throw depth_error("mul: no levels remaining for rescale");
        if (a.size() != 2 || b.size() != 2)
            throw state_error("mul: operands must be relinearized 2-part ciphertexts");
        Ciphertext x = a, y = b;
        for (auto& p : x.parts) ctx_->to_ntt(p);
        for (auto& p : y.parts) ctx_->to_ntt(p);

        RingPoly d0 = x.parts[0];
        ctx_->mul_inplace(d0, y.parts[0]);
        RingPoly d1a = x.parts[0];
        ctx_->mul_inplace(d1a, y.parts[1]);
        RingPoly d1b = x.parts[1];
        ctx_->mul_inplace(d1b, y.parts[0]);
        ctx_->add_inplace(d1a, d1b);
        RingPoly d2 = x.parts[1];
        ctx_->mul_inplace(d2, y.parts[1]);

        // relinearize the quadratic part
        ctx_->to_coeff(d2);
        auto [k0, k1] = detail::key_switch(*ctx_, d2, keys_->relin);
        ctx_->to_coeff(d0);
        ctx_->to_coeff(d1a);
        ctx_->add_inplace(d0, k0);
        ctx_->add_inplace(d1a, k1);

        Ciphertext out;
        out.parts = {std::move(d0), std::move(d1a)};
        out.scale = a.scale * b.scale;
        out.level = a.level;
        return rescale(out);
    }

    // Drop the top active prime: divides the encrypted values by q_l.
    Ciphertext rescale(const Ciphertext& a) const {
        if (a.level == 0) throw depth_error("rescale: already at the last level");
        const size_t lv = a.level + 1;
        const size_t drop = lv - 1;
        const Modulus& qd = ctx_->modulus(drop);
        Ciphertext out;
        out.level = a.level - 1;
        out.scale = a.scale / static_cast<double>(qd.value);
        out.parts.reserve(a.parts.size());
        for (const RingPoly& part : a.parts) {
            RingPoly src = part;
            ctx_->to_coeff(src);
            RingPoly dst = ctx_->make_poly(drop, false);
            for (size_t i = 0; i < src.n; ++i) {
                const int64_t rc = center(src.row(drop)[i], qd);
                for (size_t j = 0; j < drop; ++j) {
                    const Modulus& mj = ctx_->modulus(j);
                    const uint64_t diff = sub_mod(src.row(j)[i], from_signed(rc, mj), mj);
                    dst.row(j)[i] = mul_mod(diff, ctx_->prime_inv_mod_q(drop, j), mj);
                }
            }
            out.parts.push_back(std::move(dst));
        }
        return out;
    }

    // Cyclic left rotation of the slot vector by k.
    Ciphertext rotate(const Ciphertext& a, uint64_t k) const {
        const uint64_t slots = ctx_->slots();
        k %= slots;
        if (k == 0) return a;
        // single hop when the key exists, else power-of-two decomposition
        if (keys_->rot.count(k)) return rotate_step(a, k);
        Ciphertext out = a;
        for (uint64_t bit = 1; bit < slots; bit <<= 1) {
            if (k & bit) {
                if (!keys_->rot.count(bit))
                    throw key_error("rotate: no rotation key for step " + std::to_string(bit));
                out = rotate_step(out, bit);
            }
        }
        return out;
    }

    // Encrypted-plaintext dot product: elementwise product then a
    // rotate-and-add tree. Slot 0 of the result carries <x, w>; one
    // multiplicative level is consumed. d is padded to a power of two
    // internally (encode pads trailing slots with zeros).
    Ciphertext dot_plain(const Ciphertext& x, std::span<const double> w, size_t d) const {
        if (d > ctx_->slots()) throw validation_error("dot_plain: d exceeds slot count");
        if (w.size() != d) throw validation_error("dot_plain: weight length != d");
        return dot_plain(x, encoder_.encode(w, x.scale, x.level), d);
    }

    Ciphertext dot_plain(const Ciphertext& x, const Plaintext& w, size_t d) const {
        if (d > ctx_->slots()) throw validation_error("dot_plain: d exceeds slot count");
        size_t d2 = 1;
        while (d2 < d) d2 <<= 1;
        Ciphertext acc = mul_plain(x, w);
        for (size_t step = 1; step < d2; step <<= 1) acc = add(acc, rotate(acc, step));
        return acc;
    }

private:
    void align_form(Ciphertext& a, Ciphertext& b) const {
        if (a.parts.size() != b.parts.size())
            throw state_error("ciphertext part counts do not match");
        for (size_t p = 0; p < a.parts.size(); ++p) {
            if (a.parts[p].ntt_form != b.parts[p].ntt_form) {
                ctx_->to_ntt(a.parts[p]);
                ctx_->to_ntt(b.parts[p]);
            }
        }
    }

    Ciphertext rotate_step(const Ciphertext& a, uint64_t step) const {
        if (a.size() != 2) throw state_error("rotate: relinearize to 2 parts first");
        const auto it = keys_->rot.find(step);
        if (it == keys_->rot.end())
            throw key_error("rotate: no rotation key for step " + std::to_string(step));
        const size_t n = ctx_->degree();
        uint64_t g = 1;
        for (uint64_t i = 0; i < step; ++i) g = (g * 5) % (2 * n);

        RingPoly c0 = a.parts[0];
        RingPoly c1 = a.parts[1];
        ctx_->to_coeff(c0);
        ctx_->to_coeff(c1);
        RingPoly c0r = ctx_->automorphism(c0, g);
        RingPoly c1r = ctx_->automorphism(c1, g);
        auto [k0, k1] = detail::key_switch(*ctx_, c1r, it->second);
        ctx_->add_inplace(k0, c0r);

        Ciphertext out;
        out.parts = {std::move(k0), std::move(k1)};
        out.scale = a.scale;
        out.level = a.level;
        return out;
    }

    RingContextPtr ctx_;
    const EvalKeys* keys_;
    Encoder encoder_;
};

}  // namespace hei::ckks
