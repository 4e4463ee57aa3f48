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
#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include "hei/ckks/ciphertext.hpp"
#include "hei/ckks/ring.hpp"
#include "hei/common.hpp"

namespace hei::ckks {

namespace detail {

// Little fixed-width unsigned integer for composing RNS residues exactly
// (up to three 60-bit ciphertext primes fit comfortably in 192 bits).
struct U192 {
    uint64_t w[3] = {0, 0, 0};

    void mul_add(uint64_t mul, uint64_t add) {
        uint128_t carry = add;
        for (int i = 0; i < 3; ++i) {
            uint128_t v = uint128_t(w[i]) * mul + carry;
            w[i] = static_cast<uint64_t>(v);
            carry = v >> 64;
        }
    }

    bool greater_than(const U192& o) const {
        for (int i = 2; i >= 0; --i) {
            if (w[i] != o.w[i]) return w[i] > o.w[i];
        }
        return false;
    }

    U192 minus(const U192& o) const {
        U192 r;
        uint64_t borrow = 0;
        for (int i = 0; i < 3; ++i) {
            uint64_t t = o.w[i] + borrow;
            borrow = (w[i] < t || (borrow && t == 0)) ? 1 : 0;
            r.w[i] = w[i] - t;
        }
        return r;
    }

    U192 half() const {
        U192 r;
        r.w[2] = w[2] >> 1;
        r.w[1] = (w[1] >> 1) | (w[2] << 63);
        r.w[0] = (w[0] >> 1) | (w[1] << 63);
        return r;
    }

    double to_double() const {
        return static_cast<double>(w[0]) + std::ldexp(static_cast<double>(w[1]), 64) +
               std::ldexp(static_cast<double>(w[2]), 128);
    }
};

}  // namespace detail

// Canonical-embedding encoder: a real vector of up to N/2 slots maps to a
// real polynomial whose evaluations at the odd roots of unity indexed by
// powers of 5 reproduce the slots. Uses the standard O(N log N) butterfly
// specialization of the embedding rather than the naive N^2 evaluation.
class Encoder {
public:
    explicit Encoder(RingContextPtr ctx) : ctx_(std::move(ctx)) {
        const size_t n = ctx_->degree();
        const size_t m = 2 * n;
        rot_group_.resize(n / 2);
        uint64_t five = 1;
        for (size_t i = 0; i < n / 2; ++i) {
            rot_group_[i] = five;
            five = (five * 5) % m;
        }
        ksi_.resize(m + 1);
        for (size_t j = 0; j <= m; ++j) {
            const double angle = 2.0 * M_PI * static_cast<double>(j) / static_cast<double>(m);
            ksi_[j] = {std::cos(angle), std::sin(angle)};
        }
        // Garner constants: inv(q_s) mod q_t for s < t
        const size_t np = ctx_->chain_length();
        garner_inv_.resize(np);
        for (size_t t = 1; t < np; ++t) {
            garner_inv_[t].resize(t);
            for (size_t s = 0; s < t; ++s)
                garner_inv_[t][s] =
                    inv_mod(ctx_->modulus(s).value % ctx_->modulus(t).value, ctx_->modulus(t));
        }
    }

    const RingContextPtr& context() const { return ctx_; }

    // Encode at the given level; values beyond v.size() are zero slots.
    Plaintext encode(std::span<const double> v, double scale, size_t level) const {
        const size_t slots = ctx_->slots();
        if (v.size() > slots) throw validation_error("encode: vector exceeds slot capacity");
        if (level > ctx_->top_level()) throw validation_error("encode: level out of range");
        std::vector<std::complex<double>> u(slots, {0.0, 0.0});
        for (size_t i = 0; i < v.size(); ++i) u[i] = {v[i], 0.0};
        embedding_inverse(u);

        Plaintext pt;
        pt.scale = scale;
        pt.level = level;
        pt.poly = ctx_->make_poly(level + 1, false);
        const size_t half = slots;
        for (size_t i = 0; i < half; ++i) {
            set_coeff(pt.poly, i, u[i].real() * scale);
            set_coeff(pt.poly, i + half, u[i].imag() * scale);
        }
        return pt;
    }

    std::vector<double> decode(const Plaintext& pt) const {
        RingPoly poly = pt.poly;
        ctx_->to_coeff(poly);
        const size_t slots = ctx_->slots();
        std::vector<std::complex<double>> u(slots);
        for (size_t i = 0; i < slots; ++i)
            u[i] = {coeff_to_double(poly, i) / pt.scale,
                    coeff_to_double(poly, i + slots) / pt.scale};
        embedding_forward(u);
        std::vector<double> out(slots);
        for (size_t i = 0; i < slots; ++i) out[i] = u[i].real();
        return out;
    }

    // Slot values of a coefficient-form polynomial by direct evaluation at
    // the embedding roots. O(N^2); test oracle for the fast transform.
    std::vector<std::complex<double>> embed_naive(const RingPoly& poly, double scale) const {
        const size_t n = ctx_->degree();
        const size_t m = 2 * n;
        const size_t slots = n / 2;
        std::vector<std::complex<double>> out(slots);
        for (size_t j = 0; j < slots; ++j) {
            std::complex<double> acc{0.0, 0.0};
            for (size_t i = 0; i < n; ++i) {
                const double c = coeff_to_double(poly, i);
                acc += c * ksi_[(i * rot_group_[j]) % m];
            }
            out[j] = acc / scale;
        }
        return out;
    }

    // forward transform: coefficient pairs -> slot values
    void embedding_forward(std::vector<std::complex<double>>& vals) const {
        const size_t size = vals.size();
        const size_t m = 2 * ctx_->degree();
        bit_reverse_permute(vals);
        for (size_t len = 2; len <= size; len <<= 1) {
            const size_t lenh = len >> 1;
            const size_t lenq = len << 2;
            for (size_t i = 0; i < size; i += len) {
                for (size_t j = 0; j < lenh; ++j) {
                    const size_t idx = (rot_group_[j] % lenq) * (m / lenq);
                    std::complex<double> u = vals[i + j];
                    std::complex<double> w = vals[i + j + lenh] * ksi_[idx];
                    vals[i + j] = u + w;
                    vals[i + j + lenh] = u - w;
                }
            }
        }
    }

    // inverse transform: slot values -> coefficient pairs (scaled by 1/size)
    void embedding_inverse(std::vector<std::complex<double>>& vals) const {
        const size_t size = vals.size();
        const size_t m = 2 * ctx_->degree();
        for (size_t len = size; len >= 2; len >>= 1) {
            const size_t lenh = len >> 1;
            const size_t lenq = len << 2;
            for (size_t i = 0; i < size; i += len) {
                for (size_t j = 0; j < lenh; ++j) {
                    const size_t idx = (lenq - (rot_group_[j] % lenq)) * (m / lenq);
                    std::complex<double> u = vals[i + j] + vals[i + j + lenh];
                    std::complex<double> w = (vals[i + j] - vals[i + j + lenh]) * ksi_[idx];
                    vals[i + j] = u;
                    vals[i + j + lenh] = w;
                }
            }
        }
        bit_reverse_permute(vals);
        const double inv = 1.0 / static_cast<double>(size);
        for (auto& v : vals) v *= inv;
    }

private:
    static void bit_reverse_permute(std::vector<std::complex<double>>& vals) {
        const size_t n = vals.size();
        for (size_t i = 1, j = 0; i < n; ++i) {
            size_t bit = n >> 1;
            for (; j & bit; bit >>= 1) j ^= bit;
            j ^= bit;
            if (i < j) std::swap(vals[i], vals[j]);
        }
    }

    // Round a real value into RNS rows of the polynomial.
    void set_coeff(RingPoly& poly, size_t i, double value) const {
        if (!(std::fabs(value) < 9.0e18))
            throw validation_error("encode: scaled coefficient overflows 63 bits; lower the scale");
        const int64_t v = static_cast<int64_t>(std::llround(value));
        for (size_t t = 0; t < poly.n_primes; ++t)
            poly.row(t)[i] = from_signed(v, ctx_->modulus(t));
    }

    // Exact CRT composition of one coefficient, centered, as a double.
    double coeff_to_double(const RingPoly& poly, size_t i) const {
        const size_t np = poly.n_primes;
        if (np == 1) {
            return static_cast<double>(center(poly.row(0)[i], ctx_->modulus(0)));
        }
        // Garner mixed-radix digits: value = d0 + q0*(d1 + q1*(d2 ...))
        uint64_t digits[8];
        for (size_t t = 0; t < np; ++t) {
            uint64_t x = poly.row(t)[i];
            const Modulus& mt = ctx_->modulus(t);
            for (size_t s = 0; s < t; ++s) {
                x = sub_mod(x, digits[s] % mt.value, mt);
                x = mul_mod(x, garner_inv_[t][s], mt);
            }
            digits[t] = x;
        }
        detail::U192 value;
        detail::U192 q_total;
        q_total.w[0] = 1;
        for (size_t t = np; t-- > 0;) value.mul_add(ctx_->modulus(t).value, digits[t]);
        for (size_t t = 0; t < np; ++t) q_total.mul_add(ctx_->modulus(t).value, 0);
        const detail::U192 half = q_total.half();
        if (value.greater_than(half)) {
            return -q_total.minus(value).to_double();
        }
        return value.to_double();
    }

    RingContextPtr ctx_;
    std::vector<uint64_t> rot_group_;
    std::vector<std::complex<double>> ksi_;
    std::vector<std::vector<uint64_t>> garner_inv_;
};

}  // namespace hei::ckks
