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
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "hei/ckks/ciphertext.hpp"
#include "hei/ckks/keys.hpp"
#include "hei/ckks/params.hpp"
#include "hei/common.hpp"

// Binary wire format (see docs/serialization.md): little-endian
// length-prefixed u64 residue arrays under a versioned header. Format
// stability across versions is not guaranteed.

namespace hei::ckks {

namespace detail {

inline constexpr uint32_t kMagic = 0x48454931;  // "HEI1"
inline constexpr uint32_t kFormatVersion = 1;

enum class BlobKind : uint32_t {
    ciphertext = 1,
    public_key = 2,
    secret_key = 3,
    eval_keys = 4,
};

inline void put_u32(std::ostream& os, uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 4);
}

inline void put_u64(std::ostream& os, uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
}

inline void put_f64(std::ostream& os, double v) {
    uint64_t bits;
    static_assert(sizeof(bits) == sizeof(v));
    std::memcpy(&bits, &v, 8);
    put_u64(os, bits);
}

inline uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw parse_error("serialized blob truncated");
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
    return v;
}

inline uint64_t get_u64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    if (!is) throw parse_error("serialized blob truncated");
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
    return v;
}

inline double get_f64(std::istream& is) {
    uint64_t bits = get_u64(is);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

inline void put_header(std::ostream& os, BlobKind kind, const CkksParams& p) {
    put_u32(os, kMagic);
    put_u32(os, kFormatVersion);
    put_u32(os, static_cast<uint32_t>(kind));
    put_u32(os, p.ring_dim);
    put_u32(os, static_cast<uint32_t>(p.coeff_mod_bits.size()));
    for (int b : p.coeff_mod_bits) put_u32(os, static_cast<uint32_t>(b));
    put_u32(os, static_cast<uint32_t>(p.scale_log2));
}

inline void check_header(std::istream& is, BlobKind kind, const CkksParams& p) {
    if (get_u32(is) != kMagic) throw parse_error("bad magic: not a serialized blob");
    const uint32_t ver = get_u32(is);
    if (ver != kFormatVersion)
        throw parse_error("unsupported blob format version " + std::to_string(ver));
    if (get_u32(is) != static_cast<uint32_t>(kind)) throw parse_error("blob kind mismatch");
    if (get_u32(is) != p.ring_dim) throw parse_error("blob ring dimension mismatch");
    const uint32_t nbits = get_u32(is);
    if (nbits != p.coeff_mod_bits.size()) throw parse_error("blob modulus chain mismatch");
    for (size_t i = 0; i < nbits; ++i)
        if (get_u32(is) != static_cast<uint32_t>(p.coeff_mod_bits[i]))
            throw parse_error("blob modulus chain mismatch");
    if (get_u32(is) != static_cast<uint32_t>(p.scale_log2))
        throw parse_error("blob scale mismatch");
}

inline void put_poly(std::ostream& os, const RingPoly& poly) {
    put_u32(os, poly.ntt_form ? 1 : 0);
    put_u64(os, poly.n_primes);
    put_u64(os, poly.n);
    put_u64(os, poly.data.size());
    for (uint64_t v : poly.data) put_u64(os, v);
}

inline RingPoly get_poly(std::istream& is) {
    RingPoly poly;
    poly.ntt_form = get_u32(is) != 0;
    poly.n_primes = get_u64(is);
    poly.n = get_u64(is);
    const uint64_t len = get_u64(is);
    if (len != poly.n * poly.n_primes || len > (uint64_t(1) << 28))
        throw parse_error("serialized polynomial has inconsistent length");
    poly.data.resize(len);
    for (auto& v : poly.data) v = get_u64(is);
    return poly;
}

inline void put_kswitch(std::ostream& os, const KeySwitchKey& k) {
    put_u64(os, k.b_rows.size());
    for (size_t i = 0; i < k.b_rows.size(); ++i) {
        put_poly(os, k.b_rows[i]);
        put_poly(os, k.a_rows[i]);
    }
}

inline KeySwitchKey get_kswitch(std::istream& is) {
    KeySwitchKey k;
    const uint64_t rows = get_u64(is);
    if (rows > 64) throw parse_error("serialized key has too many rows");
    for (uint64_t i = 0; i < rows; ++i) {
        k.b_rows.push_back(get_poly(is));
        k.a_rows.push_back(get_poly(is));
    }
    return k;
}

}  // namespace detail

inline void save_ciphertext(std::ostream& os, const CkksParams& p, const Ciphertext& ct) {
    detail::put_header(os, detail::BlobKind::ciphertext, p);
    detail::put_f64(os, ct.scale);
    detail::put_u64(os, ct.level);
    detail::put_u64(os, ct.parts.size());
    for (const auto& part : ct.parts) detail::put_poly(os, part);
}

inline Ciphertext load_ciphertext(std::istream& is, const CkksParams& p) {
    detail::check_header(is, detail::BlobKind::ciphertext, p);
    Ciphertext ct;
    ct.scale = detail::get_f64(is);
    ct.level = detail::get_u64(is);
    const uint64_t n_parts = detail::get_u64(is);
    if (n_parts < 2 || n_parts > 3) throw parse_error("ciphertext must have 2 or 3 parts");
    for (uint64_t i = 0; i < n_parts; ++i) ct.parts.push_back(detail::get_poly(is));
    return ct;
}

inline void save_secret_key(std::ostream& os, const CkksParams& p, const SecretKey& sk) {
    detail::put_header(os, detail::BlobKind::secret_key, p);
    detail::put_poly(os, sk.s);
}

inline SecretKey load_secret_key(std::istream& is, const CkksParams& p) {
    detail::check_header(is, detail::BlobKind::secret_key, p);
    return SecretKey{detail::get_poly(is)};
}

inline void save_eval_keys(std::ostream& os, const CkksParams& p, const EvalKeys& keys) {
    detail::put_header(os, detail::BlobKind::eval_keys, p);
    detail::put_poly(os, keys.pk.b);
    detail::put_poly(os, keys.pk.a);
    detail::put_kswitch(os, keys.relin);
    detail::put_u64(os, keys.rot.size());
    for (const auto& [step, key] : keys.rot) {
        detail::put_u64(os, step);
        detail::put_kswitch(os, key);
    }
}

inline EvalKeys load_eval_keys(std::istream& is, const CkksParams& p) {
    detail::check_header(is, detail::BlobKind::eval_keys, p);
    EvalKeys keys;
    keys.pk.b = detail::get_poly(is);
    keys.pk.a = detail::get_poly(is);
    keys.relin = detail::get_kswitch(is);
    const uint64_t n_rot = detail::get_u64(is);
    if (n_rot > 4096) throw parse_error("too many rotation keys");
    for (uint64_t i = 0; i < n_rot; ++i) {
        const uint64_t step = detail::get_u64(is);
        keys.rot.emplace(step, detail::get_kswitch(is));
    }
    return keys;
}

}  // namespace hei::ckks
