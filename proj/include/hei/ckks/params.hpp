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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "hei/common.hpp"

namespace hei::ckks {

// Leveled CKKS parameter set.
//
// coeff_mod_bits follows the usual convention: the last entry is the
// key-switching (special) prime and never carries ciphertext data, so a
// chain [60, 40, 40, 60] gives ciphertext primes [60, 40, 40] and supports
// two rescales. The global scale is 2^scale_log2.
struct CkksParams {
    uint32_t ring_dim = 0;             // N, power of two
    std::vector<int> coeff_mod_bits;   // prime bit lengths, special prime last
    int scale_log2 = 0;
    std::string security_claim;        // informational label only
    std::string name;                  // preset name, if any

    uint32_t slots() const { return ring_dim / 2; }

    // number of ciphertext primes; fresh ciphertexts start at level L-1
    size_t chain_length() const {
        return coeff_mod_bits.empty() ? 0 : coeff_mod_bits.size() - 1;
    }

    double scale() const { return std::ldexp(1.0, scale_log2); }

    void validate() const {
        bool n_ok = false;
        for (uint32_t n : {1024u, 2048u, 4096u, 8192u, 16384u})
            if (ring_dim == n) n_ok = true;
        if (!n_ok) throw validation_error("CkksParams: ring_dim must be a power of two in [1024, 16384]");
        if (coeff_mod_bits.size() < 2)
            throw validation_error("CkksParams: need at least one ciphertext prime plus the special prime");
        // key switching accumulates chain_length products per slot in 128
        // bits; 8 sixty-bit primes leave 2^5 of headroom
        if (coeff_mod_bits.size() > 8)
            throw validation_error("CkksParams: modulus chains beyond 8 primes are not supported");
        for (int b : coeff_mod_bits)
            if (b < 30 || b > 60) throw validation_error("CkksParams: prime bit lengths must be in [30, 60]");
        // rescale feasibility: the scale must not exceed any interior prime
        // by more than one bit
        int min_interior = 1000;
        for (size_t i = 1; i + 1 < coeff_mod_bits.size(); ++i)
            min_interior = std::min(min_interior, coeff_mod_bits[i]);
        if (min_interior != 1000 && scale_log2 > min_interior + 1)
            throw validation_error("CkksParams: scale_log2 exceeds interior prime bit length + 1");
        if (scale_log2 < 10) throw validation_error("CkksParams: scale_log2 too small");
    }

    static CkksParams preset(std::string_view name);
    static std::vector<std::string> preset_names() {
        return {"cifar10-paper", "cifar100-paper", "ci-small"};
    }
};

inline CkksParams CkksParams::preset(std::string_view name) {
    CkksParams p;
    p.name = std::string(name);
    if (name == "cifar10-paper") {
        p.ring_dim = 8192;
        p.coeff_mod_bits = {60, 40, 40, 60};
        p.scale_log2 = 40;
        p.security_claim = "128-bit (library-default claim, not independently validated)";
    } else if (name == "cifar100-paper") {
        p.ring_dim = 16384;
        p.coeff_mod_bits = {60, 40, 60};
        p.scale_log2 = 40;
        p.security_claim = "128-bit (library-default claim, not independently validated)";
    } else if (name == "ci-small") {
        p.ring_dim = 1024;
        p.coeff_mod_bits = {40, 30, 40};
        p.scale_log2 = 30;
        p.security_claim = "toy parameters for tests, no security claim";
    } else {
        std::string msg = "unknown preset '" + std::string(name) + "'; available:";
        for (const auto& n : preset_names()) msg += " " + n;
        throw validation_error(msg);
    }
    p.validate();
    return p;
}

}  // namespace hei::ckks
