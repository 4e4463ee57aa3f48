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
#include <cstdint>
#include <random>

namespace hei::ckks {

// Deterministic sampler for key generation and encryption randomness.
// All distributions are hand-rolled on top of mt19937_64 so that a seed
// reproduces identical output on any platform (std:: distributions are
// implementation-defined). Research-grade: not a CSPRNG.
class Sampler {
public:
    explicit Sampler(uint64_t seed) : engine_(seed) {}

    // Derive an independent stream, e.g. per encryption call or per thread.
    static Sampler derive(uint64_t seed, uint64_t stream) {
        // splitmix64 mixing of (seed, stream)
        uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return Sampler(z ^ (z >> 31));
    }

    uint64_t next_u64() { return engine_(); }

    // unbiased uniform in [0, bound)
    uint64_t uniform_below(uint64_t bound) {
        const uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        uint64_t v;
        do {
            v = engine_();
        } while (v >= limit);
        return v % bound;
    }

    double uniform_unit() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // uniform over {-1, 0, 1}
    int ternary() { return static_cast<int>(uniform_below(3)) - 1; }

    // centered discrete Gaussian: rounded Box-Muller, clamped at 6 sigma
    int gaussian(double sigma = 3.2) {
        if (!have_spare_) {
            double u1, u2;
            do {
                u1 = uniform_unit();
            } while (u1 <= 0.0);
            u2 = uniform_unit();
            const double r = std::sqrt(-2.0 * std::log(u1));
            spare_ = r * std::sin(6.283185307179586 * u2);
            have_spare_ = true;
            const double g = r * std::cos(6.283185307179586 * u2) * sigma;
            return clamp_round(g, sigma);
        }
        have_spare_ = false;
        return clamp_round(spare_ * sigma, sigma);
    }

private:
    static int clamp_round(double g, double sigma) {
        const double bound = 6.0 * sigma;
        if (g > bound) g = bound;
        if (g < -bound) g = -bound;
        return static_cast<int>(std::lround(g));
    }

    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace hei::ckks
