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

#include "hei/ckks/ring.hpp"

namespace hei::ckks {

// Encoded (unencrypted) message polynomial.
struct Plaintext {
    RingPoly poly;
    double scale = 0.0;
    size_t level = 0;  // active primes = level + 1
};

// CKKS ciphertext: 2 parts, or 3 transiently between multiplication and
// relinearization. Value type; operations never mutate their inputs.
struct Ciphertext {
    std::vector<RingPoly> parts;
    double scale = 0.0;
    size_t level = 0;

    size_t size() const { return parts.size(); }
};

}  // namespace hei::ckks
