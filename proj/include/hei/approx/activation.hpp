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
#include <stdexcept>
#include <string>
#include <string_view>

namespace hei::approx {

enum class Activation { softplus, relu, swish };

inline std::string to_string(Activation kind) {
    switch (kind) {
        case Activation::softplus: return "softplus";
        case Activation::relu: return "relu";
        case Activation::swish: return "swish";
    }
    return "unknown";
}

inline Activation activation_from_string(std::string_view name) {
    if (name == "softplus") return Activation::softplus;
    if (name == "relu") return Activation::relu;
    if (name == "swish") return Activation::swish;
    throw std::invalid_argument("unknown activation: " + std::string(name));
}

// log(1 + e^x) without overflow: for x > 0 rewrite as x + log(1 + e^-x).
inline double softplus(double x) {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline double relu(double x) { return x > 0.0 ? x : 0.0; }

// x * sigmoid(x), beta = 1.
inline double swish(double x) { return x / (1.0 + std::exp(-x)); }

inline double eval_activation(Activation kind, double x) {
    if (!std::isfinite(x)) throw std::domain_error("eval_activation: non-finite input");
    switch (kind) {
        case Activation::softplus: return softplus(x);
        case Activation::relu: return relu(x);
        case Activation::swish: return swish(x);
    }
    throw std::domain_error("eval_activation: bad activation tag");
}

}  // namespace hei::approx
