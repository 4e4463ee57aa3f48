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
#include <random>
#include <vector>

#include "hei/approx/fit.hpp"
#include "hei/common.hpp"
#include "hei/model/bundle.hpp"
#include "hei/model/features.hpp"

namespace hei::model {

namespace detail {

class GaussianSource {
public:
    explicit GaussianSource(uint64_t seed) : engine_(seed) {}

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double normal() {
        if (have_) {
            have_ = false;
            return spare_;
        }
        double u1;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(6.283185307179586 * u2);
        have_ = true;
        return r * std::cos(6.283185307179586 * u2);
    }

    uint64_t integer(uint64_t bound) { return engine_() % bound; }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_ = false;
};

inline int fixture_predict(const ModelBundle& b, std::span<const double> x) {
    std::vector<double> z = b.fc1.forward(x);
    for (double& v : z) v = std::clamp(v, b.activation.domain_lo, b.activation.domain_hi);
    for (double& v : z) v = b.activation(v);
    std::vector<double> logits = b.fc2.forward(z);
    return static_cast<int>(std::max_element(logits.begin(), logits.end()) - logits.begin());
}

}  // namespace detail

// Deterministic synthetic model + feature set for end-to-end testing
// without a trained network. FC1 weights are scaled so pre-activations
// follow a standard normal (about 99.7% inside [-3, 3]); labels are the
// plaintext predictions with 5% flip noise, so a perfect pipeline scores
// about 95% and chance scores 1/classes.
inline std::pair<ModelBundle, FeatureSet> synthesize_fixture(uint64_t seed, size_t d, size_t h,
                                                             size_t classes, size_t T) {
    if (d == 0 || h == 0 || classes < 2)
        throw validation_error("synthesize_fixture: need d, h >= 1 and classes >= 2");
    detail::GaussianSource rng(seed ^ 0x5eedf1c5u);

    ModelBundle b;
    b.dataset = "synthetic";
    b.feature_dim = d;
    b.classes = classes;
    b.activation = approx::softplus_quartic_reference();

    b.fc1.weights = Matrix(h, d);
    const double w1_scale = 1.0 / std::sqrt(static_cast<double>(d));
    for (double& v : b.fc1.weights.data) v = w1_scale * rng.normal();
    b.fc1.bias.resize(h);
    for (double& v : b.fc1.bias) v = 0.1 * rng.normal();

    b.fc2.weights = Matrix(classes, h);
    const double w2_scale = 1.0 / std::sqrt(static_cast<double>(h));
    for (double& v : b.fc2.weights.data) v = w2_scale * rng.normal();
    // center each class row: activations share a large common component,
    // and a nonzero row sum would let one class dominate every prediction
    for (size_t k = 0; k < classes; ++k) {
        double mean = 0.0;
        for (size_t j = 0; j < h; ++j) mean += b.fc2.weights.at(k, j);
        mean /= static_cast<double>(h);
        for (size_t j = 0; j < h; ++j) b.fc2.weights.at(k, j) -= mean;
    }
    b.fc2.bias.resize(classes);
    for (double& v : b.fc2.bias) v = 0.05 * rng.normal();
    b.validate();

    // regenerate until every class shows up (almost always first try)
    FeatureSet fs;
    for (int attempt = 0; attempt < 100; ++attempt) {
        fs.features.clear();
        fs.labels.clear();
        std::vector<size_t> class_counts(classes, 0);
        for (size_t i = 0; i < T; ++i) {
            std::vector<double> x(d);
            for (double& v : x) v = rng.normal();
            const int predicted = detail::fixture_predict(b, x);
            ++class_counts[static_cast<size_t>(predicted)];
            int label = predicted;
            if (rng.uniform() < 0.05) {
                label = static_cast<int>(rng.integer(classes - 1));
                if (label >= predicted) ++label;
            }
            fs.features.push_back(std::move(x));
            fs.labels.push_back(label);
        }
        const bool degenerate =
            T >= 100 && std::any_of(class_counts.begin(), class_counts.end(),
                                    [](size_t c) { return c == 0; });
        if (!degenerate) return {std::move(b), std::move(fs)};
    }
    throw validation_error("synthesize_fixture: could not produce a nondegenerate fixture");
}

}  // namespace hei::model
