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
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "hei/common.hpp"

namespace hei::model {

// Dense row-major matrix.
struct Matrix {
    size_t rows = 0, cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(size_t r, size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& at(size_t r, size_t c) { return data[r * cols + c]; }
    double at(size_t r, size_t c) const { return data[r * cols + c]; }
    std::span<const double> row(size_t r) const { return {data.data() + r * cols, cols}; }

    bool operator==(const Matrix&) const = default;
};

inline std::vector<double> matvec(const Matrix& m, std::span<const double> x) {
    if (x.size() != m.cols) throw validation_error("matvec: dimension mismatch");
    std::vector<double> y(m.rows, 0.0);
    for (size_t r = 0; r < m.rows; ++r) {
        double acc = 0.0;
        const double* row = m.data.data() + r * m.cols;
        for (size_t c = 0; c < m.cols; ++c) acc += row[c] * x[c];
        y[r] = acc;
    }
    return y;
}

// y = W x + b
struct LinearLayer {
    Matrix weights;            // h x d
    std::vector<double> bias;  // h

    size_t in_dim() const { return weights.cols; }
    size_t out_dim() const { return weights.rows; }

    void validate() const {
        if (bias.size() != weights.rows)
            throw validation_error("LinearLayer: bias length " + std::to_string(bias.size()) +
                                   " != output dim " + std::to_string(weights.rows));
        for (double v : weights.data)
            if (!std::isfinite(v)) throw validation_error("LinearLayer: non-finite weight");
        for (double v : bias)
            if (!std::isfinite(v)) throw validation_error("LinearLayer: non-finite bias");
    }

    std::vector<double> forward(std::span<const double> x) const {
        std::vector<double> y = matvec(weights, x);
        for (size_t r = 0; r < y.size(); ++r) y[r] += bias[r];
        return y;
    }

    bool operator==(const LinearLayer&) const = default;
};

// Batch-norm statistics: BN(z) = gamma * (z - mu) / sqrt(sigma2 + eps) + beta.
struct BatchNormParams {
    std::vector<double> gamma, beta, mu, sigma2;
    double epsilon = 1e-5;

    void validate(size_t h) const {
        if (gamma.size() != h || beta.size() != h || mu.size() != h || sigma2.size() != h)
            throw validation_error("BatchNormParams: vector lengths must equal layer output dim");
        for (double v : sigma2)
            if (!(v + epsilon > 0.0))
                throw std::domain_error("BatchNormParams: sigma^2 + epsilon must be positive");
    }

    std::vector<double> apply(std::span<const double> z) const {
        std::vector<double> out(z.size());
        for (size_t j = 0; j < z.size(); ++j)
            out[j] = gamma[j] * (z[j] - mu[j]) / std::sqrt(sigma2[j] + epsilon) + beta[j];
        return out;
    }
};

// Linear layer with batch norm absorbed: BN(Wx + b) == W' x + b' identically.
struct FoldedLinearLayer {
    Matrix weights;            // W'
    std::vector<double> bias;  // b'

    size_t in_dim() const { return weights.cols; }
    size_t out_dim() const { return weights.rows; }

    std::vector<double> forward(std::span<const double> x) const {
        std::vector<double> y = matvec(weights, x);
        for (size_t r = 0; r < y.size(); ++r) y[r] += bias[r];
        return y;
    }

    bool operator==(const FoldedLinearLayer&) const = default;
};

// Fold batch normalization into the preceding linear layer:
//   W'_j = (gamma_j / sqrt(sigma2_j + eps)) W_j
//   b'_j = (gamma_j / sqrt(sigma2_j + eps)) (b_j - mu_j) + beta_j
inline FoldedLinearLayer fold_bn(const LinearLayer& layer, const BatchNormParams& bn) {
    layer.validate();
    bn.validate(layer.out_dim());
    FoldedLinearLayer out;
    out.weights = Matrix(layer.weights.rows, layer.weights.cols);
    out.bias.resize(layer.bias.size());
    for (size_t j = 0; j < layer.out_dim(); ++j) {
        const double s = bn.gamma[j] / std::sqrt(bn.sigma2[j] + bn.epsilon);
        for (size_t c = 0; c < layer.in_dim(); ++c)
            out.weights.at(j, c) = s * layer.weights.at(j, c);
        out.bias[j] = s * (layer.bias[j] - bn.mu[j]) + bn.beta[j];
    }
    return out;
}

}  // namespace hei::model
