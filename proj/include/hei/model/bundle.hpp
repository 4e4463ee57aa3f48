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
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "hei/approx/fit.hpp"
#include "hei/approx/poly.hpp"
#include "hei/common.hpp"
#include "hei/model/layers.hpp"

namespace hei::model {

namespace detail {

inline constexpr char kB64Chars[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

inline std::string base64_encode(const unsigned char* data, size_t len) {
    std::string out;
    out.reserve((len + 2) / 3 * 4);
    for (size_t i = 0; i < len; i += 3) {
        uint32_t v = data[i] << 16;
        if (i + 1 < len) v |= data[i + 1] << 8;
        if (i + 2 < len) v |= data[i + 2];
        out.push_back(kB64Chars[(v >> 18) & 63]);
        out.push_back(kB64Chars[(v >> 12) & 63]);
        out.push_back(i + 1 < len ? kB64Chars[(v >> 6) & 63] : '=');
        out.push_back(i + 2 < len ? kB64Chars[v & 63] : '=');
    }
    return out;
}

inline std::vector<unsigned char> base64_decode(const std::string& in) {
    auto val = [](char c) -> int {
        if (c >= 'A' && c <= 'Z') return c - 'A';
        if (c >= 'a' && c <= 'z') return c - 'a' + 26;
        if (c >= '0' && c <= '9') return c - '0' + 52;
        if (c == '+') return 62;
        if (c == '/') return 63;
        return -1;
    };
    if (in.size() % 4 != 0) throw parse_error("base64: length not a multiple of 4");
    std::vector<unsigned char> out;
    out.reserve(in.size() / 4 * 3);
    for (size_t i = 0; i < in.size(); i += 4) {
        int pad = 0;
        uint32_t v = 0;
        for (int k = 0; k < 4; ++k) {
            char c = in[i + k];
            if (c == '=') {
                ++pad;
                v <<= 6;
            } else {
                int d = val(c);
                if (d < 0 || pad > 0) throw parse_error("base64: invalid character");
                v = (v << 6) | static_cast<uint32_t>(d);
            }
        }
        out.push_back(static_cast<unsigned char>(v >> 16));
        if (pad < 2) out.push_back(static_cast<unsigned char>(v >> 8));
        if (pad < 1) out.push_back(static_cast<unsigned char>(v));
    }
    return out;
}

// doubles as base64 of their little-endian byte representation: lossless
// for every finite value including subnormals
inline std::string doubles_to_b64(const std::vector<double>& v) {
    std::vector<unsigned char> bytes(v.size() * 8);
    for (size_t i = 0; i < v.size(); ++i) {
        uint64_t bits;
        std::memcpy(&bits, &v[i], 8);
        for (int k = 0; k < 8; ++k) bytes[i * 8 + k] = static_cast<unsigned char>(bits >> (8 * k));
    }
    return base64_encode(bytes.data(), bytes.size());
}

inline std::vector<double> b64_to_doubles(const std::string& s, const std::string& field) {
    std::vector<unsigned char> bytes = base64_decode(s);
    if (bytes.size() % 8 != 0) throw parse_error(field + ": byte length not a multiple of 8");
    std::vector<double> v(bytes.size() / 8);
    for (size_t i = 0; i < v.size(); ++i) {
        uint64_t bits = 0;
        for (int k = 0; k < 8; ++k) bits |= static_cast<uint64_t>(bytes[i * 8 + k]) << (8 * k);
        std::memcpy(&v[i], &bits, 8);
    }
    return v;
}

}  // namespace detail

// The complete inference artifact: folded FC1, activation polynomial, FC2.
struct ModelBundle {
    FoldedLinearLayer fc1;      // d -> h
    approx::PolyApprox activation;
    LinearLayer fc2;            // h -> classes
    std::string dataset;
    size_t feature_dim = 0;
    size_t classes = 0;

    size_t hidden_dim() const { return fc1.out_dim(); }

    void validate() const {
        activation.validate();
        fc2.validate();
        if (fc1.bias.size() != fc1.weights.rows)
            throw validation_error("ModelBundle: fc1 bias length != fc1 rows");
        if (fc1.out_dim() != fc2.in_dim())
            throw validation_error("ModelBundle: fc1 output dim " + std::to_string(fc1.out_dim()) +
                                   " != fc2 input dim " + std::to_string(fc2.in_dim()));
        if (feature_dim != fc1.in_dim())
            throw validation_error("ModelBundle: feature_dim " + std::to_string(feature_dim) +
                                   " != fc1 input dim " + std::to_string(fc1.in_dim()));
        if (classes != fc2.out_dim())
            throw validation_error("ModelBundle: classes " + std::to_string(classes) +
                                   " != fc2 output dim " + std::to_string(fc2.out_dim()));
        for (double v : fc1.weights.data)
            if (!std::isfinite(v)) throw validation_error("ModelBundle: non-finite fc1 weight");
    }

    bool operator==(const ModelBundle&) const = default;
};

inline nlohmann::json matrix_to_json(const Matrix& m) {
    return nlohmann::json{
        {"rows", m.rows}, {"cols", m.cols}, {"data_b64", detail::doubles_to_b64(m.data)}};
}

inline Matrix matrix_from_json(const nlohmann::json& j, const std::string& field) {
    Matrix m;
    m.rows = j.at("rows").get<size_t>();
    m.cols = j.at("cols").get<size_t>();
    m.data = detail::b64_to_doubles(j.at("data_b64").get<std::string>(), field);
    if (m.data.size() != m.rows * m.cols)
        throw parse_error(field + ": data length != rows * cols");
    return m;
}

inline nlohmann::json bundle_to_json(const ModelBundle& b) {
    return nlohmann::json{
        {"schema_version", 1},
        {"metadata",
         {{"dataset", b.dataset}, {"feature_dim", b.feature_dim}, {"classes", b.classes}}},
        {"fc1",
         {{"weights", matrix_to_json(b.fc1.weights)},
          {"bias_b64", detail::doubles_to_b64(b.fc1.bias)}}},
        {"activation", approx::poly_to_json(b.activation, "softplus")},
        {"fc2",
         {{"weights", matrix_to_json(b.fc2.weights)},
          {"bias_b64", detail::doubles_to_b64(b.fc2.bias)}}}};
}

inline ModelBundle bundle_from_json(const nlohmann::json& j) {
    ModelBundle b;
    try {
        const int ver = j.at("schema_version").get<int>();
        if (ver != 1)
            throw parse_error("schema_version: unsupported version " + std::to_string(ver));
        const auto& meta = j.at("metadata");
        b.dataset = meta.at("dataset").get<std::string>();
        b.feature_dim = meta.at("feature_dim").get<size_t>();
        b.classes = meta.at("classes").get<size_t>();
        b.fc1.weights = matrix_from_json(j.at("fc1").at("weights"), "fc1.weights");
        b.fc1.bias = detail::b64_to_doubles(j.at("fc1").at("bias_b64").get<std::string>(), "fc1.bias");
        b.activation = approx::poly_from_json(j.at("activation")).poly;
        b.fc2.weights = matrix_from_json(j.at("fc2").at("weights"), "fc2.weights");
        b.fc2.bias = detail::b64_to_doubles(j.at("fc2").at("bias_b64").get<std::string>(), "fc2.bias");
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(std::string("model json: ") + e.what());
    }
    b.validate();
    return b;
}

// Trained model before batch-norm folding: FC1 with explicit BN statistics.
struct UnfoldedModel {
    LinearLayer fc1;
    BatchNormParams bn;
    approx::PolyApprox activation;
    LinearLayer fc2;
    std::string dataset;
    size_t feature_dim = 0;
    size_t classes = 0;

    ModelBundle fold() const {
        ModelBundle b;
        b.fc1 = fold_bn(fc1, bn);
        b.activation = activation;
        b.fc2 = fc2;
        b.dataset = dataset;
        b.feature_dim = feature_dim;
        b.classes = classes;
        b.validate();
        return b;
    }
};

inline nlohmann::json unfolded_to_json(const UnfoldedModel& m) {
    return nlohmann::json{
        {"schema_version", 1},
        {"metadata",
         {{"dataset", m.dataset}, {"feature_dim", m.feature_dim}, {"classes", m.classes}}},
        {"fc1",
         {{"weights", matrix_to_json(m.fc1.weights)},
          {"bias_b64", detail::doubles_to_b64(m.fc1.bias)}}},
        {"bn",
         {{"gamma_b64", detail::doubles_to_b64(m.bn.gamma)},
          {"beta_b64", detail::doubles_to_b64(m.bn.beta)},
          {"mu_b64", detail::doubles_to_b64(m.bn.mu)},
          {"sigma2_b64", detail::doubles_to_b64(m.bn.sigma2)},
          {"epsilon", m.bn.epsilon}}},
        {"activation", approx::poly_to_json(m.activation, "softplus")},
        {"fc2",
         {{"weights", matrix_to_json(m.fc2.weights)},
          {"bias_b64", detail::doubles_to_b64(m.fc2.bias)}}}};
}

inline UnfoldedModel unfolded_from_json(const nlohmann::json& j) {
    UnfoldedModel m;
    try {
        const int ver = j.at("schema_version").get<int>();
        if (ver != 1)
            throw parse_error("schema_version: unsupported version " + std::to_string(ver));
        const auto& meta = j.at("metadata");
        m.dataset = meta.at("dataset").get<std::string>();
        m.feature_dim = meta.at("feature_dim").get<size_t>();
        m.classes = meta.at("classes").get<size_t>();
        m.fc1.weights = matrix_from_json(j.at("fc1").at("weights"), "fc1.weights");
        m.fc1.bias = detail::b64_to_doubles(j.at("fc1").at("bias_b64").get<std::string>(), "fc1.bias");
        const auto& bn = j.at("bn");
        m.bn.gamma = detail::b64_to_doubles(bn.at("gamma_b64").get<std::string>(), "bn.gamma");
        m.bn.beta = detail::b64_to_doubles(bn.at("beta_b64").get<std::string>(), "bn.beta");
        m.bn.mu = detail::b64_to_doubles(bn.at("mu_b64").get<std::string>(), "bn.mu");
        m.bn.sigma2 = detail::b64_to_doubles(bn.at("sigma2_b64").get<std::string>(), "bn.sigma2");
        m.bn.epsilon = bn.value("epsilon", 1e-5);
        m.activation = approx::poly_from_json(j.at("activation")).poly;
        m.fc2.weights = matrix_from_json(j.at("fc2").at("weights"), "fc2.weights");
        m.fc2.bias = detail::b64_to_doubles(j.at("fc2").at("bias_b64").get<std::string>(), "fc2.bias");
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(std::string("model json: ") + e.what());
    }
    m.fc1.validate();
    m.bn.validate(m.fc1.out_dim());
    return m;
}

inline void save_unfolded_model(const UnfoldedModel& m, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw validation_error("save_unfolded_model: cannot open " + path);
    os << unfolded_to_json(m).dump(2) << '\n';
}

inline UnfoldedModel load_unfolded_model(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw validation_error("load_unfolded_model: cannot open " + path);
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(std::string("model json: ") + e.what());
    }
    return unfolded_from_json(j);
}

inline void save_model(const ModelBundle& b, const std::string& path) {
    b.validate();
    std::ofstream os(path, std::ios::binary);
    if (!os) throw validation_error("save_model: cannot open " + path);
    os << bundle_to_json(b).dump(2) << '\n';
}

inline ModelBundle load_model(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw validation_error("load_model: cannot open " + path);
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(std::string("model json: ") + e.what());
    }
    return bundle_from_json(j);
}

}  // namespace hei::model
