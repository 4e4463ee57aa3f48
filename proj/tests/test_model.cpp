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

#include <catch2/catch.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "hei/model/bundle.hpp"
#include "hei/model/features.hpp"
#include "hei/model/fixture.hpp"
#include "hei/model/layers.hpp"
#include "helpers.hpp"

using namespace hei::model;

namespace {

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("hei_test_" + name);
}

LinearLayer random_layer(std::mt19937_64& rng, size_t h, size_t d, double mag = 10.0) {
    std::uniform_real_distribution<double> dist(-mag, mag);
    LinearLayer l;
    l.weights = Matrix(h, d);
    for (double& v : l.weights.data) v = dist(rng);
    l.bias.resize(h);
    for (double& v : l.bias) v = dist(rng);
    return l;
}

BatchNormParams random_bn(std::mt19937_64& rng, size_t h) {
    std::uniform_real_distribution<double> dist(-5.0, 5.0);
    std::uniform_real_distribution<double> pos(0.01, 9.0);
    BatchNormParams bn;
    bn.gamma.resize(h);
    bn.beta.resize(h);
    bn.mu.resize(h);
    bn.sigma2.resize(h);
    for (size_t j = 0; j < h; ++j) {
        bn.gamma[j] = dist(rng);
        bn.beta[j] = dist(rng);
        bn.mu[j] = dist(rng);
        bn.sigma2[j] = pos(rng);
    }
    return bn;
}

}  // namespace

TEST_CASE("batch-norm folding", "[model]") {
    SECTION("unit scale factor returns the layer unchanged, exactly") {
        std::mt19937_64 rng(31);
        LinearLayer layer = random_layer(rng, 6, 4);
        BatchNormParams bn;
        bn.sigma2 = {0.5, 1.0, 2.0, 3.5, 0.01, 9.0};
        bn.epsilon = 1e-5;
        bn.gamma.resize(6);
        for (size_t j = 0; j < 6; ++j) bn.gamma[j] = std::sqrt(bn.sigma2[j] + bn.epsilon);
        bn.beta.assign(6, 0.0);
        bn.mu.assign(6, 0.0);
        FoldedLinearLayer folded = fold_bn(layer, bn);
        CHECK(folded.weights == layer.weights);
        CHECK(folded.bias == layer.bias);
    }
    SECTION("1x1 worked example") {
        LinearLayer layer;
        layer.weights = Matrix(1, 1);
        layer.weights.at(0, 0) = 1.0;
        layer.bias = {0.0};
        BatchNormParams bn;
        bn.gamma = {2.0};
        bn.sigma2 = {3.0};
        bn.epsilon = 1.0;
        bn.mu = {1.0};
        bn.beta = {0.5};
        FoldedLinearLayer folded = fold_bn(layer, bn);
        CHECK(folded.weights.at(0, 0) == Approx(1.0).margin(1e-15));
        CHECK(folded.bias[0] == Approx(-0.5).margin(1e-15));
    }
    SECTION("folding is exact algebra over random instances") {
        std::mt19937_64 rng(32);
        double worst = 0.0;
        for (int trial = 0; trial < 1000; ++trial) {
            const size_t h = 1 + rng() % 8, d = 1 + rng() % 8;
            LinearLayer layer = random_layer(rng, h, d);
            BatchNormParams bn = random_bn(rng, h);
            FoldedLinearLayer folded = fold_bn(layer, bn);
            auto x = testhelpers::random_vector(rng, d, -10.0, 10.0);
            const auto direct = bn.apply(layer.forward(x));
            const auto via_fold = folded.forward(x);
            worst = std::max(worst, testhelpers::max_abs_diff(direct, via_fold));
        }
        CHECK(worst < 1e-9);
    }
    SECTION("dimension and domain errors") {
        std::mt19937_64 rng(33);
        LinearLayer layer = random_layer(rng, 3, 2);
        BatchNormParams bn = random_bn(rng, 4);
        CHECK_THROWS_AS(fold_bn(layer, bn), hei::validation_error);
        BatchNormParams bad = random_bn(rng, 3);
        bad.sigma2[1] = -1.0;
        bad.epsilon = 0.5;
        CHECK_THROWS_AS(fold_bn(layer, bad), std::domain_error);
    }
}

TEST_CASE("model bundle serialization", "[model]") {
    auto [bundle, features] = synthesize_fixture(5, 16, 16, 4, 10);
    const auto path = temp_file("bundle.json");

    SECTION("round trip is bitwise for all numeric fields") {
        // plant awkward values: a subnormal weight and a negative zero
        bundle.fc1.weights.at(0, 0) = 5e-324;
        bundle.fc1.weights.at(0, 1) = -0.0;
        bundle.fc2.bias[0] = 1.0 / 3.0;
        save_model(bundle, path.string());
        ModelBundle back = load_model(path.string());
        CHECK(back == bundle);
    }
    SECTION("shape violations are rejected with both dimensions named") {
        ModelBundle bad = bundle;
        bad.fc2.weights = Matrix(4, 12);  // fc1 out is 16
        bad.fc2.bias.assign(4, 0.0);
        try {
            bad.validate();
            FAIL("expected validation error");
        } catch (const hei::validation_error& e) {
            const std::string msg = e.what();
            CHECK(msg.find("16") != std::string::npos);
            CHECK(msg.find("12") != std::string::npos);
        }
    }
    SECTION("unknown schema version and missing fields") {
        save_model(bundle, path.string());
        std::ifstream is(path);
        nlohmann::json j;
        is >> j;
        nlohmann::json wrong_ver = j;
        wrong_ver["schema_version"] = 9;
        CHECK_THROWS_AS(bundle_from_json(wrong_ver), hei::parse_error);
        nlohmann::json missing = j;
        missing["fc1"].erase("bias_b64");
        CHECK_THROWS_AS(bundle_from_json(missing), hei::parse_error);
    }
    SECTION("a full-size bundle loads and validates") {
        auto [big, fs] = synthesize_fixture(42, 512, 512, 10, 1);
        const auto p = temp_file("bundle_big.json");
        save_model(big, p.string());
        ModelBundle back = load_model(p.string());
        CHECK(back.feature_dim == 512);
        CHECK(back.hidden_dim() == 512);
        CHECK(back.classes == 10);
        std::filesystem::remove(p);
    }
    std::filesystem::remove(path);
}

TEST_CASE("unfolded model and folding round trip", "[model]") {
    std::mt19937_64 rng(34);
    UnfoldedModel raw;
    raw.fc1 = random_layer(rng, 8, 6, 1.0);
    raw.bn = random_bn(rng, 8);
    raw.activation = hei::approx::softplus_quartic_reference();
    raw.fc2 = random_layer(rng, 3, 8, 1.0);
    raw.dataset = "synthetic";
    raw.feature_dim = 6;
    raw.classes = 3;

    const auto path = temp_file("unfolded.json");
    save_unfolded_model(raw, path.string());
    UnfoldedModel back = load_unfolded_model(path.string());
    CHECK(back.fc1 == raw.fc1);
    CHECK(back.bn.gamma == raw.bn.gamma);

    ModelBundle folded = back.fold();
    auto x = testhelpers::random_vector(rng, 6, -3.0, 3.0);
    CHECK(testhelpers::max_abs_diff(raw.bn.apply(raw.fc1.forward(x)), folded.fc1.forward(x)) <
          1e-12);
    std::filesystem::remove(path);
}

TEST_CASE("feature CSV loading", "[model]") {
    const auto path = temp_file("features.csv");

    SECTION("well-formed file") {
        std::ofstream os(path);
        os << "label,f0,f1,f2\n";
        os << "0,1.5,-2.25,0.125\n";
        os << "2,0,0,1e-3\n";
        os << "1,3,4,5\n";
        os.close();
        FeatureSet fs = load_features(path.string());
        REQUIRE(fs.size() == 3);
        CHECK(fs.dim() == 3);
        CHECK(fs.labels == std::vector<int>{0, 2, 1});
        CHECK(fs.features[0][1] == -2.25);
        fs.validate(3);
        CHECK_THROWS_AS(fs.validate(2), hei::validation_error);  // label 2 out of range
    }
    SECTION("ragged rows name the offending row") {
        std::ofstream os(path);
        os << "label,f0,f1\n0,1,2\n1,3\n";
        os.close();
        try {
            load_features(path.string());
            FAIL("expected parse error");
        } catch (const hei::parse_error& e) {
            CHECK(std::string(e.what()).find("row 3") != std::string::npos);
        }
    }
    SECTION("non-numeric cells name the offending row") {
        std::ofstream os(path);
        os << "label,f0\n0,1.5\nx,2\n";
        os.close();
        try {
            load_features(path.string());
            FAIL("expected parse error");
        } catch (const hei::parse_error& e) {
            CHECK(std::string(e.what()).find("row 3") != std::string::npos);
        }
    }
    SECTION("missing header is rejected") {
        std::ofstream os(path);
        os << "0,1,2\n";
        os.close();
        CHECK_THROWS_AS(load_features(path.string()), hei::parse_error);
    }
    SECTION("save/load round trip and bulk load time") {
        FeatureSet fs;
        std::mt19937_64 rng(35);
        for (int i = 0; i < 10000; ++i) {
            fs.features.push_back(testhelpers::random_vector(rng, 64, -5.0, 5.0));
            fs.labels.push_back(static_cast<int>(rng() % 10));
        }
        save_features(fs, path.string());
        const auto t0 = std::chrono::steady_clock::now();
        FeatureSet back = load_features(path.string());
        const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        CHECK(back.size() == 10000);
        CHECK(back.labels == fs.labels);
        CHECK(testhelpers::max_abs_diff(back.features[9999], fs.features[9999]) == 0.0);
        CHECK(dt < 2.0);
    }
    std::filesystem::remove(path);
}

TEST_CASE("synthetic fixture", "[model]") {
    SECTION("deterministic in the seed") {
        auto [b1, f1] = synthesize_fixture(7, 32, 32, 5, 50);
        auto [b2, f2] = synthesize_fixture(7, 32, 32, 5, 50);
        CHECK(b1 == b2);
        CHECK(f1.labels == f2.labels);
        CHECK(f1.features == f2.features);
        auto [b3, f3] = synthesize_fixture(8, 32, 32, 5, 50);
        CHECK_FALSE(f1.labels == f3.labels);
    }
    SECTION("pre-activations concentrate in [-3, 3]") {
        auto [bundle, fs] = synthesize_fixture(42, 128, 128, 10, 200);
        size_t inside = 0, total = 0;
        for (const auto& x : fs.features) {
            for (double z : bundle.fc1.forward(x)) {
                ++total;
                if (std::fabs(z) <= 3.0) ++inside;
            }
        }
        const double frac = static_cast<double>(inside) / static_cast<double>(total);
        CHECK(frac >= 0.95);
        CHECK(frac <= 1.0);
    }
    SECTION("labels are oracle predictions with 5% flips") {
        auto [bundle, fs] = synthesize_fixture(42, 64, 64, 10, 1000);
        size_t agree = 0;
        std::vector<bool> seen(10, false);
        for (size_t i = 0; i < fs.size(); ++i) {
            const int pred = hei::model::detail::fixture_predict(bundle, fs.features[i]);
            seen[static_cast<size_t>(pred)] = true;
            if (pred == fs.labels[i]) ++agree;
        }
        const double acc = static_cast<double>(agree) / static_cast<double>(fs.size());
        CHECK(acc > 0.1);   // strictly better than chance
        CHECK(acc < 1.0);   // flips guarantee imperfection
        CHECK(acc == Approx(0.95).margin(0.03));
        for (bool s : seen) CHECK(s);
    }
}
