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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

#include "hei/model/bundle.hpp"
#include "hei/model/fixture.hpp"

#ifndef HEI_BIN
#error "HEI_BIN must point at the CLI binary"
#endif

namespace {

namespace fs = std::filesystem;

struct RunResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

fs::path work_dir() {
    static fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / "hei_cli_tests";
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

RunResult run(const std::string& args) {
    const fs::path out = work_dir() / "stdout.txt";
    const fs::path err = work_dir() / "stderr.txt";
    const std::string cmd =
        std::string(HEI_BIN) + " " + args + " > " + out.string() + " 2> " + err.string();
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    auto slurp = [](const fs::path& p) {
        std::ifstream is(p, std::ios::binary);
        std::ostringstream ss;
        ss << is.rdbuf();
        return ss.str();
    };
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

nlohmann::json json_of(const std::string& text) { return nlohmann::json::parse(text); }

}  // namespace

TEST_CASE("params subcommand", "[cli]") {
    SECTION("the inference preset") {
        auto r = run("params --preset cifar10-paper");
        REQUIRE(r.exit_code == 0);
        auto j = json_of(r.out);
        CHECK(j["ring_dim"] == 8192);
        CHECK(j["coeff_mod_bits"] == nlohmann::json({60, 40, 40, 60}));
        CHECK(j["scale_log2"] == 40);
        CHECK(j["slots"] == 4096);
    }
    SECTION("the wide preset") {
        auto r = run("params --preset cifar100-paper");
        REQUIRE(r.exit_code == 0);
        auto j = json_of(r.out);
        CHECK(j["ring_dim"] == 16384);
        CHECK(j["coeff_mod_bits"] == nlohmann::json({60, 40, 60}));
    }
    SECTION("unknown presets fail usage with the available list") {
        auto r = run("params --preset bogus");
        CHECK(r.exit_code == 1);
        CHECK(r.err.find("cifar10-paper") != std::string::npos);
        CHECK(r.err.find("ci-small") != std::string::npos);
    }
}

TEST_CASE("fit subcommand", "[cli]") {
    const fs::path fit_file = work_dir() / "softplus_fit.json";
    SECTION("softplus degree 4 with the standard weights") {
        auto r = run("--seed 1 fit --activation softplus --degree 4 --domain -7 7 "
                     "--weights standard --output " + fit_file.string());
        REQUIRE(r.exit_code == 0);
        std::ifstream is(fit_file);
        nlohmann::json j;
        is >> j;
        CHECK(j["degree"] == 4);
        CHECK(j["e_max_unweighted"].get<double>() <= 0.08);
        CHECK(j["config"]["weights"] == "standard");
        REQUIRE(j["coeffs_ascending"].size() == 5);
        // Table-style row lands on stderr
        CHECK(r.err.find("softplus") != std::string::npos);
    }
    SECTION("relu lands in the reported band") {
        auto r = run("fit --activation relu --degree 4 --domain -7 7 --weights standard");
        REQUIRE(r.exit_code == 0);
        auto j = json_of(r.out);
        const double e = j["e_max_unweighted"].get<double>();
        CHECK(e >= 0.28);
        CHECK(e <= 0.38);
    }
    SECTION("a near-linear region fits to machine-level error") {
        auto r = run("fit --degree 1 --activation softplus --domain 0 0.001 --weights uniform "
                     "--grid 128");
        REQUIRE(r.exit_code == 0);
        auto j = json_of(r.out);
        CHECK(j["e_max_unweighted"].get<double>() < 1e-3);
    }
    SECTION("csv error curve output carries the config echo") {
        auto r = run("--format csv fit --activation softplus --degree 4");
        REQUIRE(r.exit_code == 0);
        CHECK(r.out.rfind("# config:", 0) == 0);
        CHECK(r.out.find("x,f_x,p_x,abs_error\n") != std::string::npos);
    }
    SECTION("an invalid weight spec is a usage error") {
        auto r = run("fit --activation softplus --weights 1:2");
        CHECK(r.exit_code == 1);
    }
    SECTION("identical seeds reproduce the output bitwise") {
        auto r1 = run("--seed 9 fit --activation swish --degree 3 --grid 501");
        auto r2 = run("--seed 9 fit --activation swish --degree 3 --grid 501");
        CHECK(r1.out == r2.out);
    }
}

TEST_CASE("verify subcommand", "[cli]") {
    const fs::path fit4 = work_dir() / "verify_fit4.json";
    const fs::path fit2 = work_dir() / "verify_fit2.json";
    REQUIRE(run("fit --activation softplus --degree 4 --output " + fit4.string()).exit_code == 0);
    REQUIRE(run("fit --activation softplus --degree 2 --output " + fit2.string()).exit_code == 0);

    auto r4 = run("verify --fit " + fit4.string());
    REQUIRE(r4.exit_code == 0);
    auto j4 = json_of(r4.out);
    CHECK(j4["alternation_count"].get<int>() >= 6);
    CHECK(j4["alternation_pass"] == true);
    // exact optimum of the stated weighted problem (see the acceptance
    // suite for the comparison against the published figure)
    CHECK(j4["e_max_weighted"].get<double>() == Approx(0.14219).margin(0.002));

    auto r2 = run("verify --fit " + fit2.string());
    REQUIRE(r2.exit_code == 0);
    auto j2 = json_of(r2.out);
    CHECK(j2["e_max_weighted"].get<double>() > j4["e_max_weighted"].get<double>());

    auto missing = run("verify --fit /nonexistent/fit.json");
    CHECK(missing.exit_code == 2);
}

TEST_CASE("fold subcommand", "[cli]") {
    const fs::path in = work_dir() / "unfolded.json";
    const fs::path out = work_dir() / "folded.json";

    // identity BN: gamma = sqrt(sigma2 + eps), beta = mu = 0
    auto [bundle, feats] = hei::model::synthesize_fixture(3, 8, 8, 3, 4);
    hei::model::UnfoldedModel raw;
    raw.fc1.weights = bundle.fc1.weights;
    raw.fc1.bias = bundle.fc1.bias;
    raw.bn.sigma2.assign(8, 2.0);
    raw.bn.epsilon = 1e-5;
    raw.bn.gamma.assign(8, std::sqrt(2.0 + 1e-5));
    raw.bn.beta.assign(8, 0.0);
    raw.bn.mu.assign(8, 0.0);
    raw.activation = bundle.activation;
    raw.fc2 = bundle.fc2;
    raw.dataset = "synthetic";
    raw.feature_dim = 8;
    raw.classes = 3;
    hei::model::save_unfolded_model(raw, in.string());

    auto r = run("fold --model " + in.string() + " --out " + out.string() + " --check 25");
    REQUIRE(r.exit_code == 0);
    auto j = json_of(r.out);
    CHECK(j["max_fold_discrepancy"].get<double>() < 1e-9);

    // identity BN leaves the weight payload byte-identical
    std::ifstream is_in(in), is_out(out);
    nlohmann::json jin, jout;
    is_in >> jin;
    is_out >> jout;
    CHECK(jin["fc1"]["weights"]["data_b64"] == jout["fc1"]["weights"]["data_b64"]);
    CHECK(jin["fc1"]["bias_b64"] == jout["fc1"]["bias_b64"]);

    // the folded artifact passes model validation on reload
    CHECK_NOTHROW(hei::model::load_model(out.string()));
}

TEST_CASE("synth and infer subcommands", "[cli]") {
    const fs::path model = work_dir() / "model.json";
    const fs::path feats = work_dir() / "features.csv";
    REQUIRE(run("--seed 42 synth --out-model " + model.string() + " --out-features " +
                feats.string() + " --dim 64 --hidden 64 --classes 10 --samples 50")
                .exit_code == 0);

    SECTION("encrypted inference tracks the plaintext oracle") {
        auto enc = run("--seed 42 infer --model " + model.string() + " --features " +
                       feats.string() + " --preset ci-small --limit 50");
        REQUIRE(enc.exit_code == 0);
        auto je = json_of(enc.out);

        auto oracle = run("--seed 42 infer --model " + model.string() + " --features " +
                          feats.string() + " --preset ci-small --plaintext-oracle --limit 50");
        REQUIRE(oracle.exit_code == 0);
        auto jo = json_of(oracle.out);
        CHECK(std::fabs(je["accuracy"].get<double>() - jo["accuracy"].get<double>()) <= 0.005);
        CHECK(je["config"]["preset"] == "ci-small");
    }
    SECTION("csv report") {
        auto r = run("--format csv infer --model " + model.string() + " --features " +
                     feats.string() + " --preset ci-small --limit 3");
        REQUIRE(r.exit_code == 0);
        CHECK(r.out.rfind("# config:", 0) == 0);
        CHECK(r.out.find("index,label,predicted,") != std::string::npos);
    }
    SECTION("a feature-dimension mismatch is a validation failure") {
        const fs::path other = work_dir() / "other_features.csv";
        REQUIRE(run("synth --out-model " + (work_dir() / "m2.json").string() +
                    " --out-features " + other.string() + " --dim 16 --hidden 16 --samples 5")
                    .exit_code == 0);
        auto r = run("infer --model " + model.string() + " --features " + other.string() +
                     " --preset ci-small");
        CHECK(r.exit_code == 2);
        CHECK(r.err.find("dim") != std::string::npos);
    }
}

TEST_CASE("bench subcommand", "[cli]") {
    auto r = run("--format csv bench --preset ci-small --samples 3 --dim 64 --hidden 64");
    REQUIRE(r.exit_code == 0);
    std::istringstream is(r.out);
    std::string line;
    std::getline(is, line);
    CHECK(line.rfind("# config:", 0) == 0);
    std::getline(is, line);
    CHECK(line == "stage,time_s,share_pct");
    std::vector<std::string> stages;
    double share_sum = 0.0;
    while (std::getline(is, line)) {
        const auto c1 = line.find(',');
        const auto c2 = line.rfind(',');
        stages.push_back(line.substr(0, c1));
        if (line.rfind("total", 0) != 0) share_sum += std::stod(line.substr(c2 + 1));
    }
    REQUIRE(stages == std::vector<std::string>{"client encode & encrypt",
                                               "fully connected (FC) layers",
                                               "polynomial activation", "decryption",
                                               "total per sample"});
    CHECK(share_sum == Approx(100.0).margin(1.0));
}
