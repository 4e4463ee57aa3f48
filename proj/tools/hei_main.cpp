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

// hei: fit HE-friendly polynomial activations, verify their optimality,
// fold batch norm, and run hybrid encrypted inference end to end.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "hei/approx/fit.hpp"
#include "hei/ckks/params.hpp"
#include "hei/common.hpp"
#include "hei/infer/engine.hpp"
#include "hei/model/bundle.hpp"
#include "hei/model/features.hpp"
#include "hei/model/fixture.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitValidation = 2;
constexpr int kExitPrecision = 3;
constexpr int kExitInternal = 4;

struct GlobalOpts {
    uint64_t seed = 0;
    std::string output;
    std::string format = "json";
    size_t threads = std::max(1u, std::thread::hardware_concurrency());
};

void emit_text(const GlobalOpts& g, const std::string& text) {
    if (g.output.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream os(g.output, std::ios::binary);
    if (!os) throw hei::validation_error("cannot open output file " + g.output);
    os << text;
}

void emit_json(const GlobalOpts& g, const nlohmann::json& j) { emit_text(g, j.dump(2) + "\n"); }

// ---- fit ------------------------------------------------------------------

int cmd_fit(const GlobalOpts& g, const std::string& activation, int degree,
            std::vector<double> domain, const std::string& weights, int grid_n) {
    using namespace hei::approx;
    const Activation kind = activation_from_string(activation);
    const WeightScheme scheme = WeightScheme::parse(weights);
    const double lo = domain[0], hi = domain[1];

    PolyApprox fit = fit_activation(kind, lo, hi, scheme, degree, grid_n);
    const SampleGrid grid = build_grid(lo, hi, scheme, grid_n);

    nlohmann::json out = poly_to_json(fit, activation);
    out["config"] = {{"activation", activation}, {"degree", degree},   {"domain", {lo, hi}},
                     {"weights", weights},       {"grid", grid_n},     {"seed", g.seed}};
    std::cerr << activation << "  degree " << degree << "  [" << lo << ", " << hi
              << "]  e_max " << fit.e_max_unweighted << "\n";
    if (g.format == "csv") {
        std::ostringstream os;
        os << "# config: " << out["config"].dump() << "\n";
        write_error_curve_csv(os, fit.coeffs, kind, lo, hi, 2001);
        emit_text(g, os.str());
    } else {
        emit_json(g, out);
    }
    return kExitOk;
}

// ---- verify ---------------------------------------------------------------

int cmd_verify(const GlobalOpts& g, const std::string& fit_path) {
    using namespace hei::approx;
    std::ifstream is(fit_path);
    if (!is) throw hei::validation_error("cannot open fit file " + fit_path);
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw hei::parse_error(std::string("fit json: ") + e.what());
    }
    NamedPoly np = poly_from_json(j);
    const auto& cfg = j.at("config");
    const std::string weights = cfg.value("weights", "standard");
    const int grid_n = cfg.value("grid", kDefaultFitGridPoints);

    const Activation kind = activation_from_string(np.activation);
    const WeightScheme scheme = WeightScheme::parse(weights);
    const SampleGrid grid = build_grid(np.poly.domain_lo, np.poly.domain_hi, scheme, grid_n);
    MinimaxCertificate cert = lp_minimax_verify(grid, kind, np.poly.degree, &scheme);

    const int needed = np.poly.degree + 2;
    const bool alternation_pass = cert.alternation_count >= needed;
    nlohmann::json out = {
        {"activation", np.activation},
        {"degree", np.poly.degree},
        {"e_max_weighted", cert.e_max_weighted},
        {"alternation_count", cert.alternation_count},
        {"alternations_required", needed},
        {"alternation_pass", alternation_pass},
        {"lp_coeffs_ascending", cert.coeffs},
        {"fit_e_max_weighted", np.poly.e_max_weighted},
        {"config",
         {{"fit_file", fit_path}, {"weights", weights}, {"grid", grid_n}, {"seed", g.seed}}}};
    emit_json(g, out);
    std::cerr << "weighted minimax optimum " << cert.e_max_weighted << ", alternations "
              << cert.alternation_count << "/" << needed
              << (alternation_pass ? " (equiripple verified)" : " (NO equiripple)") << "\n";
    return kExitOk;
}

// ---- fold -----------------------------------------------------------------

int cmd_fold(const GlobalOpts& g, const std::string& in_path, const std::string& out_path,
             int check_n) {
    using namespace hei::model;
    UnfoldedModel raw = load_unfolded_model(in_path);
    ModelBundle folded = raw.fold();
    save_model(folded, out_path);

    nlohmann::json out = {{"model_in", in_path},
                          {"model_out", out_path},
                          {"hidden_dim", folded.hidden_dim()},
                          {"config", {{"check", check_n}, {"seed", g.seed}}}};
    if (check_n > 0) {
        // dual-path check: BN(Wx + b) must equal W'x + b'
        hei::model::detail::GaussianSource rng(g.seed ^ 0xf01dull);
        double worst = 0.0;
        for (int trial = 0; trial < check_n; ++trial) {
            std::vector<double> x(raw.fc1.in_dim());
            for (double& v : x) v = rng.normal();
            const auto direct = raw.bn.apply(raw.fc1.forward(x));
            const auto via_fold = folded.fc1.forward(x);
            for (size_t i = 0; i < direct.size(); ++i)
                worst = std::max(worst, std::fabs(direct[i] - via_fold[i]));
        }
        out["max_fold_discrepancy"] = worst;
        std::cerr << "fold check over " << check_n << " random inputs: max discrepancy " << worst
                  << "\n";
    }
    emit_json(g, out);
    return kExitOk;
}

// ---- infer ----------------------------------------------------------------

int cmd_infer(const GlobalOpts& g, const std::string& model_path, const std::string& features_path,
              const std::string& preset, bool plaintext_oracle, size_t limit, bool strict,
              const std::string& layout) {
    using namespace hei;
    model::ModelBundle bundle = model::load_model(model_path);
    model::FeatureSet features = model::load_features(features_path);

    infer::RunOptions opts;
    opts.seed = g.seed;
    opts.limit = limit;
    opts.strict = strict;
    opts.threads = g.threads;
    opts.plaintext_only = plaintext_oracle;
    opts.layout = layout == "per-neuron" ? infer::Fc1Layout::per_neuron : infer::Fc1Layout::packed;

    ckks::CkksParams params = ckks::CkksParams::preset(preset);
    infer::InferenceReport rep = infer::run_batch(features, bundle, params, opts);
    rep.config["model_file"] = model_path;
    rep.config["features_file"] = features_path;

    if (g.format == "csv") {
        std::ostringstream os;
        os << "# config: " << rep.config.dump() << "\n";
        infer::report_to_csv(os, rep);
        emit_text(g, os.str());
    } else {
        emit_json(g, infer::report_to_json(rep));
    }
    std::cerr << "accuracy " << rep.accuracy << " over " << rep.per_sample.size() << " samples"
              << (plaintext_oracle ? " (plaintext oracle)" : "") << "\n";
    return kExitOk;
}

// ---- bench ----------------------------------------------------------------

int cmd_bench(const GlobalOpts& g, const std::string& preset, size_t samples, size_t dim,
              size_t hidden, size_t classes) {
    using namespace hei;
    auto [bundle, features] = model::synthesize_fixture(g.seed == 0 ? 42 : g.seed, dim, hidden,
                                                        classes, samples);
    infer::RunOptions opts;
    opts.seed = g.seed;
    opts.threads = g.threads;
    ckks::CkksParams params = ckks::CkksParams::preset(preset);
    infer::InferenceReport rep = infer::run_batch(features, bundle, params, opts);

    double enc = 0, fc = 0, act = 0, dec = 0, tot = 0;
    for (const auto& r : rep.per_sample) {
        enc += r.latency.encode_encrypt_s;
        fc += r.latency.fc_s;
        act += r.latency.activation_s;
        dec += r.latency.decrypt_s;
        tot += r.latency.total_s;
    }
    const double n = static_cast<double>(rep.per_sample.size());
    enc /= n; fc /= n; act /= n; dec /= n; tot /= n;
    const double denom = tot > 0 ? tot : 1.0;

    if (g.format == "json") {
        nlohmann::json out = {
            {"stages",
             {{{"stage", "client encode & encrypt"}, {"time_s", enc}, {"share_pct", 100 * enc / denom}},
              {{"stage", "fully connected (FC) layers"}, {"time_s", fc}, {"share_pct", 100 * fc / denom}},
              {{"stage", "polynomial activation"}, {"time_s", act}, {"share_pct", 100 * act / denom}},
              {{"stage", "decryption"}, {"time_s", dec}, {"share_pct", 100 * dec / denom}},
              {{"stage", "total per sample"}, {"time_s", tot}, {"share_pct", 100.0}}}},
            {"config", rep.config}};
        emit_json(g, out);
    } else {
        std::ostringstream os;
        os << "# config: " << rep.config.dump() << "\n";
        os << "stage,time_s,share_pct\n";
        os << "client encode & encrypt," << enc << ',' << 100 * enc / denom << '\n';
        os << "fully connected (FC) layers," << fc << ',' << 100 * fc / denom << '\n';
        os << "polynomial activation," << act << ',' << 100 * act / denom << '\n';
        os << "decryption," << dec << ',' << 100 * dec / denom << '\n';
        os << "total per sample," << tot << ",100\n";
        emit_text(g, os.str());
    }
    std::cerr << "bench " << preset << ": " << tot << " s/sample over " << rep.per_sample.size()
              << " samples\n";
    return kExitOk;
}

// ---- params ---------------------------------------------------------------

int cmd_params(const GlobalOpts& g, const std::string& preset) {
    using namespace hei::ckks;
    CkksParams p = CkksParams::preset(preset);
    p.validate();
    nlohmann::json out = {{"preset", p.name},
                          {"ring_dim", p.ring_dim},
                          {"slots", p.slots()},
                          {"coeff_mod_bits", p.coeff_mod_bits},
                          {"scale_log2", p.scale_log2},
                          {"ciphertext_primes", p.chain_length()},
                          {"rescales_available", p.chain_length() - 1},
                          {"security", p.security_claim},
                          {"config", {{"preset", preset}}}};
    emit_json(g, out);
    return kExitOk;
}

// ---- synth ----------------------------------------------------------------

int cmd_synth(const GlobalOpts& g, const std::string& model_out, const std::string& features_out,
              size_t dim, size_t hidden, size_t classes, size_t samples) {
    auto [bundle, features] =
        hei::model::synthesize_fixture(g.seed == 0 ? 42 : g.seed, dim, hidden, classes, samples);
    hei::model::save_model(bundle, model_out);
    hei::model::save_features(features, features_out);
    nlohmann::json out = {{"model_out", model_out},
                          {"features_out", features_out},
                          {"config",
                           {{"seed", g.seed == 0 ? 42 : g.seed},
                            {"dim", dim},
                            {"hidden", hidden},
                            {"classes", classes},
                            {"samples", samples}}}};
    emit_json(g, out);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"HE-friendly activation fitting and hybrid encrypted inference"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOpts g;
    app.add_option("--seed", g.seed, "deterministic seed for all randomness");
    app.add_option("--output", g.output, "write the primary artifact to this path (default: stdout)");
    app.add_option("--format", g.format, "output format")
        ->check(CLI::IsMember({"json", "csv"}));
    app.add_option("--threads", g.threads, "worker threads for batch inference");

    const std::vector<std::string> preset_names = hei::ckks::CkksParams::preset_names();

    // fit
    auto* fit = app.add_subcommand("fit", "fit a polynomial activation replacement");
    std::string fit_activation = "softplus";
    int fit_degree = 4;
    std::vector<double> fit_domain = {-7.0, 7.0};
    std::string fit_weights = "standard";
    int fit_grid = hei::approx::kDefaultFitGridPoints;
    fit->add_option("--activation", fit_activation, "target activation")
        ->check(CLI::IsMember({"softplus", "relu", "swish"}));
    fit->add_option("--degree", fit_degree, "polynomial degree")->check(CLI::Range(1, 8));
    fit->add_option("--domain", fit_domain, "approximation interval LO HI")->expected(2);
    fit->add_option("--weights", fit_weights,
                    "weight scheme: standard, uniform, or lo:hi:w,... with optional default:w");
    fit->add_option("--grid", fit_grid, "fitting grid points")->check(CLI::Range(16, 1000000));

    // verify
    auto* verify = app.add_subcommand("verify", "LP global-optimality check of a fit");
    std::string verify_fit;
    verify->add_option("--fit", verify_fit, "fit JSON produced by the fit subcommand")->required();

    // fold
    auto* fold = app.add_subcommand("fold", "fold batch norm into the linear layer");
    std::string fold_in, fold_out;
    int fold_check = 0;
    fold->add_option("--model", fold_in, "unfolded model JSON")->required();
    fold->add_option("--out", fold_out, "folded model output path")->required();
    fold->add_option("--check", fold_check, "dual-path check over N random inputs");

    // infer
    auto* infer = app.add_subcommand("infer", "run encrypted inference over a feature set");
    std::string infer_model, infer_features, infer_preset = "ci-small", infer_layout = "packed";
    bool infer_oracle = false, infer_strict = true;
    size_t infer_limit = 0;
    infer->add_option("--model", infer_model, "folded model JSON")->required();
    infer->add_option("--features", infer_features, "feature CSV")->required();
    infer->add_option("--preset", infer_preset, "CKKS parameter preset")
        ->check(CLI::IsMember(preset_names));
    infer->add_flag("--plaintext-oracle", infer_oracle, "run the plaintext path only");
    infer->add_option("--limit", infer_limit, "process only the first T samples");
    infer->add_flag("--strict,!--no-strict", infer_strict,
                    "fail hard on any precision error (default on)");
    infer->add_option("--layout", infer_layout, "FC1 evaluation layout")
        ->check(CLI::IsMember({"packed", "per-neuron"}));

    // bench
    auto* bench = app.add_subcommand("bench", "per-stage latency breakdown on a synthetic model");
    std::string bench_preset = "ci-small";
    size_t bench_samples = 10, bench_dim = 512, bench_hidden = 512, bench_classes = 10;
    bench->add_option("--preset", bench_preset, "CKKS parameter preset")
        ->check(CLI::IsMember(preset_names));
    bench->add_option("--samples", bench_samples, "number of samples");
    bench->add_option("--dim", bench_dim, "feature dimension");
    bench->add_option("--hidden", bench_hidden, "hidden dimension");
    bench->add_option("--classes", bench_classes, "class count");

    // params
    auto* params = app.add_subcommand("params", "print and validate a parameter preset");
    std::string params_preset;
    params->add_option("--preset", params_preset, "CKKS parameter preset")
        ->required()
        ->check(CLI::IsMember(preset_names));

    // synth
    auto* synth = app.add_subcommand("synth", "write a synthetic model + feature fixture");
    std::string synth_model = "model.json", synth_features = "features.csv";
    size_t synth_dim = 512, synth_hidden = 512, synth_classes = 10, synth_samples = 1000;
    synth->add_option("--out-model", synth_model, "model output path");
    synth->add_option("--out-features", synth_features, "features output path");
    synth->add_option("--dim", synth_dim, "feature dimension");
    synth->add_option("--hidden", synth_hidden, "hidden dimension");
    synth->add_option("--classes", synth_classes, "class count");
    synth->add_option("--samples", synth_samples, "number of samples");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (fit->parsed())
            return cmd_fit(g, fit_activation, fit_degree, fit_domain, fit_weights, fit_grid);
        if (verify->parsed()) return cmd_verify(g, verify_fit);
        if (fold->parsed()) return cmd_fold(g, fold_in, fold_out, fold_check);
        if (infer->parsed())
            return cmd_infer(g, infer_model, infer_features, infer_preset, infer_oracle,
                             infer_limit, infer_strict, infer_layout);
        if (bench->parsed())
            return cmd_bench(g, bench_preset, bench_samples, bench_dim, bench_hidden,
                             bench_classes);
        if (params->parsed()) return cmd_params(g, params_preset);
        if (synth->parsed())
            return cmd_synth(g, synth_model, synth_features, synth_dim, synth_hidden,
                             synth_classes, synth_samples);
        std::cerr << "no subcommand\n";
        return kExitUsage;
    } catch (const hei::precision_error& e) {
        std::cerr << "precision error: " << e.what() << "\n";
        return kExitPrecision;
    } catch (const hei::depth_error& e) {
        std::cerr << "depth error: " << e.what() << "\n";
        return kExitPrecision;
    } catch (const hei::parse_error& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const hei::validation_error& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const hei::state_error& e) {
        std::cerr << "state error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid argument: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::domain_error& e) {
        std::cerr << "domain error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
}
