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
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <mutex>
#include <set>
#include <span>
#include <thread>
#include <vector>

#include "hei/approx/poly.hpp"
#include "hei/ckks/evaluator.hpp"
#include "hei/ckks/keys.hpp"
#include "hei/ckks/serialize.hpp"
#include "hei/common.hpp"
#include "hei/infer/report.hpp"
#include "hei/model/bundle.hpp"
#include "hei/model/features.hpp"

namespace hei::infer {

// The secret-key side of the hybrid protocol: decrypts intermediate
// pre-activations, evaluates the polynomial in the clear, re-encrypts.
// Server-side code never receives this type.
struct ClientContext {
    ckks::RingContextPtr ctx;
    ckks::Decryptor decryptor;
    ckks::Encryptor encryptor;
    ckks::Encoder encoder;
    approx::PolyApprox activation;

    ClientContext(ckks::RingContextPtr context, ckks::SecretKey sk, ckks::PublicKey pk,
                  uint64_t seed, approx::PolyApprox act)
        : ctx(context),
          decryptor(context, std::move(sk)),
          encryptor(context, std::move(pk), seed),
          encoder(context),
          activation(std::move(act)) {}
};

// Evaluation-side state: parameters plus public key material only. The
// evaluator references the keys member, so the context is pinned in place.
struct ServerContext {
    ckks::RingContextPtr ctx;
    ckks::EvalKeys keys;
    ckks::Evaluator evaluator;

    ServerContext(ckks::RingContextPtr context, ckks::EvalKeys eval_keys)
        : ctx(context), keys(std::move(eval_keys)), evaluator(ctx, keys) {}
    ServerContext(const ServerContext&) = delete;
    ServerContext& operator=(const ServerContext&) = delete;
};

enum class Fc1Layout {
    per_neuron,  // one scalar-bearing ciphertext per output neuron
    packed,      // one ciphertext holding all h outputs (diagonal method)
};

// ---------------------------------------------------------------------------
// Server-side operations (public material only)
// ---------------------------------------------------------------------------

// Encrypted linear layer, one dot product per output neuron: the j-th
// result ciphertext carries <x, W_j> + b_j in slot 0. Consumes one level.
inline std::vector<ckks::Ciphertext> encrypted_fc(const ckks::Evaluator& ev,
                                                  const ckks::Ciphertext& ct_x,
                                                  const model::Matrix& weights,
                                                  std::span<const double> bias) {
    if (weights.rows != bias.size()) throw validation_error("encrypted_fc: bias/rows mismatch");
    if (weights.cols > ev.context()->slots())
        throw validation_error("encrypted_fc: input dim exceeds slot count");
    std::vector<ckks::Ciphertext> out;
    out.reserve(weights.rows);
    std::vector<double> b(ev.context()->slots());
    for (size_t j = 0; j < weights.rows; ++j) {
        ckks::Ciphertext dot = ev.dot_plain(ct_x, weights.row(j), weights.cols);
        std::fill(b.begin(), b.end(), bias[j]);
        out.push_back(ev.add_plain(dot, b));
    }
    return out;
}

inline std::vector<ckks::Ciphertext> encrypted_fc(const ckks::Evaluator& ev,
                                                  const ckks::Ciphertext& ct_x,
                                                  const model::FoldedLinearLayer& layer) {
    return encrypted_fc(ev, ct_x, layer.weights, layer.bias);
}

// Rotation steps the packed layout needs beyond the power-of-two defaults.
inline std::vector<uint64_t> packed_fc_rotation_steps(size_t n, size_t slots) {
    size_t bsgs = 1;
    while (bsgs * bsgs < n) bsgs <<= 1;
    std::set<uint64_t> steps;
    if (2 * n <= slots) steps.insert(slots - n);  // input duplication
    for (size_t b = 1; b < bsgs; ++b) steps.insert(b);
    for (size_t g = 1; g * bsgs < n; ++g) steps.insert(g * bsgs);
    return {steps.begin(), steps.end()};
}

// Precomputed plaintext operands for the packed matrix-vector kernel:
// the rotated diagonals and the bias, encoded once per model.
struct PackedFcPlan {
    size_t n = 0, bsgs = 0, giants = 0;
    bool duplicated = false;
    std::vector<ckks::Plaintext> diagonals;  // index k = g*bsgs + b
    ckks::Plaintext bias;                    // at the post-rescale scale/level
};

inline PackedFcPlan make_packed_fc_plan(const ckks::Evaluator& ev,
                                        const model::FoldedLinearLayer& layer) {
    const auto& ctx = *ev.context();
    const size_t n = layer.in_dim();
    const size_t slots = ctx.slots();
    if (layer.out_dim() != n)
        throw validation_error("encrypted_fc_packed: layer must be square (use encrypted_fc)");
    if (n != slots && 2 * n > slots)
        throw validation_error("encrypted_fc_packed: need n == slots or 2n <= slots");

    PackedFcPlan plan;
    plan.n = n;
    plan.duplicated = n != slots;
    plan.bsgs = 1;
    while (plan.bsgs * plan.bsgs < n) plan.bsgs <<= 1;
    plan.giants = (n + plan.bsgs - 1) / plan.bsgs;

    const double scale = ctx.params().scale();
    const size_t top = ctx.top_level();
    plan.diagonals.reserve(n);
    std::vector<double> diag(plan.duplicated ? slots : n, 0.0);
    for (size_t k = 0; k < n; ++k) {
        const size_t gb = (k / plan.bsgs) * plan.bsgs;
        // slot s carries diag_k at output row (s - gb) mod n; in the
        // duplicated regime only the giant-step window [gb, gb + n) is
        // populated so stale slots contribute nothing
        std::fill(diag.begin(), diag.end(), 0.0);
        const size_t base = plan.duplicated ? gb : 0;
        for (size_t off = 0; off < n; ++off) {
            const size_t s = base + off;
            const size_t r = (s + n - gb % n) % n;  // output row
            diag[s] = layer.weights.at(r, (r + k) % n);
        }
        plan.diagonals.push_back(ev.encoder().encode(diag, scale, top));
    }
    const double out_scale = scale * scale / static_cast<double>(ctx.modulus(top).value);
    plan.bias = ev.encoder().encode(layer.bias, out_scale, top - 1);
    return plan;
}

// Encrypted square matrix-vector product in one output ciphertext, via the
// baby-step/giant-step diagonal method. Needs n == slots (rotations are
// then exactly cyclic in the data) or 2n <= slots (the input is duplicated
// once and the diagonals are masked to their giant-step windows). Consumes
// one level, like the per-neuron path.
inline ckks::Ciphertext encrypted_fc_packed(const ckks::Evaluator& ev,
                                            const ckks::Ciphertext& ct_x,
                                            const PackedFcPlan& plan) {
    const size_t slots = ev.context()->slots();
    if (ct_x.level != ev.context()->top_level())
        throw state_error("encrypted_fc_packed: input must be a fresh top-level ciphertext");

    ckks::Ciphertext x = ct_x;
    if (plan.duplicated) x = ev.add(x, ev.rotate(x, slots - plan.n));

    std::vector<ckks::Ciphertext> baby;
    baby.reserve(plan.bsgs);
    baby.push_back(x);
    for (size_t b = 1; b < plan.bsgs; ++b) baby.push_back(ev.rotate(x, b));

    ckks::Ciphertext acc_total;
    bool have_total = false;
    for (size_t g = 0; g < plan.giants; ++g) {
        const size_t gb = g * plan.bsgs;
        ckks::Ciphertext acc_g;
        bool have_g = false;
        for (size_t b = 0; b < plan.bsgs; ++b) {
            const size_t k = gb + b;
            if (k >= plan.n) break;
            ckks::Ciphertext term = ev.mul_plain_raw(baby[b], plan.diagonals[k]);
            acc_g = have_g ? ev.add(acc_g, term) : term;
            have_g = true;
        }
        if (!have_g) continue;
        ckks::Ciphertext rotated = g == 0 ? acc_g : ev.rotate(acc_g, gb);
        acc_total = have_total ? ev.add(acc_total, rotated) : rotated;
        have_total = true;
    }

    ckks::Ciphertext out = ev.rescale(acc_total);
    return ev.add_plain(out, plan.bias);
}

inline ckks::Ciphertext encrypted_fc_packed(const ckks::Evaluator& ev,
                                            const ckks::Ciphertext& ct_x,
                                            const model::FoldedLinearLayer& layer) {
    return encrypted_fc_packed(ev, ct_x, make_packed_fc_plan(ev, layer));
}

// Encrypted logit layer: one dot product per class over the packed
// activation ciphertext.
inline std::vector<ckks::Ciphertext> encrypted_logits(const ckks::Evaluator& ev,
                                                      const ckks::Ciphertext& ct_a,
                                                      const model::LinearLayer& fc2) {
    return encrypted_fc(ev, ct_a, fc2.weights, fc2.bias);
}

// Per-class weight rows and broadcast biases encoded once per model.
struct LogitsPlan {
    std::vector<ckks::Plaintext> rows;
    std::vector<ckks::Plaintext> bias;
    size_t in_dim = 0;
};

inline LogitsPlan make_logits_plan(const ckks::Evaluator& ev, const model::LinearLayer& fc2) {
    const auto& ctx = *ev.context();
    LogitsPlan plan;
    plan.in_dim = fc2.in_dim();
    const double scale = ctx.params().scale();
    const size_t top = ctx.top_level();
    const double out_scale = scale * scale / static_cast<double>(ctx.modulus(top).value);
    std::vector<double> b(ctx.slots());
    for (size_t k = 0; k < fc2.out_dim(); ++k) {
        plan.rows.push_back(ev.encoder().encode(fc2.weights.row(k), scale, top));
        std::fill(b.begin(), b.end(), fc2.bias[k]);
        plan.bias.push_back(ev.encoder().encode(b, out_scale, top - 1));
    }
    return plan;
}

inline std::vector<ckks::Ciphertext> encrypted_logits(const ckks::Evaluator& ev,
                                                      const ckks::Ciphertext& ct_a,
                                                      const LogitsPlan& plan) {
    std::vector<ckks::Ciphertext> out;
    out.reserve(plan.rows.size());
    for (size_t k = 0; k < plan.rows.size(); ++k) {
        ckks::Ciphertext dot = ev.dot_plain(ct_a, plan.rows[k], plan.in_dim);
        out.push_back(ev.add_plain(dot, plan.bias[k]));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Client-side operations (hold the secret key)
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<double> activations_from_values(std::vector<double> z,
                                                   const approx::PolyApprox& act) {
    for (double& v : z) {
        v = std::clamp(v, act.domain_lo, act.domain_hi);
        v = act(v);
    }
    return z;
}

}  // namespace detail

// Hybrid activation, per-neuron layout: decrypt each FC1 output, clamp to
// the approximation domain, evaluate the polynomial in plaintext, and
// re-encrypt all h activations as one fresh top-level ciphertext.
inline ckks::Ciphertext hybrid_activation(std::span<const ckks::Ciphertext> ct_z,
                                          const ClientContext& client) {
    if (ct_z.empty()) throw validation_error("hybrid_activation: no pre-activations");
    std::vector<double> z(ct_z.size());
    for (size_t j = 0; j < ct_z.size(); ++j) {
        auto pt = client.decryptor.decrypt_checked(ct_z[j]);
        z[j] = client.encoder.decode(pt)[0];
    }
    std::vector<double> a = detail::activations_from_values(std::move(z), client.activation);
    auto pt = client.encoder.encode(a, client.ctx->params().scale(), client.ctx->top_level());
    return client.encryptor.encrypt(pt);
}

// Hybrid activation, packed layout: one decryption for all h slots.
inline ckks::Ciphertext hybrid_activation(const ckks::Ciphertext& ct_z_packed, size_t h,
                                          const ClientContext& client) {
    auto pt = client.decryptor.decrypt_checked(ct_z_packed);
    std::vector<double> z = client.encoder.decode(pt);
    z.resize(h);
    std::vector<double> a = detail::activations_from_values(std::move(z), client.activation);
    auto out = client.encoder.encode(a, client.ctx->params().scale(), client.ctx->top_level());
    return client.encryptor.encrypt(out);
}

// Decrypt the per-class logits and take the argmax; ties break to the
// lowest class index.
inline int predict(std::span<const ckks::Ciphertext> ct_logits, const ClientContext& client) {
    if (ct_logits.empty()) throw validation_error("predict: no logits");
    int best = 0;
    double best_val = -std::numeric_limits<double>::infinity();
    for (size_t k = 0; k < ct_logits.size(); ++k) {
        auto pt = client.decryptor.decrypt(ct_logits[k]);
        const double v = client.encoder.decode(pt)[0];
        if (v > best_val) {
            best_val = v;
            best = static_cast<int>(k);
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// Reference path and batch driver
// ---------------------------------------------------------------------------

struct OracleTrace {
    std::vector<double> z;       // FC1 pre-activations
    std::vector<double> a;       // clamped polynomial activations
    std::vector<double> logits;  // FC2 outputs
    int predicted = -1;
};

// Exact double-precision pipeline FC1 -> clamp -> polynomial -> FC2 ->
// argmax, exposing every intermediate for stage-wise comparison.
inline OracleTrace plaintext_oracle(std::span<const double> x, const model::ModelBundle& bundle) {
    OracleTrace t;
    t.z = bundle.fc1.forward(x);
    t.a = detail::activations_from_values(t.z, bundle.activation);
    t.logits = bundle.fc2.forward(t.a);
    t.predicted = 0;
    for (size_t k = 1; k < t.logits.size(); ++k)
        if (t.logits[k] > t.logits[t.predicted]) t.predicted = static_cast<int>(k);
    return t;
}

struct RunOptions {
    uint64_t seed = 0;
    size_t limit = 0;  // 0 = all samples
    bool strict = true;
    Fc1Layout layout = Fc1Layout::packed;
    size_t threads = 1;
    bool plaintext_only = false;
};

namespace detail {

inline uint64_t fnv1a(const std::string& s) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

using Clock = std::chrono::steady_clock;

inline double elapsed(Clock::time_point from) {
    return std::chrono::duration<double>(Clock::now() - from).count();
}

}  // namespace detail

// Encrypted batch inference with per-stage timing. Samples are independent
// and may be processed by a small worker pool; encryption randomness is
// derived per sample, so results do not depend on the thread count.
inline InferenceReport run_batch(const model::FeatureSet& features,
                                 const model::ModelBundle& bundle,
                                 const ckks::CkksParams& params, const RunOptions& opts) {
    if (features.size() == 0) throw validation_error("run_batch: empty feature set");
    bundle.validate();
    features.validate(bundle.classes);
    if (features.dim() != bundle.feature_dim)
        throw validation_error("run_batch: feature dim " + std::to_string(features.dim()) +
                               " != model feature dim " + std::to_string(bundle.feature_dim));

    const size_t total = opts.limit == 0 ? features.size() : std::min(opts.limit, features.size());

    InferenceReport rep;
    rep.config = {{"preset", params.name.empty() ? "custom" : params.name},
                  {"ring_dim", params.ring_dim},
                  {"coeff_mod_bits", params.coeff_mod_bits},
                  {"scale_log2", params.scale_log2},
                  {"seed", opts.seed},
                  {"samples", total},
                  {"strict", opts.strict},
                  {"threads", opts.threads},
                  {"layout", opts.layout == Fc1Layout::packed ? "packed" : "per-neuron"},
                  {"plaintext_only", opts.plaintext_only},
                  {"dataset", bundle.dataset},
                  {"feature_dim", bundle.feature_dim},
                  {"hidden_dim", bundle.hidden_dim()},
                  {"classes", bundle.classes},
                  {"activation",
                   {{"degree", bundle.activation.degree},
                    {"domain", {bundle.activation.domain_lo, bundle.activation.domain_hi}}}},
                  {"model_hash", detail::fnv1a(model::bundle_to_json(bundle).dump())}};
    rep.per_sample.resize(total);

    if (opts.plaintext_only) {
        for (size_t i = 0; i < total; ++i) {
            const auto t0 = detail::Clock::now();
            OracleTrace t = plaintext_oracle(features.features[i], bundle);
            auto& rec = rep.per_sample[i];
            rec.index = i;
            rec.label = features.labels[i];
            rec.predicted = t.predicted;
            rec.latency.total_s = detail::elapsed(t0);
        }
        rep.accuracy = static_cast<double>(rep.correct()) / static_cast<double>(total);
        return rep;
    }

    const bool packed = opts.layout == Fc1Layout::packed &&
                        bundle.hidden_dim() == bundle.feature_dim &&
                        (bundle.feature_dim == params.slots() ||
                         2 * bundle.feature_dim <= params.slots());
    if (bundle.feature_dim > params.slots())
        throw validation_error("run_batch: feature dim exceeds slot count of preset " + params.name);

    auto ctx = ckks::make_context(params);
    std::vector<uint64_t> extra;
    if (packed) extra = packed_fc_rotation_steps(bundle.feature_dim, params.slots());
    ckks::KeySet ks = ckks::keygen(*ctx, opts.seed, extra);
    ServerContext server(ctx, ks.eval);

    PackedFcPlan fc1_plan;
    if (packed) fc1_plan = make_packed_fc_plan(server.evaluator, bundle.fc1);
    const LogitsPlan fc2_plan = make_logits_plan(server.evaluator, bundle.fc2);

    std::exception_ptr first_error;
    std::mutex error_mutex;

    auto worker = [&](size_t begin, size_t end, size_t worker_idx) {
        try {
            ClientContext client(ctx, ks.secret, ks.eval.pk,
                                 opts.seed ^ (0x9e3779b97f4a7c15ull * (worker_idx + 1)),
                                 bundle.activation);
            for (size_t i = begin; i < end; ++i) {
                auto& rec = rep.per_sample[i];
                rec.index = i;
                rec.label = features.labels[i];
                const auto t_total = detail::Clock::now();

                auto t0 = detail::Clock::now();
                auto pt_x = client.encoder.encode(features.features[i], params.scale(),
                                                  ctx->top_level());
                auto ct_x = client.encryptor.encrypt(pt_x);
                rec.latency.encode_encrypt_s = detail::elapsed(t0);

                ckks::Ciphertext ct_a;
                double fc_time = 0.0;
                if (packed) {
                    t0 = detail::Clock::now();
                    auto ct_z = encrypted_fc_packed(server.evaluator, ct_x, fc1_plan);
                    fc_time += detail::elapsed(t0);
                    t0 = detail::Clock::now();
                    ct_a = hybrid_activation(ct_z, bundle.hidden_dim(), client);
                    rec.latency.activation_s = detail::elapsed(t0);
                } else {
                    t0 = detail::Clock::now();
                    auto ct_z = encrypted_fc(server.evaluator, ct_x, bundle.fc1);
                    fc_time += detail::elapsed(t0);
                    t0 = detail::Clock::now();
                    ct_a = hybrid_activation(std::span<const ckks::Ciphertext>(ct_z), client);
                    rec.latency.activation_s = detail::elapsed(t0);
                }

                t0 = detail::Clock::now();
                auto ct_logits = encrypted_logits(server.evaluator, ct_a, fc2_plan);
                fc_time += detail::elapsed(t0);
                rec.latency.fc_s = fc_time;

                t0 = detail::Clock::now();
                rec.predicted = predict(ct_logits, client);
                rec.latency.decrypt_s = detail::elapsed(t0);
                rec.latency.total_s = detail::elapsed(t_total);
            }
        } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!first_error) first_error = std::current_exception();
        }
    };

    const size_t n_threads = std::max<size_t>(1, std::min(opts.threads, total));
    if (n_threads == 1) {
        worker(0, total, 0);
    } else {
        std::vector<std::thread> pool;
        const size_t chunk = (total + n_threads - 1) / n_threads;
        for (size_t w = 0; w < n_threads; ++w) {
            const size_t begin = w * chunk;
            const size_t end = std::min(total, begin + chunk);
            if (begin >= end) break;
            pool.emplace_back(worker, begin, end, w);
        }
        for (auto& t : pool) t.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    rep.accuracy = static_cast<double>(rep.correct()) / static_cast<double>(total);
    return rep;
}

}  // namespace hei::infer
