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
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

namespace hei::infer {

// Per-sample wall-clock stage timings, seconds.
struct LatencyBreakdown {
    double encode_encrypt_s = 0.0;
    double fc_s = 0.0;          // both encrypted linear layers
    double activation_s = 0.0;  // hybrid decrypt/evaluate/re-encrypt
    double decrypt_s = 0.0;     // final logit decryption
    double total_s = 0.0;

    double stage_sum() const { return encode_encrypt_s + fc_s + activation_s + decrypt_s; }
};

struct SampleRecord {
    size_t index = 0;
    int label = -1;
    int predicted = -1;
    LatencyBreakdown latency;
};

struct LatencySummary {
    double mean = 0.0, median = 0.0, p95 = 0.0;
};

inline LatencySummary summarize(std::vector<double> values) {
    LatencySummary s;
    if (values.empty()) return s;
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(values.size());
    std::sort(values.begin(), values.end());
    s.median = values[values.size() / 2];
    s.p95 = values[std::min(values.size() - 1, static_cast<size_t>(0.95 * values.size()))];
    return s;
}

struct InferenceReport {
    double accuracy = 0.0;
    std::vector<SampleRecord> per_sample;
    nlohmann::json config;  // resolved run configuration, echoed verbatim

    size_t correct() const {
        size_t c = 0;
        for (const auto& r : per_sample)
            if (r.predicted == r.label) ++c;
        return c;
    }

    LatencySummary total_latency() const {
        std::vector<double> t;
        t.reserve(per_sample.size());
        for (const auto& r : per_sample) t.push_back(r.latency.total_s);
        return summarize(std::move(t));
    }
};

inline nlohmann::json report_to_json(const InferenceReport& rep) {
    nlohmann::json samples = nlohmann::json::array();
    for (const auto& r : rep.per_sample) {
        samples.push_back({{"index", r.index},
                           {"label", r.label},
                           {"predicted", r.predicted},
                           {"encode_encrypt_s", r.latency.encode_encrypt_s},
                           {"fc_s", r.latency.fc_s},
                           {"activation_s", r.latency.activation_s},
                           {"decrypt_s", r.latency.decrypt_s},
                           {"total_s", r.latency.total_s}});
    }
    const auto lat = rep.total_latency();
    return nlohmann::json{{"accuracy", rep.accuracy},
                          {"samples", rep.per_sample.size()},
                          {"latency_total_s", {{"mean", lat.mean}, {"median", lat.median}, {"p95", lat.p95}}},
                          {"config", rep.config},
                          {"per_sample", samples}};
}

inline void report_to_csv(std::ostream& os, const InferenceReport& rep) {
    os << "index,label,predicted,encode_encrypt_s,fc_s,activation_s,decrypt_s,total_s\n";
    for (const auto& r : rep.per_sample) {
        os << r.index << ',' << r.label << ',' << r.predicted << ',' << r.latency.encode_encrypt_s
           << ',' << r.latency.fc_s << ',' << r.latency.activation_s << ',' << r.latency.decrypt_s
           << ',' << r.latency.total_s << '\n';
    }
}

}  // namespace hei::infer
