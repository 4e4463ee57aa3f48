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

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "hei/common.hpp"

namespace hei::model {

// Precomputed feature vectors with ground-truth labels. CSV layout:
// header row, then one row per sample: label,f0,f1,...,f{d-1}.
struct FeatureSet {
    std::vector<std::vector<double>> features;
    std::vector<int> labels;

    size_t size() const { return features.size(); }
    size_t dim() const { return features.empty() ? 0 : features.front().size(); }

    void validate(size_t classes) const {
        if (features.size() != labels.size())
            throw validation_error("FeatureSet: feature/label count mismatch");
        for (size_t i = 0; i < labels.size(); ++i)
            if (labels[i] < 0 || static_cast<size_t>(labels[i]) >= classes)
                throw validation_error("FeatureSet: label out of range at row " +
                                       std::to_string(i + 2));
    }
};

inline void save_features(const FeatureSet& fs, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw validation_error("save_features: cannot open " + path);
    os << "label";
    for (size_t c = 0; c < fs.dim(); ++c) os << ",f" << c;
    os << '\n';
    os.precision(17);
    for (size_t i = 0; i < fs.size(); ++i) {
        os << fs.labels[i];
        for (double v : fs.features[i]) os << ',' << v;
        os << '\n';
    }
}

inline FeatureSet load_features(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw validation_error("load_features: cannot open " + path);
    FeatureSet fs;
    std::string line;
    if (!std::getline(is, line)) throw parse_error("features: empty file, header row required");
    if (line.rfind("label", 0) != 0)
        throw parse_error("features: first row must be a header starting with 'label'");

    size_t expected_cols = 0;
    size_t row = 1;
    while (std::getline(is, line)) {
        ++row;
        if (line.empty()) continue;
        std::vector<double> vals;
        size_t pos = 0;
        while (pos <= line.size()) {
            size_t comma = line.find(',', pos);
            if (comma == std::string::npos) comma = line.size();
            const char* first = line.data() + pos;
            const char* last = line.data() + comma;
            double v = 0.0;
            auto [ptr, ec] = std::from_chars(first, last, v);
            if (ec != std::errc() || ptr != last)
                throw parse_error("features: non-numeric cell in row " + std::to_string(row));
            if (!std::isfinite(v))
                throw parse_error("features: non-finite value in row " + std::to_string(row));
            vals.push_back(v);
            pos = comma + 1;
        }
        if (vals.size() < 2)
            throw parse_error("features: row " + std::to_string(row) + " has no feature values");
        if (expected_cols == 0) expected_cols = vals.size();
        if (vals.size() != expected_cols)
            throw parse_error("features: row " + std::to_string(row) + " has " +
                              std::to_string(vals.size() - 1) + " values, expected " +
                              std::to_string(expected_cols - 1));
        const double label_raw = vals.front();
        const int label = static_cast<int>(label_raw);
        if (label_raw != static_cast<double>(label))
            throw parse_error("features: non-integer label in row " + std::to_string(row));
        fs.labels.push_back(label);
        fs.features.emplace_back(vals.begin() + 1, vals.end());
    }
    return fs;
}

}  // namespace hei::model
