// Copyright 2026 The suffixlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "suffixlab/feature_analysis.hpp"

#include <charconv>
#include <cmath>
#include <map>
#include <stdexcept>

namespace suffixlab {

std::string format_number(double x) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    if (ec != std::errc{}) throw std::runtime_error("format_number failed");
    return std::string(buf, ptr);
}

PromptGrid build_grid(std::vector<std::string> templates, std::vector<std::string> subjects) {
    PromptGrid grid;
    for (std::size_t t = 0; t < templates.size(); ++t) {
        const auto& tpl = templates[t];
        const auto first = tpl.find(kSubjectSlot);
        if (first == std::string::npos || tpl.find(kSubjectSlot, first + 1) != std::string::npos) {
            throw std::invalid_argument("template " + std::to_string(t) + " must contain exactly one '{}' slot");
        }
        for (std::size_t s = 0; s < subjects.size(); ++s) {
            std::string text = tpl;
            text.replace(first, kSubjectSlot.size(), subjects[s]);
            grid.prompts.push_back({std::move(text), t, s});
        }
    }
    grid.templates = std::move(templates);
    grid.subjects = std::move(subjects);
    return grid;
}

Matrix pairwise_distances(const Matrix& embeddings) {
    const std::size_t n = embeddings.rows();
    for (double x : embeddings.data()) {
        if (!std::isfinite(x)) throw std::invalid_argument("pairwise_distances: non-finite embedding");
    }
    Matrix d(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double dist = std::sqrt(squared_distance(embeddings.row(i), embeddings.row(j)));
            d(i, j) = dist;
            d(j, i) = dist;
        }
    }
    return d;
}

ClusterSeparation cluster_separation(const Matrix& embeddings, const std::vector<std::size_t>& labels) {
    if (labels.size() != embeddings.rows()) throw std::invalid_argument("cluster_separation: one label per row");
    std::map<std::size_t, std::size_t> sizes;
    for (auto l : labels) ++sizes[l];
    if (sizes.size() < 2) throw std::invalid_argument("cluster_separation: need at least two labels");
    for (const auto& [label, n] : sizes) {
        if (n < 2) throw std::invalid_argument("cluster_separation: label " + std::to_string(label) + " has < 2 members");
    }

    double within = 0.0, between = 0.0;
    std::size_t n_within = 0, n_between = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        for (std::size_t j = i + 1; j < labels.size(); ++j) {
            const double dist = std::sqrt(squared_distance(embeddings.row(i), embeddings.row(j)));
            if (labels[i] == labels[j]) {
                within += dist;
                ++n_within;
            } else {
                between += dist;
                ++n_between;
            }
        }
    }
    ClusterSeparation out;
    out.within = within / static_cast<double>(n_within);
    out.between = between / static_cast<double>(n_between);
    if (out.between > 0.0) out.ratio = out.within / out.between;
    return out;
}

void write_embedding_csv(std::ostream& out, const PromptGrid& grid, const Matrix& embeddings) {
    if (embeddings.rows() != grid.prompts.size()) throw std::invalid_argument("write_embedding_csv: row count");
    out << "id,template_idx,subject_idx,label";
    for (std::size_t c = 0; c < embeddings.cols(); ++c) out << ",dim" << c;
    out << '\n';
    for (std::size_t i = 0; i < grid.prompts.size(); ++i) {
        const auto& p = grid.prompts[i];
        out << i << ',' << p.template_idx << ',' << p.subject_idx << ',' << grid.subjects[p.subject_idx];
        for (double x : embeddings.row(i)) out << ',' << format_number(x);
        out << '\n';
    }
}

void write_distance_csv(std::ostream& out, const Matrix& distances) {
    out << "id";
    for (std::size_t j = 0; j < distances.cols(); ++j) out << ',' << j;
    out << '\n';
    for (std::size_t i = 0; i < distances.rows(); ++i) {
        out << i;
        for (double x : distances.row(i)) out << ',' << format_number(x);
        out << '\n';
    }
}

} // namespace suffixlab
