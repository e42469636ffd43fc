// Copyright 2026 The suffixlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "suffixlab/matrix.hpp"

namespace suffixlab {

// Placeholder substituted by each subject.
inline constexpr std::string_view kSubjectSlot = "{}";

struct GridPrompt {
    std::string text;
    std::size_t template_idx = 0;
    std::size_t subject_idx = 0;
};

struct PromptGrid {
    std::vector<std::string> templates;
    std::vector<std::string> subjects;
    // Template-major: (t0,s0), (t0,s1), ..., (t1,s0), ...
    std::vector<GridPrompt> prompts;
};

// Every template must contain exactly one "{}" slot.
PromptGrid build_grid(std::vector<std::string> templates, std::vector<std::string> subjects);

// Euclidean distance matrix; rows of `embeddings` are the points.
Matrix pairwise_distances(const Matrix& embeddings);

struct ClusterSeparation {
    double within = 0.0;
    double between = 0.0;
    // within / between; nullopt when between is zero.
    std::optional<double> ratio;
};

// Means over all unordered within-label and between-label pairs. Needs at
// least two labels, each with at least two members.
ClusterSeparation cluster_separation(const Matrix& embeddings, const std::vector<std::size_t>& labels);

// Header "id,template_idx,subject_idx,label,dim0..dimN".
void write_embedding_csv(std::ostream& out, const PromptGrid& grid, const Matrix& embeddings);
// Square matrix with prompt ids as row and column headers.
void write_distance_csv(std::ostream& out, const Matrix& distances);

// Shortest round-trip decimal form, used by every CSV writer.
std::string format_number(double x);

} // namespace suffixlab
