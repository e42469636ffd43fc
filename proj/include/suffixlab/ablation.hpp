// Copyright 2026 The suffixlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "suffixlab/reference_backend.hpp"
#include "suffixlab/ste_optimizer.hpp"

namespace suffixlab {

// One seeded attack problem on the reference backend.
//
// seeded_uniform(1000 + seed, 5) picks the target and a 4-token original
// prompt. The reference "image" is the text embedding of a caption made of
// the target plus three tokens from seeded_uniform(2000 + seed, 3), i.e. an
// embedding that depicts the target among unrelated content. The
// vocabulary is filtered with top_k synonyms of the target removed.
struct DeskInstance {
    std::uint64_t seed = 0;
    TokenId target = 0;
    TokenIds prompt;
    TokenIds reference_caption;
    ImageHandle reference_image;
    FilteredVocabulary filtered;
    TargetVectors targets;
};

inline constexpr std::size_t kDeskTopK = 20;

DeskInstance make_desk_instance(const ReferenceBackend& backend, std::uint64_t seed, double lambda = kDefaultLambda,
                                std::size_t top_k = kDeskTopK);

struct RunSummary {
    std::uint64_t seed = 0;
    TokenIds suffix;
    double best_loss = 0.0;
    double image_cosine = 0.0;
    double text_cosine = 0.0;
};

// Runs optimize() on instance seeds base_seed ^ i for i in [0, runs), in
// parallel across `jobs` threads. Results are ordered by i.
std::vector<RunSummary> run_desk_batch(const ReferenceBackend& backend, const AttackConfig& config,
                                       std::uint64_t base_seed, std::size_t runs, std::size_t jobs = 1);

struct SweepRow {
    std::string variant; // "IMP" for lambda = 0, "MMP" otherwise, or the init name
    double lambda = 0.0;
    std::string init;
    std::size_t runs = 0;
    double mean_best_loss = 0.0;
    double mean_image_cosine = 0.0;
    double mean_text_cosine = 0.0;
};

std::vector<double> default_lambda_grid();

std::vector<SweepRow> lambda_sweep(const ReferenceBackend& backend, AttackConfig config,
                                   const std::vector<double>& lambdas, std::uint64_t base_seed, std::size_t runs,
                                   std::size_t jobs = 1);

std::vector<SweepRow> init_ablation(const ReferenceBackend& backend, AttackConfig config,
                                    const std::vector<InitMethod>& inits, std::uint64_t base_seed, std::size_t runs,
                                    std::size_t jobs = 1);

// Header "variant,lambda,init,runs,mean_best_loss,mean_image_cos,mean_text_cos".
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

} // namespace suffixlab
