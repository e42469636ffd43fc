// Copyright 2026 The suffixlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>

#include "suffixlab/codebook.hpp"
#include "suffixlab/encoder_backend.hpp"
#include "suffixlab/objective.hpp"

namespace suffixlab {

enum class InitMethod { eos, random, synonym };

std::string to_string(InitMethod method);
InitMethod parse_init_method(std::string_view name);

struct AdamParams {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AttackConfig {
    std::size_t m = 4;
    double lambda = kDefaultLambda;
    double learning_rate = 0.001;
    std::size_t iterations = 10000;
    InitMethod init = InitMethod::synonym;
    std::uint64_t seed = 0;
    AdamParams adam;
    // Keep every k-th loss when writing result files; 1 keeps all.
    std::size_t trace_every = 1;

    void validate() const;
};

struct SuffixState {
    Matrix z;
    Matrix best_z;
    double best_loss = 0.0;
    std::size_t iteration = 0;
    // Loss evaluated at iteration 1..N (one entry for N = 0).
    std::vector<double> loss_trace;
    // Running minimum of loss_trace.
    std::vector<double> best_trace;
};

struct AttackOutcome {
    TokenIds suffix;
    SuffixState state;
};

// Row-wise nearest allowed codebook row. The forward value is ψ_j; in the
// backward pass the projection is the identity, so a gradient taken with
// respect to `projected` is the gradient for Z.
struct Projection {
    Matrix projected;
    TokenIds ids;
};

Projection project(const Matrix& z, const Codebook& codebook, std::span<const TokenId> allowed_sorted);

Matrix initialize(InitMethod method, std::size_t m, const Codebook& codebook, const FilteredVocabulary& filtered,
                  TokenId target, std::uint64_t seed, std::optional<TokenId> eos_token);

// One forward/backward pass through Proj, the text encoder and the loss.
struct SteEvaluation {
    double loss = 0.0;
    Matrix grad_z; // m x d_token
    TokenIds ids;
    Vector v;
};

SteEvaluation evaluate_ste(const EncoderBackend& backend, const Matrix& prompt_rows, const Matrix& z,
                           const TargetVectors& targets, std::span<const TokenId> allowed_sorted);

// Loss of a concrete token suffix appended to the prompt.
double suffix_loss(const EncoderBackend& backend, std::span<const TokenId> prompt, std::span<const TokenId> suffix,
                   const TargetVectors& targets);

// Straight-through optimization of an m-token suffix. Per iteration: encode
// prompt ⊕ Proj(Z), evaluate the loss, update the best before stepping, then
// take one Adam step on Z. With zero iterations the initialization is
// evaluated once and decoded.
AttackOutcome optimize(const EncoderBackend& backend, std::span<const TokenId> original_prompt,
                       const TargetVectors& targets, const AttackConfig& config, const FilteredVocabulary& filtered);

// Optimization from a caller-supplied starting matrix.
AttackOutcome optimize_from(const EncoderBackend& backend, std::span<const TokenId> original_prompt,
                            const TargetVectors& targets, const AttackConfig& config,
                            const FilteredVocabulary& filtered, Matrix z0);

} // namespace suffixlab
