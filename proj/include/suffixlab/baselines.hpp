// Copyright 2026 The suffixlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "suffixlab/codebook.hpp"
#include "suffixlab/encoder_backend.hpp"
#include "suffixlab/tokenizer.hpp"

namespace suffixlab {

// m ids drawn uniformly with replacement from the sorted allowed ids, using
// seeded_uniform(seed, m).
TokenIds random_suffix(std::size_t m, const FilteredVocabulary& filtered, std::uint64_t seed);

std::string printable_charset();

enum class GeneticMode {
    character, // genomes are strings, scored through a tokenizer
    token,     // genomes are token ids over the allowed vocabulary
};

struct GeneticConfig {
    std::size_t generations = 500;
    std::size_t candidates_per_generation = 20;
    std::size_t suffix_char_len = 32;
    std::string charset = printable_charset();
    double mutation_rate = 0.1;
    std::uint64_t seed = 0;
    GeneticMode mode = GeneticMode::character;
    // Genome length in token mode.
    std::size_t suffix_tokens = 4;
    // Placed at the front of the first generation; the rest is random.
    std::vector<std::string> initial_strings;
    std::vector<TokenIds> initial_tokens;

    void validate() const;
};

struct GeneticOutcome {
    std::string suffix_text;
    TokenIds suffix_ids;
    double best_fitness = 0.0;
    // Best-ever fitness after each generation.
    std::vector<double> best_trace;
};

// Maximizes cos(F^t(E_ψ(s_o ⊕ s_a)), v_text). Each generation keeps the best
// candidate, then fills the population with tournament-selected (size 2)
// parents, single-point crossover and per-gene mutation. Candidates that do
// not tokenize, use a banned token or overflow the prompt limit score -inf.
GeneticOutcome genetic_attack(const EncoderBackend& backend, std::span<const TokenId> original_prompt,
                              std::span<const double> target_text_vector, const GeneticConfig& config,
                              const FilteredVocabulary& filtered, const TextTokenizer* text_adapter);

struct GcgConfig {
    std::size_t steps = 1000;
    std::size_t candidates_per_step = 256;
    // Clamped to the allowed vocabulary size.
    std::size_t top_k_coordinates = 256;
    std::size_t suffix_tokens = 4;
    std::uint64_t seed = 0;
    // Defaults to random_suffix(suffix_tokens, filtered, seed).
    std::optional<TokenIds> initial_suffix;

    void validate() const;
};

struct GcgOutcome {
    TokenIds suffix;
    double best_loss = 0.0;
    // Loss of the current suffix after each step.
    std::vector<double> loss_trace;
    std::size_t steps_run = 0;
};

// Greedy coordinate gradient on −cos(v, v_text). Replacement tokens are
// ranked per position by the linearized change gᵢ·(ψ_j − ψ_current); a sample
// of single-token swaps from the union of the per-position top lists is
// evaluated exactly and the best is kept only if it improves.
GcgOutcome gcg_attack(const EncoderBackend& backend, std::span<const TokenId> original_prompt,
                      std::span<const double> target_text_vector, const GcgConfig& config,
                      const FilteredVocabulary& filtered);

} // namespace suffixlab
