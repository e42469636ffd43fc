// Copyright 2026 The suffixlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "suffixlab/matrix.hpp"

namespace suffixlab {

struct VocabEntry {
    std::string surface;
    // True when the surface ends a word (carries the white-space marker).
    bool word_final = true;
};

// Ordered vocabulary. An entry's index is its token id.
class Vocabulary {
public:
    Vocabulary() = default;
    explicit Vocabulary(std::vector<VocabEntry> entries);

    std::size_t size() const { return entries_.size(); }
    const VocabEntry& operator[](TokenId id) const { return entries_.at(id); }
    const std::vector<VocabEntry>& entries() const { return entries_; }

    std::optional<TokenId> find(std::string_view surface) const;

private:
    std::vector<VocabEntry> entries_;
    std::unordered_map<std::string, TokenId> index_;
};

// Token-embedding codebook: one row per vocabulary entry.
class Codebook {
public:
    Codebook(Matrix psi, Vocabulary vocab);

    const Matrix& psi() const { return psi_; }
    const Vocabulary& vocab() const { return vocab_; }
    std::size_t size() const { return psi_.rows(); }
    std::size_t d_token() const { return psi_.cols(); }
    std::span<const double> row(TokenId id) const;

    bool contains(TokenId id) const { return id < size(); }

private:
    Matrix psi_;
    Vocabulary vocab_;
};

struct FilteredVocabulary {
    std::set<TokenId> allowed_ids;
    // Sorted by descending cosine score, ties by lower id.
    std::vector<std::pair<TokenId, double>> removed_synonyms;
    TokenId target_id = 0;

    std::vector<TokenId> allowed_sorted() const { return {allowed_ids.begin(), allowed_ids.end()}; }
    bool allows(TokenId id) const { return allowed_ids.contains(id); }
};

// aᵀb / (‖a‖‖b‖). Throws std::domain_error naming the zero-norm argument.
double cosine(std::span<const double> a, std::span<const double> b);

// Word-final tokens minus the top_k tokens most cosine-similar to the target
// row. The ranking pool is the word-final tokens; ties go to the lower id.
FilteredVocabulary filter_vocabulary(const Codebook& codebook, TokenId target, std::size_t top_k);

// argmin over `allowed` of ‖ψ_j − z‖², ties to the lowest id.
TokenId nearest_token(const Codebook& codebook, std::span<const double> z, const std::set<TokenId>& allowed);
TokenId nearest_token(const Codebook& codebook, std::span<const double> z, std::span<const TokenId> allowed_sorted);

// "MMPC" float32 matrix file: magic, version 1, rows, cols (u32 LE), then
// row-major little-endian float32 values.
Matrix read_matrix_file(const std::filesystem::path& path);
void write_matrix_file(const std::filesystem::path& path, const Matrix& m);

// One "surface<TAB>word_final" entry per line; line number is the token id.
Vocabulary read_vocabulary_file(const std::filesystem::path& path);
void write_vocabulary_file(const std::filesystem::path& path, const Vocabulary& vocab);

Codebook load_codebook(const std::filesystem::path& matrix_path, const std::filesystem::path& vocab_path);

} // namespace suffixlab
