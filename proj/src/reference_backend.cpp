// Copyright 2026 The suffixlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "suffixlab/reference_backend.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "suffixlab/rng.hpp"

namespace suffixlab {

namespace {

Matrix seeded_matrix(std::uint64_t seed, std::size_t rows, std::size_t cols) {
    const auto values = seeded_uniform(seed, rows * cols);
    return Matrix(rows, cols, std::vector<double>(values.begin(), values.end()));
}

} // namespace

Matrix ReferenceBackend::generate_psi() { return seeded_matrix(kPsiSeed, kVocabSize, kDToken); }

Matrix ReferenceBackend::generate_weight() { return seeded_matrix(kWeightSeed, kDEmb, kDToken); }

Vocabulary ReferenceBackend::generate_vocabulary() {
    std::vector<VocabEntry> entries;
    entries.reserve(kVocabSize);
    for (std::size_t i = 0; i < kVocabSize; ++i) {
        char buf[8];
        std::snprintf(buf, sizeof buf, "tok%02zu", i);
        entries.push_back({buf, true});
    }
    return Vocabulary(std::move(entries));
}

ReferenceBackend::ReferenceBackend() : ReferenceBackend(Codebook(generate_psi(), generate_vocabulary())) {}

ReferenceBackend::ReferenceBackend(Codebook codebook) : ReferenceBackend(std::move(codebook), generate_weight()) {}

ReferenceBackend::ReferenceBackend(Codebook codebook, Matrix weight)
    : codebook_(std::move(codebook)), weight_(std::make_shared<const Matrix>(std::move(weight))) {
    if (weight_->cols() != codebook_.d_token()) {
        throw std::invalid_argument("ReferenceBackend: weight has " + std::to_string(weight_->cols()) +
                                    " columns, codebook d_token is " + std::to_string(codebook_.d_token()));
    }
}

std::optional<TokenId> ReferenceBackend::eos_token() const {
    if (codebook_.size() <= kEosToken) return std::nullopt;
    return kEosToken;
}

std::string ReferenceBackend::special_token_policy() const {
    return "none: no begin/end markers; suffix rows are appended directly after the prompt rows";
}

std::string ReferenceBackend::truncation_policy() const {
    return "reject: prompts longer than max_prompt_len are an error, never truncated";
}

TokenIds ReferenceBackend::target_template(TokenId target) const {
    for (TokenId id : {TokenId{1}, TokenId{2}, TokenId{3}, target}) {
        if (!codebook_.contains(id)) {
            throw std::invalid_argument("template 'a photo of t' unrepresentable; missing token id " +
                                        std::to_string(id));
        }
    }
    return {1, 2, 3, target};
}

TextEncodeResult ReferenceBackend::encode_text(const Matrix& token_rows) const {
    const std::size_t n = token_rows.rows();
    const std::size_t d_token = codebook_.d_token();
    if (token_rows.cols() != d_token) {
        throw std::invalid_argument("encode_text: input width " + std::to_string(token_rows.cols()) +
                                    " != d_token " + std::to_string(d_token));
    }
    if (n == 0) throw std::invalid_argument("encode_text: empty prompt");
    if (n > kMaxPromptLen) {
        throw std::length_error("encode_text: prompt of " + std::to_string(n) + " tokens exceeds max_prompt_len " +
                                std::to_string(kMaxPromptLen));
    }

    Vector pooled(d_token, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < d_token; ++c) pooled[c] += token_rows(i, c);
    }
    for (double& x : pooled) x /= static_cast<double>(n);

    const Matrix& w = *weight_;
    Vector v(w.rows());
    for (std::size_t r = 0; r < w.rows(); ++r) v[r] = std::tanh(dot(w.row(r), pooled));

    auto weight = weight_;
    auto vjp = [weight, v, n, d_token](std::span<const double> upstream) {
        if (upstream.size() != v.size()) throw std::invalid_argument("vjp: upstream dimension mismatch");
        Vector pooled_grad(d_token, 0.0);
        for (std::size_t r = 0; r < v.size(); ++r) {
            const double g = upstream[r] * (1.0 - v[r] * v[r]);
            const auto wr = weight->row(r);
            for (std::size_t c = 0; c < d_token; ++c) pooled_grad[c] += wr[c] * g;
        }
        Matrix out(n, d_token);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t c = 0; c < d_token; ++c) out(i, c) = pooled_grad[c] / static_cast<double>(n);
        }
        return out;
    };
    return {std::move(v), std::move(vjp)};
}

Vector ReferenceBackend::encode_image(const ImageHandle& image) const {
    if (!image.embedding) {
        throw std::invalid_argument("reference backend: image '" + image.id + "' has no embedding vector");
    }
    if (image.embedding->size() != d_emb()) {
        throw std::invalid_argument("reference backend: image '" + image.id + "' embedding has dimension " +
                                    std::to_string(image.embedding->size()) + ", expected " + std::to_string(d_emb()));
    }
    for (double x : *image.embedding) {
        if (!std::isfinite(x)) throw std::invalid_argument("reference backend: image '" + image.id + "' is not finite");
    }
    return *image.embedding;
}

} // namespace suffixlab
