// Copyright 2026 The suffixlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>

#include "suffixlab/codebook.hpp"
#include "suffixlab/matrix.hpp"

namespace suffixlab {

// An image as seen by the harness. External adapters decode `path`; the
// reference backend only understands precomputed `embedding` vectors.
struct ImageHandle {
    std::string id;
    std::filesystem::path path;
    std::optional<Vector> embedding;
};

struct TextEncodeResult {
    Vector v;
    // Maps an upstream gradient on v (d_emb) to the gradient on every input
    // row (|s| x d_token). Linear in its argument.
    std::function<Matrix(std::span<const double>)> vjp;
};

// Token embedder, text encoder and image encoder of a contrastive model.
// Implementations are immutable after construction.
class EncoderBackend {
public:
    virtual ~EncoderBackend() = default;

    virtual std::string name() const = 0;
    virtual const Codebook& codebook() const = 0;
    virtual std::size_t d_emb() const = 0;
    virtual std::size_t max_prompt_len() const = 0;
    virtual std::optional<TokenId> eos_token() const { return std::nullopt; }

    // Where suffix rows go relative to begin/end markers, recorded in the
    // conformance file.
    virtual std::string special_token_policy() const = 0;
    virtual std::string truncation_policy() const = 0;

    // Token ids for the prompt "a photo of <target>". Throws
    // std::invalid_argument listing template words missing from the vocabulary.
    virtual TokenIds target_template(TokenId target) const;

    virtual TextEncodeResult encode_text(const Matrix& token_rows) const = 0;
    virtual Vector encode_image(const ImageHandle& image) const = 0;

    std::size_t d_token() const { return codebook().d_token(); }

    // Row i is ψ of token i. Throws for unknown ids.
    Matrix embed_tokens(std::span<const TokenId> ids) const;

    // F^t(E_ψ(ids)) without the gradient closure.
    Vector encode_ids(std::span<const TokenId> ids) const;
};

// Finds the "a photo of" words by surface, accepting an optional "</w>" marker.
TokenIds template_from_vocabulary(const Vocabulary& vocab, TokenId target);

} // namespace suffixlab
