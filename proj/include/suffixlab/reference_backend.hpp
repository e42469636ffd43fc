// Copyright 2026 The suffixlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>

#include "suffixlab/encoder_backend.hpp"

namespace suffixlab {

// Deterministic desk-scale backend.
//
// 64 tokens "tok00".."tok63" (all word-final), d_token = 8, d_emb = 16.
// ψ is seeded_uniform(1) and W (d_emb x d_token) is seeded_uniform(2), both
// row-major. Text: v = tanh(W · mean of input rows). Image: identity on a
// d_emb embedding vector. No special tokens; token 0 doubles as the
// end-of-string token for EOS initialization. Template "a photo of t" is
// the id sequence [1, 2, 3, t].
class ReferenceBackend final : public EncoderBackend {
public:
    static constexpr std::size_t kVocabSize = 64;
    static constexpr std::size_t kDToken = 8;
    static constexpr std::size_t kDEmb = 16;
    static constexpr std::size_t kMaxPromptLen = 32;
    static constexpr std::uint64_t kPsiSeed = 1;
    static constexpr std::uint64_t kWeightSeed = 2;
    static constexpr TokenId kEosToken = 0;

    ReferenceBackend();
    // Custom codebook (must have d_token = 8) with the seeded weight matrix.
    explicit ReferenceBackend(Codebook codebook);
    ReferenceBackend(Codebook codebook, Matrix weight);

    std::string name() const override { return "reference"; }
    const Codebook& codebook() const override { return codebook_; }
    std::size_t d_emb() const override { return weight_->rows(); }
    std::size_t max_prompt_len() const override { return kMaxPromptLen; }
    std::optional<TokenId> eos_token() const override;
    std::string special_token_policy() const override;
    std::string truncation_policy() const override;

    TokenIds target_template(TokenId target) const override;
    TextEncodeResult encode_text(const Matrix& token_rows) const override;
    Vector encode_image(const ImageHandle& image) const override;

    const Matrix& weight() const { return *weight_; }

    static Matrix generate_psi();
    static Matrix generate_weight();
    static Vocabulary generate_vocabulary();

private:
    Codebook codebook_;
    std::shared_ptr<const Matrix> weight_;
};

} // namespace suffixlab
