// Copyright 2026 The suffixlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "suffixlab/encoder_backend.hpp"

#include <stdexcept>

namespace suffixlab {

TokenIds EncoderBackend::target_template(TokenId target) const {
    return template_from_vocabulary(codebook().vocab(), target);
}

Matrix EncoderBackend::embed_tokens(std::span<const TokenId> ids) const {
    const auto& cb = codebook();
    Matrix out(ids.size(), cb.d_token());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const auto src = cb.row(ids[i]);
        std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return out;
}

Vector EncoderBackend::encode_ids(std::span<const TokenId> ids) const { return encode_text(embed_tokens(ids)).v; }

TokenIds template_from_vocabulary(const Vocabulary& vocab, TokenId target) {
    if (target >= vocab.size()) throw std::invalid_argument("template: target id out of range");
    TokenIds ids;
    std::string missing;
    for (const char* word : {"a", "photo", "of"}) {
        auto id = vocab.find(word);
        if (!id) id = vocab.find(std::string(word) + "</w>");
        if (id) {
            ids.push_back(*id);
        } else {
            missing += missing.empty() ? "" : ", ";
            missing += word;
        }
    }
    if (!missing.empty()) throw std::invalid_argument("template 'a photo of t' unrepresentable; missing: " + missing);
    ids.push_back(target);
    return ids;
}

} // namespace suffixlab
