// Copyright 2026 The suffixlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "suffixlab/codebook.hpp"

namespace suffixlab {

// Maps free text to token ids. Adapters for real models wrap their own
// tokenizer behind this interface.
class TextTokenizer {
public:
    virtual ~TextTokenizer() = default;
    // nullopt when the text cannot be represented.
    virtual std::optional<TokenIds> tokenize(std::string_view text) const = 0;
    virtual std::string detokenize(std::span<const TokenId> ids) const = 0;
};

// Splits on white-space and looks each word up as a whole surface. Surfaces
// with a trailing "</w>" marker also match the bare word.
class WhitespaceTokenizer final : public TextTokenizer {
public:
    explicit WhitespaceTokenizer(const Vocabulary& vocab) : vocab_(&vocab) {}

    std::optional<TokenIds> tokenize(std::string_view text) const override;
    std::string detokenize(std::span<const TokenId> ids) const override;

private:
    const Vocabulary* vocab_;
};

// Parses "3,17,42" into ids; throws std::invalid_argument on bad input.
TokenIds parse_token_ids(std::string_view text);

} // namespace suffixlab
