// Copyright 2026 The suffixlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "suffixlab/tokenizer.hpp"

#include <charconv>
#include <sstream>
#include <stdexcept>

namespace suffixlab {

namespace {

constexpr std::string_view kWordMarker = "</w>";

std::string strip_marker(std::string_view s) {
    if (s.size() > kWordMarker.size() && s.ends_with(kWordMarker)) s.remove_suffix(kWordMarker.size());
    return std::string(s);
}

} // namespace

std::optional<TokenIds> WhitespaceTokenizer::tokenize(std::string_view text) const {
    TokenIds ids;
    std::istringstream in{std::string(text)};
    std::string word;
    while (in >> word) {
        auto id = vocab_->find(word);
        if (!id) id = vocab_->find(word + std::string(kWordMarker));
        if (!id) return std::nullopt;
        ids.push_back(*id);
    }
    return ids;
}

std::string WhitespaceTokenizer::detokenize(std::span<const TokenId> ids) const {
    std::string out;
    for (TokenId id : ids) {
        if (!out.empty()) out += ' ';
        out += strip_marker((*vocab_)[id].surface);
    }
    return out;
}

TokenIds parse_token_ids(std::string_view text) {
    TokenIds ids;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto comma = text.find(',', pos);
        auto field = text.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
        while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
        while (!field.empty() && field.back() == ' ') field.remove_suffix(1);
        if (field.empty()) {
            if (comma == std::string_view::npos && ids.empty() && pos == 0) return ids;
            throw std::invalid_argument("empty token id in '" + std::string(text) + "'");
        }
        TokenId value = 0;
        const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
        if (ec != std::errc{} || ptr != field.data() + field.size()) {
            throw std::invalid_argument("bad token id '" + std::string(field) + "'");
        }
        ids.push_back(value);
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return ids;
}

} // namespace suffixlab
