// Copyright 2026 The suffixlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "suffixlab/conformance.hpp"

#include <cmath>

namespace suffixlab {

using nlohmann::json;

json make_conformance(const EncoderBackend& backend, const ConformanceInputs& inputs) {
    json doc;
    doc["format_version"] = 1;
    doc["backend"] = backend.name();
    doc["d_token"] = backend.d_token();
    doc["d_emb"] = backend.d_emb();
    doc["max_prompt_len"] = backend.max_prompt_len();
    doc["special_token_policy"] = backend.special_token_policy();
    doc["truncation_policy"] = backend.truncation_policy();
    if (auto eos = backend.eos_token()) doc["eos_token"] = *eos;

    json text = json::array();
    for (const auto& ids : inputs.prompts) {
        text.push_back({{"input_ids", ids}, {"embedding", backend.encode_ids(ids)}});
    }
    doc["text_golden"] = std::move(text);

    json images = json::array();
    for (const auto& img : inputs.images) {
        json entry{{"id", img.id}, {"embedding", backend.encode_image(img)}};
        if (!img.path.empty()) entry["path"] = img.path.generic_string();
        if (img.embedding) entry["input_embedding"] = *img.embedding;
        images.push_back(std::move(entry));
    }
    doc["image_golden"] = std::move(images);
    return doc;
}

ConformanceCheck check_conformance(const EncoderBackend& backend, const json& doc, double text_tol,
                                   double image_cos_tol) {
    ConformanceCheck out;
    auto fail = [&out](std::string msg) {
        out.ok = false;
        out.failures.push_back(std::move(msg));
    };

    if (doc.at("backend").get<std::string>() != backend.name()) fail("backend name mismatch");
    if (doc.at("d_token").get<std::size_t>() != backend.d_token()) fail("d_token mismatch");
    if (doc.at("d_emb").get<std::size_t>() != backend.d_emb()) fail("d_emb mismatch");
    if (doc.at("max_prompt_len").get<std::size_t>() != backend.max_prompt_len()) fail("max_prompt_len mismatch");

    for (const auto& entry : doc.at("text_golden")) {
        const auto ids = entry.at("input_ids").get<TokenIds>();
        const auto golden = entry.at("embedding").get<Vector>();
        const auto got = backend.encode_ids(ids);
        if (got.size() != golden.size()) {
            fail("text golden dimension mismatch");
            continue;
        }
        for (std::size_t i = 0; i < got.size(); ++i) {
            if (std::abs(got[i] - golden[i]) > text_tol) {
                fail("text golden mismatch at coordinate " + std::to_string(i));
                break;
            }
        }
    }
    for (const auto& entry : doc.at("image_golden")) {
        ImageHandle img;
        img.id = entry.at("id").get<std::string>();
        if (entry.contains("path")) img.path = entry["path"].get<std::string>();
        if (entry.contains("input_embedding")) img.embedding = entry["input_embedding"].get<Vector>();
        const auto golden = entry.at("embedding").get<Vector>();
        const auto got = backend.encode_image(img);
        if (got.size() != golden.size() || 1.0 - cosine(got, golden) > image_cos_tol) {
            fail("image golden mismatch for '" + img.id + "'");
        }
    }
    return out;
}

} // namespace suffixlab
