// Copyright 2026 The suffixlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "suffixlab/encoder_backend.hpp"

namespace suffixlab {

// Golden inputs stored in an adapter conformance file.
struct ConformanceInputs {
    std::vector<TokenIds> prompts;
    std::vector<ImageHandle> images;
};

// Conformance document: backend name, dimensions, special-token and
// truncation policies, and golden input/output pairs produced by `backend`.
nlohmann::json make_conformance(const EncoderBackend& backend, const ConformanceInputs& inputs);

struct ConformanceCheck {
    bool ok = true;
    std::vector<std::string> failures;
};

// Re-runs every golden pair. Text outputs must match within `text_tol` per
// coordinate; image outputs within `image_cos_tol` cosine distance.
ConformanceCheck check_conformance(const EncoderBackend& backend, const nlohmann::json& doc,
                                   double text_tol = 1e-6, double image_cos_tol = 1e-5);

} // namespace suffixlab
