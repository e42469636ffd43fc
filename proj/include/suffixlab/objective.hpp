// Copyright 2026 The suffixlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "suffixlab/encoder_backend.hpp"

namespace suffixlab {

inline constexpr double kDefaultLambda = 0.1;

// Text- and image-modality targets for one target category. Stored
// unnormalized; the loss only sees them through cosines.
struct TargetVectors {
    Vector v_text;
    Vector v_image;
    TokenId target = 0;
    double lambda = kDefaultLambda;

    // Checks finiteness, non-zero norms, matching dimension and lambda >= 0.
    void validate(std::size_t d_emb) const;
};

// F^t(E_ψ("a photo of t")).
Vector build_text_target(const EncoderBackend& backend, TokenId target);

// F^i(x_t) for a reference image that depicts the target.
Vector build_image_target(const EncoderBackend& backend, const ImageHandle& reference_image);

TargetVectors build_targets(const EncoderBackend& backend, TokenId target, const ImageHandle& reference_image,
                            double lambda = kDefaultLambda);

// −cos(v, v_image) − λ·cos(v, v_text). The text term is skipped (not
// multiplied by zero) when λ = 0.
double mmp_loss(std::span<const double> v, const TargetVectors& targets);

// ∂/∂v of −cos(v, a).
Vector neg_cosine_grad(std::span<const double> v, std::span<const double> a);

struct LossAndGrad {
    double loss = 0.0;
    Vector grad; // with respect to v
};

LossAndGrad mmp_loss_and_grad(std::span<const double> v, const TargetVectors& targets);

} // namespace suffixlab
