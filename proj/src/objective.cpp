// Copyright 2026 The suffixlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "suffixlab/objective.hpp"

#include <cmath>
#include <stdexcept>

namespace suffixlab {

namespace {

void check_vector(const Vector& v, std::size_t d_emb, const char* what) {
    if (v.size() != d_emb) {
        throw std::invalid_argument(std::string(what) + " has dimension " + std::to_string(v.size()) +
                                    ", expected " + std::to_string(d_emb));
    }
    for (double x : v) {
        if (!std::isfinite(x)) throw std::invalid_argument(std::string(what) + " is not finite");
    }
    if (norm(v) == 0.0) throw std::invalid_argument(std::string(what) + " is the zero vector");
}

} // namespace

void TargetVectors::validate(std::size_t d_emb) const {
    check_vector(v_text, d_emb, "v_text");
    check_vector(v_image, d_emb, "v_image");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("lambda must be finite and >= 0");
}

Vector build_text_target(const EncoderBackend& backend, TokenId target) {
    Vector v = backend.encode_ids(backend.target_template(target));
    check_vector(v, backend.d_emb(), "v_text");
    return v;
}

Vector build_image_target(const EncoderBackend& backend, const ImageHandle& reference_image) {
    Vector v = backend.encode_image(reference_image);
    check_vector(v, backend.d_emb(), "v_image");
    return v;
}

TargetVectors build_targets(const EncoderBackend& backend, TokenId target, const ImageHandle& reference_image,
                            double lambda) {
    TargetVectors t{build_text_target(backend, target), build_image_target(backend, reference_image), target, lambda};
    t.validate(backend.d_emb());
    return t;
}

double mmp_loss(std::span<const double> v, const TargetVectors& targets) {
    if (norm(v) == 0.0) throw std::domain_error("mmp_loss: v has zero norm");
    double loss = -cosine(v, targets.v_image);
    if (targets.lambda != 0.0) loss -= targets.lambda * cosine(v, targets.v_text);
    return loss;
}

Vector neg_cosine_grad(std::span<const double> v, std::span<const double> a) {
    const double nv = norm(v);
    const double na = norm(a);
    if (nv == 0.0) throw std::domain_error("neg_cosine_grad: v has zero norm");
    if (na == 0.0) throw std::domain_error("neg_cosine_grad: target has zero norm");
    const double c = dot(v, a) / (nv * na);
    Vector g(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) g[i] = -(a[i] / (nv * na) - c * v[i] / (nv * nv));
    return g;
}

LossAndGrad mmp_loss_and_grad(std::span<const double> v, const TargetVectors& targets) {
    LossAndGrad out;
    out.loss = mmp_loss(v, targets);
    out.grad = neg_cosine_grad(v, targets.v_image);
    if (targets.lambda != 0.0) {
        const auto text = neg_cosine_grad(v, targets.v_text);
        for (std::size_t i = 0; i < out.grad.size(); ++i) out.grad[i] += targets.lambda * text[i];
    }
    return out;
}

} // namespace suffixlab
