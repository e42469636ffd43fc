// Copyright 2026 The suffixlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "suffixlab/ste_optimizer.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "suffixlab/rng.hpp"

namespace suffixlab {

std::string to_string(InitMethod method) {
    switch (method) {
    case InitMethod::eos: return "eos";
    case InitMethod::random: return "random";
    case InitMethod::synonym: return "synonym";
    }
    return "?";
}

InitMethod parse_init_method(std::string_view name) {
    if (name == "eos") return InitMethod::eos;
    if (name == "random") return InitMethod::random;
    if (name == "synonym") return InitMethod::synonym;
    throw std::invalid_argument("unknown init method '" + std::string(name) + "' (expected eos|random|synonym)");
}

void AttackConfig::validate() const {
    if (m < 1) throw std::invalid_argument("m must be >= 1");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
    if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be >= 0");
    if (trace_every < 1) throw std::invalid_argument("trace_every must be >= 1");
    if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0 && adam.beta2 >= 0.0 && adam.beta2 < 1.0 && adam.epsilon > 0.0)) {
        throw std::invalid_argument("invalid Adam hyperparameters");
    }
}

Projection project(const Matrix& z, const Codebook& codebook, std::span<const TokenId> allowed_sorted) {
    if (allowed_sorted.empty()) throw std::invalid_argument("project: allowed set is empty");
    Projection out{Matrix(z.rows(), z.cols()), {}};
    out.ids.reserve(z.rows());
    for (std::size_t i = 0; i < z.rows(); ++i) {
        const TokenId id = nearest_token(codebook, z.row(i), allowed_sorted);
        const auto src = codebook.row(id);
        std::copy(src.begin(), src.end(), out.projected.row(i).begin());
        out.ids.push_back(id);
    }
    return out;
}

Matrix initialize(InitMethod method, std::size_t m, const Codebook& codebook, const FilteredVocabulary& filtered,
                  TokenId target, std::uint64_t seed, std::optional<TokenId> eos_token) {
    if (filtered.allowed_ids.empty()) throw std::invalid_argument("initialize: filtered vocabulary is empty");
    if (m < 1) throw std::invalid_argument("initialize: m must be >= 1");

    TokenIds ids;
    switch (method) {
    case InitMethod::eos:
        if (!eos_token) throw std::invalid_argument("initialize: backend has no end-of-string token");
        ids.assign(m, *eos_token);
        break;
    case InitMethod::random: {
        const auto allowed = filtered.allowed_sorted();
        for (float x : seeded_uniform(seed, m)) ids.push_back(allowed[uniform_to_index(x, allowed.size())]);
        break;
    }
    case InitMethod::synonym: {
        const auto target_row = codebook.row(target);
        TokenId best = 0;
        double best_score = -std::numeric_limits<double>::infinity();
        for (TokenId id : filtered.allowed_ids) { // ascending, so ties keep the lower id
            const double s = cosine(target_row, codebook.row(id));
            if (s > best_score) {
                best_score = s;
                best = id;
            }
        }
        ids.assign(m, best);
        break;
    }
    }

    Matrix z(m, codebook.d_token());
    for (std::size_t i = 0; i < m; ++i) {
        const auto src = codebook.row(ids[i]);
        std::copy(src.begin(), src.end(), z.row(i).begin());
    }
    return z;
}

SteEvaluation evaluate_ste(const EncoderBackend& backend, const Matrix& prompt_rows, const Matrix& z,
                           const TargetVectors& targets, std::span<const TokenId> allowed_sorted) {
    auto proj = project(z, backend.codebook(), allowed_sorted);
    const Matrix full = vstack(prompt_rows, proj.projected);
    auto enc = backend.encode_text(full);
    const auto lg = mmp_loss_and_grad(enc.v, targets);
    const Matrix grad_full = enc.vjp(lg.grad);

    SteEvaluation out;
    out.loss = lg.loss;
    out.ids = std::move(proj.ids);
    out.v = std::move(enc.v);
    out.grad_z = Matrix(z.rows(), z.cols());
    // straight-through: d(Proj(Z))/dZ = I
    for (std::size_t i = 0; i < z.rows(); ++i) {
        const auto src = grad_full.row(prompt_rows.rows() + i);
        std::copy(src.begin(), src.end(), out.grad_z.row(i).begin());
    }
    return out;
}

double suffix_loss(const EncoderBackend& backend, std::span<const TokenId> prompt, std::span<const TokenId> suffix,
                   const TargetVectors& targets) {
    TokenIds ids(prompt.begin(), prompt.end());
    ids.insert(ids.end(), suffix.begin(), suffix.end());
    return mmp_loss(backend.encode_ids(ids), targets);
}

AttackOutcome optimize(const EncoderBackend& backend, std::span<const TokenId> original_prompt,
                       const TargetVectors& targets, const AttackConfig& config, const FilteredVocabulary& filtered) {
    config.validate();
    Matrix z0 = initialize(config.init, config.m, backend.codebook(), filtered, targets.target, config.seed,
                           backend.eos_token());
    return optimize_from(backend, original_prompt, targets, config, filtered, std::move(z0));
}

AttackOutcome optimize_from(const EncoderBackend& backend, std::span<const TokenId> original_prompt,
                            const TargetVectors& targets, const AttackConfig& config,
                            const FilteredVocabulary& filtered, Matrix z0) {
    config.validate();
    targets.validate(backend.d_emb());
    if (z0.rows() != config.m || z0.cols() != backend.d_token()) {
        throw std::invalid_argument("optimize: initial Z must be m x d_token");
    }
    if (original_prompt.size() + config.m > backend.max_prompt_len()) {
        throw std::length_error("optimize: prompt of " + std::to_string(original_prompt.size()) + " tokens plus " +
                                std::to_string(config.m) + " suffix tokens exceeds max_prompt_len " +
                                std::to_string(backend.max_prompt_len()));
    }
    const auto allowed = filtered.allowed_sorted();
    if (allowed.empty()) throw std::invalid_argument("optimize: filtered vocabulary is empty");

    const Matrix prompt_rows = backend.embed_tokens(original_prompt);
    SuffixState state;
    state.z = std::move(z0);
    state.best_z = state.z;
    state.best_loss = std::numeric_limits<double>::infinity();

    auto record = [&state](double loss) {
        state.loss_trace.push_back(loss);
        state.best_trace.push_back(state.best_loss);
    };
    auto check_finite = [](double loss, std::size_t iteration) {
        if (!std::isfinite(loss)) {
            throw std::runtime_error("optimize: non-finite loss at iteration " + std::to_string(iteration));
        }
    };

    if (config.iterations == 0) {
        const auto eval = evaluate_ste(backend, prompt_rows, state.z, targets, allowed);
        check_finite(eval.loss, 0);
        state.best_loss = eval.loss;
        record(eval.loss);
    }

    const auto& adam = config.adam;
    Matrix first(state.z.rows(), state.z.cols());
    Matrix second(state.z.rows(), state.z.cols());
    double beta1_pow = 1.0;
    double beta2_pow = 1.0;

    for (std::size_t it = 1; it <= config.iterations; ++it) {
        const auto eval = evaluate_ste(backend, prompt_rows, state.z, targets, allowed);
        check_finite(eval.loss, it);
        if (state.best_loss > eval.loss) {
            state.best_loss = eval.loss;
            state.best_z = state.z;
        }
        record(eval.loss);
        state.iteration = it;

        beta1_pow *= adam.beta1;
        beta2_pow *= adam.beta2;
        auto& zd = state.z.data();
        const auto& gd = eval.grad_z.data();
        for (std::size_t k = 0; k < zd.size(); ++k) {
            first.data()[k] = adam.beta1 * first.data()[k] + (1.0 - adam.beta1) * gd[k];
            second.data()[k] = adam.beta2 * second.data()[k] + (1.0 - adam.beta2) * gd[k] * gd[k];
            const double m_hat = first.data()[k] / (1.0 - beta1_pow);
            const double v_hat = second.data()[k] / (1.0 - beta2_pow);
            zd[k] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + adam.epsilon);
        }
    }

    AttackOutcome out;
    out.suffix = project(state.best_z, backend.codebook(), allowed).ids;
    out.state = std::move(state);
    return out;
}

} // namespace suffixlab
