// Copyright 2026 The suffixlab Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>

#include "suffixlab/ablation.hpp"
#include "suffixlab/rng.hpp"

using namespace suffixlab;

namespace {

const ReferenceBackend& backend() {
    static const ReferenceBackend b;
    return b;
}

Matrix random_z(SplitMix64& rng, std::size_t m, double scale) {
    Matrix z(m, 8);
    for (auto& x : z.data()) x = scale * rng.next_signed_float();
    return z;
}

AttackConfig quick(std::size_t m, std::size_t iterations, InitMethod init = InitMethod::synonym) {
    AttackConfig c;
    c.m = m;
    c.iterations = iterations;
    c.init = init;
    return c;
}

} // namespace

TEST_CASE("config defaults") {
    const AttackConfig c;
    CHECK(c.m == 4);
    CHECK(c.lambda == 0.1);
    CHECK(c.learning_rate == 0.001);
    CHECK(c.iterations == 10000);
    CHECK(c.init == InitMethod::synonym);
    CHECK(c.adam.beta1 == 0.9);
    CHECK(c.adam.beta2 == 0.999);
    CHECK(c.adam.epsilon == 1e-8);
}

TEST_CASE("init method names round trip") {
    for (auto m : {InitMethod::eos, InitMethod::random, InitMethod::synonym}) CHECK(parse_init_method(to_string(m)) == m);
    CHECK_THROWS_AS(parse_init_method("zeros"), std::invalid_argument);
}

TEST_CASE("projection: codebook rows are fixed points") {
    const auto& cb = backend().codebook();
    const auto inst = make_desk_instance(backend(), 3);
    const auto allowed = inst.filtered.allowed_sorted();
    Matrix z(allowed.size(), 8);
    for (std::size_t i = 0; i < allowed.size(); ++i) {
        const auto r = cb.row(allowed[i]);
        std::copy(r.begin(), r.end(), z.row(i).begin());
    }
    const auto p = project(z, cb, allowed);
    CHECK(p.ids == allowed);
    CHECK(p.projected == z);
    // idempotent on arbitrary input
    SplitMix64 rng(1);
    const Matrix r = random_z(rng, 6, 2.0);
    const auto once = project(r, cb, allowed);
    CHECK(project(once.projected, cb, allowed).ids == once.ids);
    CHECK_THROWS_AS(project(r, cb, TokenIds{}), std::invalid_argument);
}

TEST_CASE("projection: every row lands in the allowed set at minimum distance") {
    const auto& cb = backend().codebook();
    const auto inst = make_desk_instance(backend(), 4);
    const auto allowed = inst.filtered.allowed_sorted();
    SplitMix64 rng(2);
    for (int trial = 0; trial < 100; ++trial) {
        const Matrix z = random_z(rng, 3, 1.5);
        const auto p = project(z, cb, allowed);
        for (std::size_t i = 0; i < z.rows(); ++i) {
            CHECK(inst.filtered.allows(p.ids[i]));
            const double d = squared_distance(z.row(i), cb.row(p.ids[i]));
            for (TokenId id : allowed) CHECK(d <= squared_distance(z.row(i), cb.row(id)));
        }
    }
}

TEST_CASE("projection: ties break toward the lower id") {
    Vocabulary vocab({{"a", true}, {"b", true}, {"c", true}});
    const Codebook cb(Matrix(3, 2, {1, 0, -1, 0, 0, 5}), vocab);
    const auto p = project(Matrix(1, 2, {0, 0}), cb, TokenIds{0, 1, 2});
    CHECK(p.ids == TokenIds{0});
    CHECK(project(Matrix(1, 2, {0, 0}), cb, TokenIds{1, 2}).ids == TokenIds{1});
}

TEST_CASE("initialization methods") {
    const auto inst = make_desk_instance(backend(), 5);
    const auto& cb = backend().codebook();
    const auto& f = inst.filtered;

    const Matrix eos = initialize(InitMethod::eos, 3, cb, f, inst.target, 0, backend().eos_token());
    for (std::size_t i = 0; i < 3; ++i) CHECK(std::equal(eos.row(i).begin(), eos.row(i).end(), cb.row(0).begin()));
    CHECK_THROWS_AS(initialize(InitMethod::eos, 3, cb, f, inst.target, 0, std::nullopt), std::invalid_argument);

    // synonym: the allowed token most similar to the target
    const Matrix syn = initialize(InitMethod::synonym, 2, cb, f, inst.target, 0, std::nullopt);
    TokenId best = 0;
    double best_cos = -2;
    for (TokenId id : f.allowed_sorted()) {
        const double c = cosine(cb.row(inst.target), cb.row(id));
        if (c > best_cos) best_cos = c, best = id;
    }
    CHECK(project(syn, cb, f.allowed_sorted()).ids == TokenIds{best, best});

    // random: deterministic per seed, allowed only, oracle index formula
    const Matrix r1 = initialize(InitMethod::random, 4, cb, f, inst.target, 17, std::nullopt);
    CHECK(r1 == initialize(InitMethod::random, 4, cb, f, inst.target, 17, std::nullopt));
    const auto allowed = f.allowed_sorted();
    const auto draws = seeded_uniform(17, 4);
    const auto ids = project(r1, cb, allowed).ids;
    for (std::size_t i = 0; i < 4; ++i) {
        const auto k = static_cast<std::size_t>(std::floor((draws[i] + 1.0) / 2.0 * allowed.size()));
        CHECK(ids[i] == allowed[std::min(k, allowed.size() - 1)]);
        CHECK(f.allows(ids[i]));
    }
    CHECK_THROWS_AS(initialize(InitMethod::random, 0, cb, f, inst.target, 0, std::nullopt), std::invalid_argument);
    CHECK_THROWS_AS(initialize(InitMethod::random, 2, cb, FilteredVocabulary{}, inst.target, 0, std::nullopt),
                    std::invalid_argument);
}

TEST_CASE("straight-through gradient equals the encoder gradient at the projected point") {
    const auto inst = make_desk_instance(backend(), 6);
    const auto allowed = inst.filtered.allowed_sorted();
    const Matrix prompt_rows = backend().embed_tokens(inst.prompt);
    SplitMix64 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix z = random_z(rng, 3, 1.0);
        const auto eval = evaluate_ste(backend(), prompt_rows, z, inst.targets, allowed);
        const auto p = project(z, backend().codebook(), allowed);
        CHECK(eval.ids == p.ids);
        CHECK(eval.loss == doctest::Approx(suffix_loss(backend(), inst.prompt, p.ids, inst.targets)).epsilon(1e-12));

        // finite differences of the loss with the suffix rows held at Proj(Z)
        const Matrix base = vstack(prompt_rows, p.projected);
        for (std::size_t i = 0; i < z.rows(); ++i) {
            for (std::size_t c = 0; c < 8; ++c) {
                Matrix plus = base, minus = base;
                plus(prompt_rows.rows() + i, c) += 1e-6;
                minus(prompt_rows.rows() + i, c) -= 1e-6;
                const double fd = (mmp_loss(backend().encode_text(plus).v, inst.targets) -
                                   mmp_loss(backend().encode_text(minus).v, inst.targets)) /
                                  2e-6;
                CHECK(eval.grad_z(i, c) == doctest::Approx(fd).epsilon(1e-5).scale(1e-3));
            }
        }
    }
}

TEST_CASE("zero iterations evaluates the initialization once") {
    const auto inst = make_desk_instance(backend(), 7);
    const auto out = optimize(backend(), inst.prompt, inst.targets, quick(3, 0), inst.filtered);
    REQUIRE(out.state.loss_trace.size() == 1);
    const Matrix z0 = initialize(InitMethod::synonym, 3, backend().codebook(), inst.filtered, inst.target, 0,
                                 backend().eos_token());
    CHECK(out.state.best_z == z0);
    CHECK(out.suffix == project(z0, backend().codebook(), inst.filtered.allowed_sorted()).ids);
    CHECK(out.state.best_loss == doctest::Approx(suffix_loss(backend(), inst.prompt, out.suffix, inst.targets)));
}

TEST_CASE("best loss is the running minimum and matches the returned suffix") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto inst = make_desk_instance(backend(), seed);
        auto cfg = quick(2, 300, InitMethod::random);
        cfg.learning_rate = 0.05;
        cfg.seed = seed;
        const auto out = optimize(backend(), inst.prompt, inst.targets, cfg, inst.filtered);
        const auto& s = out.state;
        REQUIRE(s.loss_trace.size() == 300);
        CHECK(s.iteration == 300);
        double running = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < s.loss_trace.size(); ++i) {
            running = std::min(running, s.loss_trace[i]);
            CHECK(s.best_trace[i] == running);
            if (i > 0) CHECK(s.best_trace[i] <= s.best_trace[i - 1]);
        }
        CHECK(s.best_loss == running);
        CHECK(suffix_loss(backend(), inst.prompt, out.suffix, inst.targets) == doctest::Approx(s.best_loss));
        for (TokenId id : out.suffix) CHECK(inst.filtered.allows(id));
        for (TokenId id : out.suffix) CHECK(id != inst.target);
    }
}

TEST_CASE("runs are deterministic") {
    const auto inst = make_desk_instance(backend(), 8);
    auto cfg = quick(3, 200, InitMethod::random);
    cfg.seed = 99;
    const auto a = optimize(backend(), inst.prompt, inst.targets, cfg, inst.filtered);
    const auto b = optimize(backend(), inst.prompt, inst.targets, cfg, inst.filtered);
    CHECK(a.suffix == b.suffix);
    CHECK(a.state.loss_trace == b.state.loss_trace);
    CHECK(a.state.z == b.state.z);
}

TEST_CASE("length and input validation") {
    const auto inst = make_desk_instance(backend(), 9);
    TokenIds long_prompt(30, 7);
    CHECK_THROWS_WITH_AS(optimize(backend(), long_prompt, inst.targets, quick(4, 10), inst.filtered),
                         doctest::Contains("max_prompt_len"), std::length_error);
    CHECK_NOTHROW(optimize(backend(), TokenIds(28, 7), inst.targets, quick(4, 1), inst.filtered));
    auto bad = quick(4, 10);
    bad.learning_rate = 0.0;
    CHECK_THROWS_AS(optimize(backend(), inst.prompt, inst.targets, bad, inst.filtered), std::invalid_argument);
    CHECK_THROWS_AS(optimize_from(backend(), inst.prompt, inst.targets, quick(4, 10), inst.filtered, Matrix(3, 8)),
                    std::invalid_argument);
}

TEST_CASE("single-token suffix never beats exhaustive enumeration") {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        const auto inst = make_desk_instance(backend(), seed);
        double best = std::numeric_limits<double>::infinity();
        for (TokenId id : inst.filtered.allowed_sorted()) {
            best = std::min(best, suffix_loss(backend(), inst.prompt, TokenIds{id}, inst.targets));
        }
        auto cfg = quick(1, 500, InitMethod::random);
        cfg.seed = seed;
        const auto out = optimize(backend(), inst.prompt, inst.targets, cfg, inst.filtered);
        CHECK(out.state.best_loss >= best - 1e-12);
    }
}
