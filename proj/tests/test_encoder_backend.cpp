// Copyright 2026 The suffixlab Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <bit>
#include <cmath>
#include <cstdlib>
#include <fstream>

#include "suffixlab/conformance.hpp"
#include "suffixlab/reference_backend.hpp"
#include "suffixlab/rng.hpp"
#include "suffixlab/tokenizer.hpp"

using namespace suffixlab;

namespace {

Matrix random_matrix(SplitMix64& rng, std::size_t rows, std::size_t cols) {
    Matrix m(rows, cols);
    for (auto& x : m.data()) x = rng.next_signed_float();
    return m;
}

// Central differences of g·F(P) with respect to every entry of P.
Matrix finite_difference_gradient(const EncoderBackend& backend, const Matrix& p, std::span<const double> g,
                                  double step) {
    Matrix out(p.rows(), p.cols());
    for (std::size_t k = 0; k < p.data().size(); ++k) {
        Matrix plus = p, minus = p;
        plus.data()[k] += step;
        minus.data()[k] -= step;
        out.data()[k] = (dot(g, backend.encode_text(plus).v) - dot(g, backend.encode_text(minus).v)) / (2 * step);
    }
    return out;
}

double relative_error(const Matrix& a, const Matrix& b) {
    double diff = 0.0, scale = 0.0;
    for (std::size_t k = 0; k < a.data().size(); ++k) {
        diff = std::max(diff, std::abs(a.data()[k] - b.data()[k]));
        scale = std::max(scale, std::abs(b.data()[k]));
    }
    return diff / std::max(scale, 1e-12);
}

} // namespace

TEST_CASE("seeded_uniform: empty, first value, determinism") {
    CHECK(seeded_uniform(1, 0).empty());
    // Bit pattern frozen from tests/oracles/reference_oracle.py.
    const float first = seeded_uniform(1, 1)[0];
    CHECK(std::bit_cast<std::uint32_t>(first) == 0x3e08516fu);
    CHECK(seeded_uniform(42, 100) == seeded_uniform(42, 100));
    CHECK(seeded_uniform(42, 5) != seeded_uniform(43, 5));
    for (float x : seeded_uniform(9, 10000)) {
        CHECK(x >= -1.0f);
        CHECK(x <= 1.0f);
    }
}

TEST_CASE("uniform_to_index stays in range") {
    CHECK(uniform_to_index(-1.0f, 10) == 0);
    CHECK(uniform_to_index(1.0f, 10) == 9);
    CHECK(uniform_to_index(0.0f, 10) == 5);
}

TEST_CASE("reference backend shape and template") {
    const ReferenceBackend backend;
    CHECK(backend.d_token() == 8);
    CHECK(backend.d_emb() == 16);
    CHECK(backend.max_prompt_len() == 32);
    CHECK(backend.codebook().size() == 64);
    CHECK(backend.codebook().vocab()[0].surface == "tok00");
    CHECK(backend.eos_token() == TokenId{0});
    CHECK(backend.target_template(5) == TokenIds{1, 2, 3, 5});
    CHECK_THROWS_AS(backend.target_template(64), std::invalid_argument);
}

TEST_CASE("embed_tokens returns codebook rows") {
    const ReferenceBackend backend;
    const TokenIds ids{4, 4, 60};
    const Matrix e = backend.embed_tokens(ids);
    REQUIRE(e.rows() == 3);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        for (std::size_t c = 0; c < 8; ++c) CHECK(e(i, c) == backend.codebook().psi()(ids[i], c));
    }
    CHECK_THROWS_AS(backend.embed_tokens(TokenIds{64}), std::out_of_range);
}

TEST_CASE("encode_text: zero input, vjp of zero, errors") {
    const ReferenceBackend backend;
    const auto r = backend.encode_text(Matrix(3, 8));
    REQUIRE(r.v.size() == 16);
    for (double x : r.v) CHECK(x == 0.0);

    SplitMix64 rng(5);
    const auto r2 = backend.encode_text(random_matrix(rng, 4, 8));
    const Matrix z = r2.vjp(Vector(16, 0.0));
    for (double x : z.data()) CHECK(x == 0.0);

    CHECK_THROWS_WITH_AS(backend.encode_text(Matrix(33, 8)), doctest::Contains("max_prompt_len"), std::length_error);
    CHECK_THROWS_AS(backend.encode_text(Matrix(2, 7)), std::invalid_argument);
    CHECK_THROWS_AS(backend.encode_text(Matrix(0, 8)), std::invalid_argument);
}

TEST_CASE("encode_text: deterministic and bounded") {
    const ReferenceBackend backend;
    SplitMix64 rng(6);
    for (int i = 0; i < 50; ++i) {
        const Matrix p = random_matrix(rng, 1 + i % 10, 8);
        const auto a = backend.encode_text(p).v;
        CHECK(a == backend.encode_text(p).v);
        CHECK(norm(a) <= std::sqrt(16.0));
    }
}

TEST_CASE("encode_text: vjp is linear and matches central finite differences") {
    const ReferenceBackend backend;
    SplitMix64 rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        const Matrix p = random_matrix(rng, 1 + trial % 12, 8);
        Vector g(16), h(16);
        for (auto& x : g) x = rng.next_signed_float();
        for (auto& x : h) x = rng.next_signed_float();
        const auto r = backend.encode_text(p);
        const Matrix analytic = r.vjp(g);
        CHECK(relative_error(analytic, finite_difference_gradient(backend, p, g, 1e-4)) <= 1e-4);

        Vector combo(16);
        for (std::size_t i = 0; i < 16; ++i) combo[i] = 2.0 * g[i] - 3.0 * h[i];
        const Matrix lhs = r.vjp(combo), vg = r.vjp(g), vh = r.vjp(h);
        for (std::size_t k = 0; k < lhs.data().size(); ++k) {
            CHECK(lhs.data()[k] == doctest::Approx(2.0 * vg.data()[k] - 3.0 * vh.data()[k]).epsilon(1e-12));
        }
    }
}

TEST_CASE("encode_image: identity and malformed handles") {
    const ReferenceBackend backend;
    ImageHandle img{"x", {}, Vector(16, 0.25)};
    CHECK(backend.encode_image(img) == Vector(16, 0.25));
    CHECK(backend.encode_image(img) == backend.encode_image(img));
    CHECK_THROWS_AS(backend.encode_image(ImageHandle{"no-vector", "a.png", std::nullopt}), std::invalid_argument);
    CHECK_THROWS_AS(backend.encode_image(ImageHandle{"short", {}, Vector(3, 1.0)}), std::invalid_argument);
    CHECK_THROWS_AS(backend.encode_image(ImageHandle{"nan", {}, Vector(16, std::nan(""))}), std::invalid_argument);
}

TEST_CASE("custom codebook must match the weight width") {
    Vocabulary vocab({{"a", true}, {"b", true}});
    CHECK_THROWS_AS(ReferenceBackend(Codebook(Matrix(2, 4, 1.0), vocab)), std::invalid_argument);
    const ReferenceBackend ok(Codebook(Matrix(2, 8, 1.0), vocab));
    CHECK(ok.eos_token() == TokenId{0});
    CHECK_THROWS_WITH(ok.target_template(1), doctest::Contains("missing token id"));
}

TEST_CASE("template_from_vocabulary lists missing words") {
    Vocabulary vocab({{"a</w>", true}, {"of</w>", true}, {"dog</w>", true}});
    CHECK_THROWS_WITH(template_from_vocabulary(vocab, 2), doctest::Contains("photo"));
    Vocabulary full({{"a</w>", true}, {"photo</w>", true}, {"of</w>", true}, {"dog</w>", true}});
    CHECK(template_from_vocabulary(full, 3) == TokenIds{0, 1, 2, 3});
}

TEST_CASE("whitespace tokenizer and id parsing") {
    const auto vocab = ReferenceBackend::generate_vocabulary();
    const WhitespaceTokenizer tok(vocab);
    CHECK(tok.tokenize("tok01  tok63") == TokenIds{1, 63});
    CHECK_FALSE(tok.tokenize("tok01 dog").has_value());
    CHECK(tok.detokenize(TokenIds{2, 3}) == "tok02 tok03");
    CHECK(parse_token_ids("3, 17,42") == TokenIds{3, 17, 42});
    CHECK(parse_token_ids("").empty());
    CHECK_THROWS_AS(parse_token_ids("3,,4"), std::invalid_argument);
    CHECK_THROWS_AS(parse_token_ids("x"), std::invalid_argument);
}

TEST_CASE("adapter conformance golden file") {
    const ReferenceBackend backend;
    const std::string path = std::string(SUFFIXLAB_TEST_DATA) + "/reference_conformance.json";

    ConformanceInputs inputs;
    inputs.prompts = {{1, 2, 3, 5}, {0}, {10, 20, 30, 40, 50, 60}};
    SplitMix64 rng(2024);
    Vector sample(16);
    for (auto& x : sample) x = rng.next_signed_float();
    inputs.images = {{"sample-0", {}, sample}};

    if (std::getenv("SUFFIXLAB_REGEN_GOLDEN") != nullptr) {
        std::ofstream(path) << make_conformance(backend, inputs).dump(2) << "\n";
    }
    std::ifstream in(path);
    REQUIRE_MESSAGE(in.good(), "golden conformance file missing; run with SUFFIXLAB_REGEN_GOLDEN=1");
    const auto doc = nlohmann::json::parse(in);
    CHECK(doc["special_token_policy"].get<std::string>().find("none") != std::string::npos);
    CHECK(doc.contains("truncation_policy"));
    const auto check = check_conformance(backend, doc);
    CHECK_MESSAGE(check.ok, (check.failures.empty() ? "" : check.failures.front()));

    auto tampered = doc;
    tampered["image_golden"][0]["embedding"][0] = -5.0;
    CHECK_FALSE(check_conformance(backend, tampered).ok);
}
