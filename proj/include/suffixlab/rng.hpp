// Copyright 2026 The suffixlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace suffixlab {

// splitmix64 stream. Every seeded choice in the library goes through this
// generator so runs replay identically in any language that implements it.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64();

    // Uniform in [-1, 1), rounded to float precision.
    float next_signed_float();

    // Uniform in [0, 1) at full 53-bit resolution.
    double next_unit();

    // floor((x + 1) / 2 * n) for the next signed float x, clamped to n - 1.
    std::size_t next_index(std::size_t n);

private:
    std::uint64_t state_;
};

std::vector<float> seeded_uniform(std::uint64_t seed, std::size_t count);

// Maps a value from seeded_uniform onto [0, n).
std::size_t uniform_to_index(float x, std::size_t n);

} // namespace suffixlab
