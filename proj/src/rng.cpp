// Copyright 2026 The suffixlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "suffixlab/rng.hpp"

#include <algorithm>
#include <cmath>

namespace suffixlab {

std::uint64_t SplitMix64::next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

float SplitMix64::next_signed_float() {
    const double unit = static_cast<double>(next_u64() >> 11) / 9007199254740992.0; // 2^53
    return static_cast<float>(unit * 2.0 - 1.0);
}

double SplitMix64::next_unit() { return static_cast<double>(next_u64() >> 11) / 9007199254740992.0; }

std::size_t SplitMix64::next_index(std::size_t n) { return uniform_to_index(next_signed_float(), n); }

std::vector<float> seeded_uniform(std::uint64_t seed, std::size_t count) {
    SplitMix64 gen(seed);
    std::vector<float> out(count);
    for (auto& x : out) x = gen.next_signed_float();
    return out;
}

std::size_t uniform_to_index(float x, std::size_t n) {
    // float rounding can push x up to exactly 1.0f
    const double scaled = std::floor((static_cast<double>(x) + 1.0) / 2.0 * static_cast<double>(n));
    return std::min(static_cast<std::size_t>(std::max(scaled, 0.0)), n - 1);
}

} // namespace suffixlab
