// Copyright 2026 The suffixlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "suffixlab/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "suffixlab/objective.hpp"
#include "suffixlab/rng.hpp"

namespace suffixlab {

namespace {

constexpr double kInfeasible = -std::numeric_limits<double>::infinity();

std::size_t draw_index(SplitMix64& rng, std::size_t n) {
    return std::min(static_cast<std::size_t>(rng.next_unit() * static_cast<double>(n)), n - 1);
}

double text_cosine(const EncoderBackend& backend, std::span<const TokenId> prompt, std::span<const TokenId> suffix,
                   std::span<const double> target) {
    TokenIds ids(prompt.begin(), prompt.end());
    ids.insert(ids.end(), suffix.begin(), suffix.end());
    return cosine(backend.encode_ids(ids), target);
}

// Genome operations shared by both genetic modes. Genes are indices into an
// alphabet (charset positions or sorted allowed ids).
using Genome = std::vector<std::size_t>;

} // namespace

TokenIds random_suffix(std::size_t m, const FilteredVocabulary& filtered, std::uint64_t seed) {
    if (filtered.allowed_ids.empty()) throw std::invalid_argument("random_suffix: filtered vocabulary is empty");
    const auto allowed = filtered.allowed_sorted();
    TokenIds ids;
    ids.reserve(m);
    for (float x : seeded_uniform(seed, m)) ids.push_back(allowed[uniform_to_index(x, allowed.size())]);
    return ids;
}

std::string printable_charset() {
    std::string s;
    for (char c = 0x20; c < 0x7f; ++c) s += c;
    return s;
}

void GeneticConfig::validate() const {
    if (generations < 1) throw std::invalid_argument("genetic: generations must be >= 1");
    if (candidates_per_generation < 2) throw std::invalid_argument("genetic: candidates_per_generation must be >= 2");
    if (!(mutation_rate >= 0.0 && mutation_rate <= 1.0)) throw std::invalid_argument("genetic: mutation_rate in [0,1]");
    if (mode == GeneticMode::character && (suffix_char_len < 1 || charset.empty())) {
        throw std::invalid_argument("genetic: character mode needs suffix_char_len >= 1 and a charset");
    }
    if (mode == GeneticMode::token && suffix_tokens < 1) throw std::invalid_argument("genetic: suffix_tokens >= 1");
}

GeneticOutcome genetic_attack(const EncoderBackend& backend, std::span<const TokenId> original_prompt,
                              std::span<const double> target_text_vector, const GeneticConfig& config,
                              const FilteredVocabulary& filtered, const TextTokenizer* text_adapter) {
    config.validate();
    const bool char_mode = config.mode == GeneticMode::character;
    if (char_mode && text_adapter == nullptr) {
        throw std::invalid_argument("genetic: character mode requires a text adapter");
    }
    const auto allowed = filtered.allowed_sorted();
    if (allowed.empty()) throw std::invalid_argument("genetic: filtered vocabulary is empty");

    const std::size_t genome_len = char_mode ? config.suffix_char_len : config.suffix_tokens;
    const std::size_t alphabet = char_mode ? config.charset.size() : allowed.size();

    auto to_text = [&](const Genome& g) {
        std::string s;
        for (std::size_t x : g) s += config.charset[x];
        return s;
    };
    auto to_ids = [&](const Genome& g) -> std::optional<TokenIds> {
        if (!char_mode) {
            TokenIds ids;
            for (std::size_t x : g) ids.push_back(allowed[x]);
            return ids;
        }
        return text_adapter->tokenize(to_text(g));
    };
    auto fitness = [&](const Genome& g) {
        const auto ids = to_ids(g);
        if (!ids || (ids->empty() && original_prompt.empty())) return kInfeasible;
        if (original_prompt.size() + ids->size() > backend.max_prompt_len()) return kInfeasible;
        for (TokenId id : *ids) {
            if (!filtered.allows(id)) return kInfeasible;
        }
        return text_cosine(backend, original_prompt, *ids, target_text_vector);
    };

    SplitMix64 rng(config.seed);
    const std::size_t pop_size = config.candidates_per_generation;
    std::vector<Genome> population;
    population.reserve(pop_size);

    if (char_mode) {
        for (const auto& s : config.initial_strings) {
            if (population.size() == pop_size) break;
            if (s.size() != genome_len) throw std::invalid_argument("genetic: seeded string has wrong length");
            Genome g;
            for (char c : s) {
                const auto pos = config.charset.find(c);
                if (pos == std::string::npos) throw std::invalid_argument("genetic: seeded string uses a char outside charset");
                g.push_back(pos);
            }
            population.push_back(std::move(g));
        }
    } else {
        for (const auto& ids : config.initial_tokens) {
            if (population.size() == pop_size) break;
            if (ids.size() != genome_len) throw std::invalid_argument("genetic: seeded suffix has wrong length");
            Genome g;
            for (TokenId id : ids) {
                const auto it = std::lower_bound(allowed.begin(), allowed.end(), id);
                if (it == allowed.end() || *it != id) throw std::invalid_argument("genetic: seeded suffix uses a banned token");
                g.push_back(static_cast<std::size_t>(it - allowed.begin()));
            }
            population.push_back(std::move(g));
        }
    }
    while (population.size() < pop_size) {
        Genome g(genome_len);
        for (auto& x : g) x = draw_index(rng, alphabet);
        population.push_back(std::move(g));
    }

    std::vector<double> scores(pop_size);
    for (std::size_t i = 0; i < pop_size; ++i) scores[i] = fitness(population[i]);

    Genome best;
    double best_fitness = kInfeasible;
    GeneticOutcome out;
    auto update_best = [&] {
        for (std::size_t i = 0; i < pop_size; ++i) {
            if (best.empty() || scores[i] > best_fitness) {
                best_fitness = scores[i];
                best = population[i];
            }
        }
        out.best_trace.push_back(best_fitness);
    };
    update_best();

    auto tournament = [&]() -> std::size_t {
        const std::size_t a = draw_index(rng, pop_size);
        const std::size_t b = draw_index(rng, pop_size);
        if (scores[a] != scores[b]) return scores[a] > scores[b] ? a : b;
        return std::min(a, b);
    };

    for (std::size_t gen = 1; gen < config.generations; ++gen) {
        const auto elite = static_cast<std::size_t>(
            std::distance(scores.begin(), std::max_element(scores.begin(), scores.end())));
        std::vector<Genome> next{population[elite]};
        std::vector<double> next_scores{scores[elite]};
        while (next.size() < pop_size) {
            const Genome& p1 = population[tournament()];
            const Genome& p2 = population[tournament()];
            Genome child = p1;
            if (genome_len > 1) {
                const std::size_t cut = 1 + draw_index(rng, genome_len - 1);
                std::copy(p2.begin() + static_cast<std::ptrdiff_t>(cut), p2.end(),
                          child.begin() + static_cast<std::ptrdiff_t>(cut));
            }
            for (auto& gene : child) {
                if (rng.next_unit() < config.mutation_rate) gene = draw_index(rng, alphabet);
            }
            next_scores.push_back(fitness(child));
            next.push_back(std::move(child));
        }
        population = std::move(next);
        scores = std::move(next_scores);
        update_best();
    }

    out.best_fitness = best_fitness;
    if (char_mode) {
        out.suffix_text = to_text(best);
        if (auto ids = to_ids(best)) out.suffix_ids = *ids;
    } else {
        out.suffix_ids = *to_ids(best);
        out.suffix_text = WhitespaceTokenizer(backend.codebook().vocab()).detokenize(out.suffix_ids);
    }
    return out;
}

void GcgConfig::validate() const {
    if (steps < 1) throw std::invalid_argument("gcg: steps must be >= 1");
    if (candidates_per_step < 1) throw std::invalid_argument("gcg: candidates_per_step must be >= 1");
    if (top_k_coordinates < 1) throw std::invalid_argument("gcg: top_k_coordinates must be >= 1");
    if (suffix_tokens < 1) throw std::invalid_argument("gcg: suffix_tokens must be >= 1");
}

GcgOutcome gcg_attack(const EncoderBackend& backend, std::span<const TokenId> original_prompt,
                      std::span<const double> target_text_vector, const GcgConfig& config,
                      const FilteredVocabulary& filtered) {
    const auto& codebook = backend.codebook();
    config.validate();
    const auto allowed = filtered.allowed_sorted();
    if (allowed.empty()) throw std::invalid_argument("gcg: filtered vocabulary is empty");

    const std::size_t m = config.suffix_tokens;
    if (original_prompt.size() + m > backend.max_prompt_len()) {
        throw std::length_error("gcg: prompt plus suffix exceeds max_prompt_len " +
                                std::to_string(backend.max_prompt_len()));
    }

    // Candidate sampling uses its own stream so an explicit start and the
    // default random start share the same later draws.
    SplitMix64 rng(config.seed ^ 0x9e3779b97f4a7c15ull);
    TokenIds suffix;
    if (config.initial_suffix) {
        suffix = *config.initial_suffix;
        if (suffix.size() != m) throw std::invalid_argument("gcg: initial suffix length != suffix_tokens");
        for (TokenId id : suffix) {
            if (!filtered.allows(id)) throw std::invalid_argument("gcg: initial suffix uses a banned token");
        }
    } else {
        suffix = random_suffix(m, filtered, config.seed);
    }

    const std::size_t n = original_prompt.size();
    TokenIds full(original_prompt.begin(), original_prompt.end());
    full.insert(full.end(), suffix.begin(), suffix.end());

    auto loss_of = [&](const TokenIds& ids) { return -cosine(backend.encode_ids(ids), target_text_vector); };

    GcgOutcome out;
    double current = loss_of(full);

    struct Swap {
        std::size_t pos;
        TokenId token;
    };

    for (std::size_t step = 0; step < config.steps; ++step) {
        auto enc = backend.encode_text(backend.embed_tokens(full));
        const Matrix grad = enc.vjp(neg_cosine_grad(enc.v, target_text_vector));

        std::vector<Swap> pool;
        for (std::size_t i = 0; i < m; ++i) {
            const auto g = grad.row(n + i);
            const auto cur_row = codebook.row(full[n + i]);
            std::vector<std::pair<double, TokenId>> ranked;
            for (TokenId id : allowed) {
                if (id == full[n + i]) continue;
                const auto row = codebook.row(id);
                double delta = 0.0;
                for (std::size_t c = 0; c < row.size(); ++c) delta += g[c] * (row[c] - cur_row[c]);
                ranked.emplace_back(delta, id);
            }
            const std::size_t keep = std::min(config.top_k_coordinates, ranked.size());
            std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(keep), ranked.end());
            for (std::size_t k = 0; k < keep; ++k) pool.push_back({i, ranked[k].second});
        }

        const bool exhaustive = config.candidates_per_step >= pool.size();
        if (!exhaustive) {
            // sample without replacement (partial Fisher-Yates)
            for (std::size_t k = 0; k < config.candidates_per_step; ++k) {
                std::swap(pool[k], pool[k + draw_index(rng, pool.size() - k)]);
            }
            pool.resize(config.candidates_per_step);
        }

        double best_loss = current;
        std::optional<Swap> best_swap;
        for (const auto& swap : pool) {
            TokenIds cand = full;
            cand[n + swap.pos] = swap.token;
            const double l = loss_of(cand);
            if (l < best_loss) {
                best_loss = l;
                best_swap = swap;
            }
        }
        if (best_swap) {
            full[n + best_swap->pos] = best_swap->token;
            current = best_loss;
        }
        out.loss_trace.push_back(current);
        out.steps_run = step + 1;
        // Every neighbour was scored and none improved: later steps are identical.
        if (!best_swap && exhaustive && config.top_k_coordinates >= allowed.size()) break;
    }

    out.suffix.assign(full.begin() + static_cast<std::ptrdiff_t>(n), full.end());
    out.best_loss = current;
    return out;
}

} // namespace suffixlab
