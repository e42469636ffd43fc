// Copyright 2026 The suffixlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "suffixlab/ablation.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include "suffixlab/feature_analysis.hpp"
#include "suffixlab/rng.hpp"

namespace suffixlab {

DeskInstance make_desk_instance(const ReferenceBackend& backend, std::uint64_t seed, double lambda,
                                std::size_t top_k) {
    const std::size_t vocab = backend.codebook().size();
    DeskInstance inst;
    inst.seed = seed;

    const auto draws = seeded_uniform(1000 + seed, 5);
    inst.target = uniform_to_index(draws[0], vocab);
    for (std::size_t i = 1; i < draws.size(); ++i) inst.prompt.push_back(uniform_to_index(draws[i], vocab));

    inst.reference_caption.push_back(inst.target);
    for (float x : seeded_uniform(2000 + seed, 3)) inst.reference_caption.push_back(uniform_to_index(x, vocab));
    inst.reference_image.id = "desk-reference/" + std::to_string(seed);
    inst.reference_image.embedding = backend.encode_ids(inst.reference_caption);

    inst.filtered = filter_vocabulary(backend.codebook(), inst.target, top_k);
    inst.targets = build_targets(backend, inst.target, inst.reference_image, lambda);
    return inst;
}

std::vector<RunSummary> run_desk_batch(const ReferenceBackend& backend, const AttackConfig& config,
                                       std::uint64_t base_seed, std::size_t runs, std::size_t jobs) {
    std::vector<RunSummary> out(runs);
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;

    auto worker = [&] {
        for (std::size_t i = next++; i < runs; i = next++) {
            try {
                const std::uint64_t seed = base_seed + i;
                const auto inst = make_desk_instance(backend, seed, config.lambda);
                AttackConfig cfg = config;
                cfg.seed = seed;
                const auto outcome = optimize(backend, inst.prompt, inst.targets, cfg, inst.filtered);

                TokenIds full = inst.prompt;
                full.insert(full.end(), outcome.suffix.begin(), outcome.suffix.end());
                const auto v = backend.encode_ids(full);
                out[i] = {seed, outcome.suffix, outcome.state.best_loss, cosine(v, inst.targets.v_image),
                          cosine(v, inst.targets.v_text)};
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };

    const std::size_t threads = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(runs, 1));
    std::vector<std::jthread> pool;
    for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    pool.clear();
    if (error) std::rethrow_exception(error);
    return out;
}

namespace {

SweepRow summarize(std::string variant, const AttackConfig& cfg, const std::vector<RunSummary>& runs) {
    SweepRow row;
    row.variant = std::move(variant);
    row.lambda = cfg.lambda;
    row.init = to_string(cfg.init);
    row.runs = runs.size();
    for (const auto& r : runs) {
        row.mean_best_loss += r.best_loss;
        row.mean_image_cosine += r.image_cosine;
        row.mean_text_cosine += r.text_cosine;
    }
    if (!runs.empty()) {
        const auto n = static_cast<double>(runs.size());
        row.mean_best_loss /= n;
        row.mean_image_cosine /= n;
        row.mean_text_cosine /= n;
    }
    return row;
}

} // namespace

std::vector<double> default_lambda_grid() { return {0.0, 0.001, 0.01, 0.1, 0.25, 0.5, 0.75, 1.0}; }

std::vector<SweepRow> lambda_sweep(const ReferenceBackend& backend, AttackConfig config,
                                   const std::vector<double>& lambdas, std::uint64_t base_seed, std::size_t runs,
                                   std::size_t jobs) {
    std::vector<SweepRow> rows;
    for (double lambda : lambdas) {
        config.lambda = lambda;
        rows.push_back(summarize(lambda == 0.0 ? "IMP" : "MMP", config,
                                 run_desk_batch(backend, config, base_seed, runs, jobs)));
    }
    return rows;
}

std::vector<SweepRow> init_ablation(const ReferenceBackend& backend, AttackConfig config,
                                    const std::vector<InitMethod>& inits, std::uint64_t base_seed, std::size_t runs,
                                    std::size_t jobs) {
    std::vector<SweepRow> rows;
    for (InitMethod init : inits) {
        config.init = init;
        rows.push_back(summarize(to_string(init), config, run_desk_batch(backend, config, base_seed, runs, jobs)));
    }
    return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
    out << "variant,lambda,init,runs,mean_best_loss,mean_image_cos,mean_text_cos\n";
    for (const auto& r : rows) {
        out << r.variant << ',' << format_number(r.lambda) << ',' << r.init << ',' << r.runs << ','
            << format_number(r.mean_best_loss) << ',' << format_number(r.mean_image_cosine) << ','
            << format_number(r.mean_text_cosine) << '\n';
    }
}

} // namespace suffixlab
