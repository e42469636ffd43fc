// Copyright 2026 The suffixlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "suffixlab/cli.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <sstream>
#include <stdexcept>

#include "CLI11.hpp"
#include "json.hpp"

#include "suffixlab/ablation.hpp"
#include "suffixlab/baselines.hpp"
#include "suffixlab/codebook.hpp"
#include "suffixlab/eval_harness.hpp"
#include "suffixlab/feature_analysis.hpp"
#include "suffixlab/objective.hpp"
#include "suffixlab/reference_backend.hpp"
#include "suffixlab/ste_optimizer.hpp"
#include "suffixlab/tokenizer.hpp"

namespace suffixlab {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Parameters: built-in defaults < config file < command-line flags.

struct ParamSpec {
    std::string key;
    json fallback;
    std::string help;
};

class ParamSet {
public:
    explicit ParamSet(std::vector<ParamSpec> specs) : specs_(std::move(specs)) {
        for (const auto& s : specs_) {
            raw_[s.key];
            flags_[s.key] = false;
        }
    }

    void attach(CLI::App* app) {
        for (const auto& s : specs_) {
            if (s.fallback.is_boolean()) {
                options_[s.key] = app->add_flag("--" + s.key, flags_[s.key], s.help);
            } else {
                options_[s.key] = app->add_option("--" + s.key, raw_[s.key], s.help + " (default: " + describe(s) + ")");
            }
        }
        options_["config"] = app->add_option("--config", config_path_, "JSON config file with default overrides");
    }

    json resolve() const {
        json file_cfg = json::object();
        if (!config_path_.empty()) {
            std::ifstream in(config_path_);
            if (!in) throw UsageError("cannot open config file " + config_path_);
            try {
                file_cfg = json::parse(in);
            } catch (const json::parse_error& e) {
                throw UsageError("config file " + config_path_ + ": " + e.what());
            }
            if (!file_cfg.is_object()) throw UsageError("config file must hold a JSON object");
        }
        for (const auto& [key, value] : file_cfg.items()) {
            if (!raw_.contains(key)) throw UsageError("unknown config key '" + key + "'");
        }

        json resolved = json::object();
        for (const auto& s : specs_) {
            const bool on_cli = options_.at(s.key)->count() > 0;
            if (on_cli) {
                resolved[s.key] = s.fallback.is_boolean() ? json(flags_.at(s.key)) : convert(s, raw_.at(s.key));
            } else if (file_cfg.contains(s.key)) {
                resolved[s.key] = check_type(s, file_cfg[s.key]);
            } else {
                resolved[s.key] = s.fallback;
            }
        }
        resolved["config"] = config_path_;
        return resolved;
    }

private:
    static std::string describe(const ParamSpec& s) {
        return s.fallback.is_string() ? "\"" + s.fallback.get<std::string>() + "\"" : s.fallback.dump();
    }

    static json convert(const ParamSpec& s, const std::string& text) {
        try {
            std::size_t used = 0;
            if (s.fallback.is_number_unsigned() || s.fallback.is_number_integer()) {
                if (!text.empty() && text.front() == '-') throw std::invalid_argument("negative");
                const auto v = std::stoull(text, &used);
                if (used != text.size()) throw std::invalid_argument("trailing");
                return v;
            }
            if (s.fallback.is_number_float()) {
                const auto v = std::stod(text, &used);
                if (used != text.size()) throw std::invalid_argument("trailing");
                return v;
            }
        } catch (const std::exception&) {
            throw UsageError("--" + s.key + ": cannot parse '" + text + "'");
        }
        return text;
    }

    static json check_type(const ParamSpec& s, const json& v) {
        const bool ok = (s.fallback.is_number_float() && v.is_number()) ||
                        ((s.fallback.is_number_unsigned() || s.fallback.is_number_integer()) && v.is_number_unsigned()) ||
                        (s.fallback.is_string() && v.is_string()) || (s.fallback.is_boolean() && v.is_boolean());
        if (!ok) throw UsageError("config key '" + s.key + "' has the wrong type");
        return s.fallback.is_number_float() ? json(v.get<double>()) : v;
    }

    std::vector<ParamSpec> specs_;
    std::map<std::string, std::string> raw_;
    std::map<std::string, bool> flags_;
    std::map<std::string, CLI::Option*> options_;
    std::string config_path_;
};

std::vector<ParamSpec> shared_params() {
    return {
        {"backend", "reference", "encoder backend"},
        {"codebook", "", "codebook matrix file (MMPC) replacing the backend's codebook"},
        {"vocab", "", "vocabulary file (surface<TAB>word_final per line)"},
        {"seed", std::uint64_t{0}, "random seed"},
        {"out", "", "output path (stdout when empty)"},
    };
}

std::vector<ParamSpec> with_shared(std::vector<ParamSpec> specific) {
    auto all = shared_params();
    all.insert(all.end(), specific.begin(), specific.end());
    return all;
}

// ---------------------------------------------------------------------------
// Shared helpers.

std::string str(const json& cfg, const char* key) { return cfg.at(key).get<std::string>(); }
std::uint64_t u64(const json& cfg, const char* key) { return cfg.at(key).get<std::uint64_t>(); }
double real(const json& cfg, const char* key) { return cfg.at(key).get<double>(); }

void require_file(const std::string& path, const char* what) {
    if (path.empty()) throw UsageError(std::string("missing --") + what);
    if (!fs::exists(path)) throw UsageError(std::string(what) + " file not found: " + path);
}

std::unique_ptr<ReferenceBackend> make_backend(const json& cfg) {
    const auto name = str(cfg, "backend");
    if (name != "reference") {
        throw UsageError("unknown backend '" + name + "'; available: reference");
    }
    const auto codebook = str(cfg, "codebook");
    const auto vocab = str(cfg, "vocab");
    if (codebook.empty() != vocab.empty()) throw UsageError("--codebook and --vocab must be given together");
    if (codebook.empty()) return std::make_unique<ReferenceBackend>();
    require_file(codebook, "codebook");
    require_file(vocab, "vocab");
    try {
        return std::make_unique<ReferenceBackend>(load_codebook(codebook, vocab));
    } catch (const std::exception& e) {
        throw UsageError(e.what());
    }
}

TokenId resolve_token(const EncoderBackend& backend, const std::string& text, const char* what) {
    if (text.empty()) throw UsageError(std::string("missing --") + what);
    const bool numeric = text.find_first_not_of("0123456789") == std::string::npos;
    if (numeric) {
        const TokenId id = std::stoull(text);
        if (!backend.codebook().contains(id)) throw UsageError(std::string(what) + " id " + text + " out of range");
        return id;
    }
    if (auto id = backend.codebook().vocab().find(text)) return *id;
    throw UsageError(std::string(what) + " '" + text + "' is not in the vocabulary");
}

TokenIds resolve_prompt(const EncoderBackend& backend, const json& cfg) {
    const auto text = str(cfg, "prompt");
    const auto ids_text = str(cfg, "prompt-ids");
    if (text.empty() == ids_text.empty()) throw UsageError("give exactly one of --prompt or --prompt-ids");
    TokenIds ids;
    if (!ids_text.empty()) {
        ids = parse_token_ids(ids_text);
        for (TokenId id : ids) {
            if (!backend.codebook().contains(id)) throw UsageError("prompt id " + std::to_string(id) + " out of range");
        }
    } else {
        auto tok = WhitespaceTokenizer(backend.codebook().vocab()).tokenize(text);
        if (!tok) throw UsageError("prompt '" + text + "' contains words outside the vocabulary");
        ids = *tok;
    }
    if (ids.empty()) throw UsageError("original prompt is empty");
    return ids;
}

Vector read_vector_file(const std::string& path) {
    require_file(path, "image");
    std::ifstream in(path);
    Vector v;
    double x = 0.0;
    while (in >> x) v.push_back(x);
    if (!in.eof()) throw UsageError("malformed vector file " + path);
    return v;
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        while (!item.empty() && item.front() == ' ') item.erase(item.begin());
        while (!item.empty() && item.back() == ' ') item.pop_back();
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

void emit_text(const json& cfg, const std::string& text, std::ostream& out) {
    const auto path = str(cfg, "out");
    if (path.empty()) {
        out << text;
        return;
    }
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw std::runtime_error("cannot write " + path);
    file << text;
}

void emit_json(const json& cfg, const json& doc, std::ostream& out) { emit_text(cfg, doc.dump(2) + "\n", out); }

json artifact_header(const std::string& command, const json& cfg) {
    return {{"format_version", kArtifactFormatVersion}, {"command", command}, {"config", cfg}};
}

json suffix_json(const EncoderBackend& backend, const TokenIds& ids) {
    const auto& vocab = backend.codebook().vocab();
    json surfaces = json::array();
    for (TokenId id : ids) surfaces.push_back(vocab[id].surface);
    return {{"ids", ids}, {"surfaces", surfaces}, {"text", WhitespaceTokenizer(vocab).detokenize(ids)}};
}

std::vector<double> downsample(const std::vector<double>& trace, std::size_t every) {
    std::vector<double> out;
    for (std::size_t i = 0; i < trace.size(); i += every) out.push_back(trace[i]);
    return out;
}

// ---------------------------------------------------------------------------
// filter-vocab

int cmd_filter_vocab(const json& cfg, std::ostream& out) {
    const auto backend = make_backend(cfg);
    const TokenId target = resolve_token(*backend, str(cfg, "target"), "target");
    FilteredVocabulary filtered;
    try {
        filtered = filter_vocabulary(backend->codebook(), target, u64(cfg, "top-k"));
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    const auto& vocab = backend->codebook().vocab();
    json removed = json::array();
    for (const auto& [id, score] : filtered.removed_synonyms) {
        removed.push_back({{"id", id}, {"surface", vocab[id].surface}, {"score", score}});
    }
    json doc = artifact_header("filter-vocab", cfg);
    doc["target"] = {{"id", target}, {"surface", vocab[target].surface}};
    doc["removed"] = std::move(removed);
    doc["allowed_ids"] = filtered.allowed_sorted();
    emit_json(cfg, doc, out);
    return kExitOk;
}

// ---------------------------------------------------------------------------
// attack

int cmd_attack(const json& cfg, std::ostream& out) {
    const auto started = std::chrono::steady_clock::now();
    const auto backend = make_backend(cfg);
    const TokenId target = resolve_token(*backend, str(cfg, "target"), "target");
    const TokenIds prompt = resolve_prompt(*backend, cfg);
    const auto method = str(cfg, "method");
    const std::size_t m = u64(cfg, "m");
    const std::uint64_t seed = u64(cfg, "seed");

    FilteredVocabulary filtered;
    try {
        filtered = filter_vocabulary(backend->codebook(), target, u64(cfg, "top-k"));
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }

    std::optional<TargetVectors> targets;
    const auto image_path = str(cfg, "image");
    if (!image_path.empty()) {
        ImageHandle image{"reference", image_path, read_vector_file(image_path)};
        try {
            targets = build_targets(*backend, target, image, real(cfg, "lambda"));
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
    } else if (method == "mmp") {
        throw UsageError("--image is required for --method mmp");
    }
    const Vector v_text = build_text_target(*backend, target);

    json doc = artifact_header("attack", cfg);
    doc["method"] = method;
    doc["backend"] = backend->name();

    TokenIds suffix;
    std::vector<double> trace;
    try {
        if (method == "mmp") {
            AttackConfig ac;
            ac.m = m;
            ac.lambda = real(cfg, "lambda");
            ac.learning_rate = real(cfg, "lr");
            ac.iterations = u64(cfg, "iters");
            ac.init = parse_init_method(str(cfg, "init"));
            ac.seed = seed;
            ac.trace_every = u64(cfg, "trace-every");
            const auto outcome = optimize(*backend, prompt, *targets, ac, filtered);
            suffix = outcome.suffix;
            trace = outcome.state.loss_trace;
            const auto init_ids = project(initialize(ac.init, ac.m, backend->codebook(), filtered, target, seed,
                                                     backend->eos_token()),
                                          backend->codebook(), filtered.allowed_sorted())
                                      .ids;
            doc["init_suffix"] = suffix_json(*backend, init_ids);
            doc["iterations_run"] = outcome.state.iteration;
        } else if (method == "none") {
            // no suffix
        } else if (method == "random") {
            suffix = random_suffix(m, filtered, seed);
        } else if (method == "genetic") {
            GeneticConfig gc;
            gc.generations = u64(cfg, "generations");
            gc.candidates_per_generation = u64(cfg, "candidates");
            gc.suffix_char_len = u64(cfg, "char-len");
            gc.mutation_rate = real(cfg, "mutation-rate");
            gc.seed = seed;
            gc.suffix_tokens = m;
            const auto mode = str(cfg, "genetic-mode");
            if (mode == "character") {
                throw UsageError("genetic character mode needs a tokenizer adapter; backend '" + backend->name() +
                                 "' has none (use --genetic-mode token)");
            }
            if (mode != "token") throw UsageError("--genetic-mode must be token or character");
            gc.mode = GeneticMode::token;
            const auto outcome = genetic_attack(*backend, prompt, v_text, gc, filtered, nullptr);
            suffix = outcome.suffix_ids;
            trace = outcome.best_trace;
        } else if (method == "gcg") {
            GcgConfig gc;
            gc.steps = u64(cfg, "steps");
            gc.candidates_per_step = u64(cfg, "gcg-candidates");
            gc.top_k_coordinates = std::min<std::size_t>(u64(cfg, "gcg-topk"), backend->codebook().size());
            gc.suffix_tokens = m;
            gc.seed = seed;
            const auto outcome = gcg_attack(*backend, prompt, v_text, gc, filtered);
            suffix = outcome.suffix;
            trace = outcome.loss_trace;
        } else {
            throw UsageError("unknown method '" + method + "' (expected none|random|genetic|gcg|mmp)");
        }
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    } catch (const std::length_error& e) {
        throw UsageError(e.what());
    }

    doc["suffix"] = suffix_json(*backend, suffix);
    TokenIds full = prompt;
    full.insert(full.end(), suffix.begin(), suffix.end());
    const Vector v = backend->encode_ids(full);
    doc["text_cosine"] = cosine(v, v_text);
    if (targets) {
        doc["best_loss"] = mmp_loss(v, *targets);
        doc["image_cosine"] = cosine(v, targets->v_image);
    } else {
        doc["best_loss"] = nullptr;
    }
    const std::size_t every = std::max<std::uint64_t>(u64(cfg, "trace-every"), 1);
    doc["trace_every"] = every;
    doc["loss_trace"] = downsample(trace, every);
    doc["filtered"] = {{"top_k", u64(cfg, "top-k")}, {"allowed_count", filtered.allowed_ids.size()}};
    if (cfg.at("record-timing").get<bool>()) {
        doc["wall_clock_seconds"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    }
    emit_json(cfg, doc, out);
    return kExitOk;
}

// ---------------------------------------------------------------------------
// eval / universality / transfer

struct EvalInputs {
    std::map<CategoryPair, std::string> suffixes;
    std::unique_ptr<ImageCatalog> catalog;
    std::unique_ptr<ScriptedDetector> detector;
    std::unique_ptr<Matcher> matcher;
    ProtocolConfig protocol;
};

EvalInputs load_eval_inputs(const json& cfg) {
    EvalInputs in;

    const auto suffix_path = str(cfg, "suffixes");
    require_file(suffix_path, "suffixes");
    std::ifstream sf(suffix_path);
    const json suffixes = json::parse(sf);
    for (const auto& [key, value] : suffixes.items()) {
        const auto sep = key.find("__");
        if (sep == std::string::npos) throw UsageError("suffix key '" + key + "' must be <original>__<target>");
        in.suffixes[{key.substr(0, sep), key.substr(sep + 2)}] = value.get<std::string>();
    }

    const auto images = str(cfg, "images");
    if (images.empty()) throw UsageError("missing --images");
    if (fs::exists(fs::path(images) / "manifest.json")) {
        in.catalog = std::make_unique<DirectoryImageCatalog>(images);
    } else {
        in.catalog = std::make_unique<MemoryImageCatalog>(); // every pair is skipped
    }

    const auto det_path = str(cfg, "detector");
    require_file(det_path, "detector");
    std::ifstream df(det_path);
    try {
        in.detector = std::make_unique<ScriptedDetector>(ScriptedDetector::from_json(json::parse(df)));
    } catch (const std::exception& e) {
        throw UsageError(std::string("detector script: ") + e.what());
    }

    const auto matcher = str(cfg, "matcher");
    if (matcher.rfind("constant:", 0) == 0) {
        in.matcher = std::make_unique<ConstantMatcher>(std::stod(matcher.substr(9)));
    } else if (matcher != "none") {
        throw UsageError("--matcher must be none or constant:<value>");
    }

    in.protocol.categories = split_list(str(cfg, "categories"));
    for (const auto& item : split_list(str(cfg, "category-tokens"))) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw UsageError("--category-tokens entries look like name=id");
        in.protocol.category_tokens[item.substr(0, eq)] = std::stoull(item.substr(eq + 1));
    }
    return in;
}

int cmd_eval(const json& cfg, std::ostream& out) {
    const auto backend = make_backend(cfg);
    auto in = load_eval_inputs(cfg);
    ProtocolResult result;
    try {
        result = run_protocol(in.suffixes, *in.catalog, *in.detector, in.matcher.get(), *backend, in.protocol);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    json doc = artifact_header("eval", cfg);
    doc["report"] = to_json(result);
    emit_json(cfg, doc, out);
    return kExitOk;
}

int cmd_universality(const json& cfg, std::ostream& out) {
    const auto backend = make_backend(cfg);
    auto in = load_eval_inputs(cfg);
    UniversalityMatrix matrix;
    try {
        matrix = universality_matrix(in.suffixes, *in.catalog, *in.detector, *backend, in.protocol);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    json doc = artifact_header("universality", cfg);
    doc["matrix"] = to_json(matrix);
    emit_json(cfg, doc, out);
    return kExitOk;
}

int cmd_transfer(const json& cfg, std::ostream& out) {
    const auto backend = make_backend(cfg);
    auto in = load_eval_inputs(cfg);
    const WhitespaceTokenizer tokenizer(backend->codebook().vocab());
    ProtocolResult result;
    try {
        result = transfer_eval(in.suffixes, *backend, tokenizer, *in.catalog, *in.detector, in.matcher.get(),
                               in.protocol);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    json doc = artifact_header("transfer", cfg);
    doc["report"] = to_json(result);
    emit_json(cfg, doc, out);
    return kExitOk;
}

// ---------------------------------------------------------------------------
// analyze

int cmd_analyze(const json& cfg, std::ostream& out) {
    const auto backend = make_backend(cfg);
    const auto templates_path = str(cfg, "templates");
    require_file(templates_path, "templates");
    const auto out_dir = str(cfg, "out");
    if (out_dir.empty()) throw UsageError("analyze needs --out <directory>");

    std::vector<std::string> templates;
    std::vector<std::size_t> template_lines;
    {
        std::ifstream in(templates_path);
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.find_first_not_of(" \t") == std::string::npos) continue;
            const auto first = line.find(kSubjectSlot);
            if (first == std::string::npos || line.find(kSubjectSlot, first + 1) != std::string::npos) {
                throw UsageError(templates_path + ":" + std::to_string(line_no) +
                                 ": template must contain exactly one '{}' slot");
            }
            templates.push_back(line);
            template_lines.push_back(line_no);
        }
    }
    const auto subjects = split_list(str(cfg, "subjects"));
    if (templates.empty() || subjects.empty()) throw UsageError("analyze needs at least one template and subject");

    const auto grid = build_grid(templates, subjects);
    const WhitespaceTokenizer tokenizer(backend->codebook().vocab());
    Matrix embeddings;
    for (const auto& p : grid.prompts) {
        const auto ids = tokenizer.tokenize(p.text);
        if (!ids || ids->empty()) {
            throw UsageError(templates_path + ":" + std::to_string(template_lines[p.template_idx]) + ": prompt '" +
                             p.text + "' is not tokenizable");
        }
        embeddings.append_row(backend->encode_ids(*ids));
    }
    const Matrix distances = pairwise_distances(embeddings);

    fs::create_directories(out_dir);
    {
        std::ofstream f(fs::path(out_dir) / "embeddings.csv", std::ios::binary | std::ios::trunc);
        write_embedding_csv(f, grid, embeddings);
    }
    {
        std::ofstream f(fs::path(out_dir) / "distances.csv", std::ios::binary | std::ios::trunc);
        write_distance_csv(f, distances);
    }

    json doc = artifact_header("analyze", cfg);
    doc["prompts"] = grid.prompts.size();
    std::vector<std::size_t> subject_labels;
    for (const auto& p : grid.prompts) subject_labels.push_back(p.subject_idx);
    try {
        const auto sep = cluster_separation(embeddings, subject_labels);
        doc["subject_separation"] = {{"within", sep.within},
                                     {"between", sep.between},
                                     {"ratio", sep.ratio ? json(*sep.ratio) : json("undefined")}};
    } catch (const std::invalid_argument& e) {
        doc["subject_separation"] = {{"undefined", e.what()}};
    }
    std::ofstream f(fs::path(out_dir) / "analysis.json", std::ios::binary | std::ios::trunc);
    f << doc.dump(2) << "\n";
    out << "wrote " << grid.prompts.size() << " embeddings to " << out_dir << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// ablate

int cmd_ablate(const json& cfg, std::ostream& out) {
    const auto backend = make_backend(cfg);
    AttackConfig ac;
    ac.m = u64(cfg, "m");
    ac.lambda = real(cfg, "lambda");
    ac.learning_rate = real(cfg, "lr");
    ac.iterations = u64(cfg, "iters");
    const auto kind = str(cfg, "kind");
    const std::size_t runs = u64(cfg, "runs");
    const std::size_t jobs = u64(cfg, "jobs");
    const std::uint64_t seed = u64(cfg, "seed");

    std::vector<SweepRow> rows;
    try {
        ac.init = parse_init_method(str(cfg, "init"));
        if (kind == "lambda") {
            std::vector<double> lambdas;
            for (const auto& item : split_list(str(cfg, "lambdas"))) lambdas.push_back(std::stod(item));
            rows = lambda_sweep(*backend, ac, lambdas, seed, runs, jobs);
        } else if (kind == "init") {
            std::vector<InitMethod> inits;
            for (const auto& item : split_list(str(cfg, "inits"))) inits.push_back(parse_init_method(item));
            rows = init_ablation(*backend, ac, inits, seed, runs, jobs);
        } else {
            throw UsageError("--kind must be lambda or init");
        }
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }

    std::ostringstream csv;
    write_sweep_csv(csv, rows);
    emit_text(cfg, csv.str(), out);
    if (const auto path = str(cfg, "out"); !path.empty()) {
        std::ofstream f(path + ".json", std::ios::binary | std::ios::trunc);
        f << artifact_header("ablate", cfg).dump(2) << "\n";
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct Command {
    std::string name;
    std::string help;
    std::vector<ParamSpec> params;
    std::function<int(const json&, std::ostream&)> run;
};

std::vector<Command> commands() {
    const std::vector<ParamSpec> eval_params{
        {"images", "", "image directory with manifest.json"},
        {"detector", "", "scripted detector JSON"},
        {"suffixes", "", "JSON map \"<original>__<target>\" -> suffix text"},
        {"categories", "car,dog,person,bird,knife", "comma-separated categories"},
        {"category-tokens", "", "comma-separated name=token_id overrides"},
        {"matcher", "none", "matcher adapter: none | constant:<value>"},
    };
    return {
        {"filter-vocab", "Filter the vocabulary to word-final tokens minus target synonyms",
         with_shared({{"target", "", "target token (id or surface)"}, {"top-k", std::uint64_t{20}, "synonyms removed"}}),
         cmd_filter_vocab},
        {"attack", "Search a suffix for one (prompt, target) pair",
         with_shared({
             {"method", "mmp", "none | random | genetic | gcg | mmp"},
             {"target", "", "target token (id or surface)"},
             {"prompt", "", "original prompt as vocabulary surfaces"},
             {"prompt-ids", "", "original prompt as comma-separated token ids"},
             {"image", "", "reference image embedding file (white-space separated floats)"},
             {"m", std::uint64_t{4}, "suffix tokens"},
             {"lambda", 0.1, "text-modality weight"},
             {"lr", 0.001, "learning rate"},
             {"iters", std::uint64_t{10000}, "optimization iterations"},
             {"init", "synonym", "eos | random | synonym"},
             {"top-k", std::uint64_t{20}, "synonyms removed from the vocabulary"},
             {"trace-every", std::uint64_t{1}, "keep every k-th loss in the trace"},
             {"record-timing", false, "record wall-clock seconds (output is then not reproducible)"},
             {"generations", std::uint64_t{500}, "genetic: generations"},
             {"candidates", std::uint64_t{20}, "genetic: candidates per generation"},
             {"char-len", std::uint64_t{32}, "genetic: suffix length in characters"},
             {"mutation-rate", 0.1, "genetic: per-gene mutation probability"},
             {"genetic-mode", "token", "genetic: token | character"},
             {"steps", std::uint64_t{1000}, "gcg: optimization steps"},
             {"gcg-candidates", std::uint64_t{256}, "gcg: candidates per step"},
             {"gcg-topk", std::uint64_t{256}, "gcg: top-k tokens per position"},
         }),
         cmd_attack},
        {"eval", "Score generated images for every category pair", with_shared(eval_params), cmd_eval},
        {"universality", "BOTH matrix of suffixes applied to other original categories", with_shared(eval_params),
         cmd_universality},
        {"transfer", "Evaluate suffixes found on another model", with_shared(eval_params), cmd_transfer},
        {"analyze", "Embed a prompt grid and export distances and cluster statistics",
         with_shared({{"templates", "", "template file, one '{}' template per line"},
                      {"subjects", "", "comma-separated subjects"}}),
         cmd_analyze},
        {"ablate", "Initialization or lambda sweep on the desk benchmark",
         with_shared({
             {"kind", "lambda", "lambda | init"},
             {"runs", std::uint64_t{10}, "benchmark instances (seeds seed..seed+runs-1)"},
             {"m", std::uint64_t{2}, "suffix tokens"},
             {"iters", std::uint64_t{2000}, "optimization iterations"},
             {"lr", 0.001, "learning rate"},
             {"lambda", 0.1, "text-modality weight for --kind init"},
             {"init", "synonym", "initialization for --kind lambda"},
             {"lambdas", "0,0.001,0.01,0.1,0.25,0.5,0.75,1", "lambda grid"},
             {"inits", "synonym,random,eos", "initializations to compare"},
             {"jobs", std::uint64_t{1}, "parallel runs"},
         }),
         cmd_ablate},
    };
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"suffixlab: targeted prompt-suffix attacks on contrastive text-image encoders"};
    app.require_subcommand(1);

    auto cmds = commands();
    std::vector<std::unique_ptr<ParamSet>> params;
    std::vector<CLI::App*> subs;
    for (const auto& c : cmds) {
        auto* sub = app.add_subcommand(c.name, c.help);
        params.push_back(std::make_unique<ParamSet>(c.params));
        params.back()->attach(sub);
        subs.push_back(sub);
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    if (!reversed.empty()) reversed.pop_back(); // program name
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        for (auto* sub : subs) {
            if (sub->parsed()) {
                out << sub->help();
                return kExitOk;
            }
        }
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << app.help();
            return kExitOk;
        }
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    for (std::size_t i = 0; i < cmds.size(); ++i) {
        if (!subs[i]->parsed()) continue;
        try {
            const json cfg = params[i]->resolve();
            return cmds[i].run(cfg, out);
        } catch (const UsageError& e) {
            err << "error: " << e.what() << "\n";
            return kExitUsage;
        } catch (const std::exception& e) {
            err << "runtime failure: " << e.what() << "\n";
            return kExitRuntime;
        }
    }
    return kExitUsage;
}

} // namespace suffixlab
