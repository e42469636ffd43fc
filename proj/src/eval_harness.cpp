// Copyright 2026 The suffixlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "suffixlab/eval_harness.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "suffixlab/objective.hpp"

namespace suffixlab {

using nlohmann::json;

std::string universality_key(const CategoryPair& pair, const std::string& applied_original) {
    return pair.key() + "@" + applied_original;
}

MemoryImageSource::MemoryImageSource(std::string key, std::vector<ImageHandle> images)
    : key_(std::move(key)), images_(std::move(images)) {}

std::optional<ImageHandle> MemoryImageSource::next_image() {
    if (cursor_ >= images_.size()) return std::nullopt;
    return images_[cursor_++];
}

void MemoryImageCatalog::add(const std::string& key, std::size_t count) {
    std::vector<ImageHandle> images(count);
    for (std::size_t i = 0; i < count; ++i) images[i].id = key + "/" + std::to_string(i);
    sets_[key] = std::move(images);
}

void MemoryImageCatalog::add(const std::string& key, std::vector<Vector> embeddings) {
    std::vector<ImageHandle> images(embeddings.size());
    for (std::size_t i = 0; i < embeddings.size(); ++i) {
        images[i].id = key + "/" + std::to_string(i);
        images[i].embedding = std::move(embeddings[i]);
    }
    sets_[key] = std::move(images);
}

std::unique_ptr<ImageSource> MemoryImageCatalog::open(const std::string& key) const {
    auto it = sets_.find(key);
    if (it == sets_.end()) return nullptr;
    return std::make_unique<MemoryImageSource>(key, it->second);
}

namespace {

class DirectoryImageSource final : public ImageSource {
public:
    DirectoryImageSource(std::filesystem::path dir, std::string key, std::size_t count)
        : dir_(std::move(dir)), key_(std::move(key)), count_(count) {}

    std::string provenance() const override { return "directory:" + dir_.generic_string(); }
    std::size_t count() const override { return count_; }

    std::optional<ImageHandle> next_image() override {
        if (cursor_ >= count_) return std::nullopt;
        const std::size_t i = cursor_++;
        ImageHandle img;
        img.id = key_ + "/" + std::to_string(i);
        img.path = dir_ / (std::to_string(i) + ".png");
        const auto sidecar = dir_ / (std::to_string(i) + ".vec");
        if (std::filesystem::exists(sidecar)) {
            std::ifstream in(sidecar);
            Vector v;
            double x = 0.0;
            while (in >> x) v.push_back(x);
            if (!in.eof()) throw std::runtime_error("malformed embedding sidecar " + sidecar.string());
            img.embedding = std::move(v);
        }
        return img;
    }

private:
    std::filesystem::path dir_;
    std::string key_;
    std::size_t count_;
    std::size_t cursor_ = 0;
};

double mean(double sum, std::size_t n) { return n == 0 ? 0.0 : sum / static_cast<double>(n); }

} // namespace

DirectoryImageCatalog::DirectoryImageCatalog(std::filesystem::path root) : root_(std::move(root)) {
    const auto manifest = root_ / "manifest.json";
    std::ifstream in(manifest);
    if (!in) throw std::runtime_error("missing image manifest " + manifest.string());
    const json doc = json::parse(in);
    for (const auto& [key, count] : doc.at("sets").items()) sets_[key] = count.get<std::size_t>();
}

std::unique_ptr<ImageSource> DirectoryImageCatalog::open(const std::string& key) const {
    auto it = sets_.find(key);
    if (it == sets_.end()) return nullptr;
    return std::make_unique<DirectoryImageSource>(root_ / key, key, it->second);
}

ScriptedDetector::ScriptedDetector(std::set<std::string> labels, std::set<std::string> fallback)
    : labels_(std::move(labels)), fallback_(std::move(fallback)) {
    for (const auto& l : fallback_) {
        if (!labels_.contains(l)) throw std::invalid_argument("ScriptedDetector: default label '" + l + "' not declared");
    }
}

ScriptedDetector ScriptedDetector::from_json(const json& script) {
    ScriptedDetector det(script.at("labels").get<std::set<std::string>>(),
                         script.value("default", std::set<std::string>{}));
    if (script.contains("sets")) {
        for (const auto& [key, runs_json] : script["sets"].items()) {
            std::vector<Run> runs;
            for (const auto& r : runs_json) {
                runs.push_back({r.at("count").get<std::size_t>(), r.at("labels").get<std::set<std::string>>()});
            }
            det.script(key, std::move(runs));
        }
    }
    return det;
}

void ScriptedDetector::script(const std::string& key, std::vector<Run> runs) {
    for (const auto& run : runs) {
        for (const auto& l : run.labels) {
            if (!labels_.contains(l)) throw std::invalid_argument("ScriptedDetector: label '" + l + "' not declared");
        }
    }
    runs_[key] = std::move(runs);
}

std::set<std::string> ScriptedDetector::detect(const ImageHandle& image) const {
    const auto slash = image.id.rfind('/');
    if (slash == std::string::npos) return fallback_;
    const auto it = runs_.find(image.id.substr(0, slash));
    if (it == runs_.end()) return fallback_;
    std::size_t index = std::stoul(image.id.substr(slash + 1));
    for (const auto& run : it->second) {
        if (index < run.count) return run.labels;
        index -= run.count;
    }
    return fallback_;
}

double clip_score(const EncoderBackend& backend, const ImageHandle& image, TokenId target) {
    return cosine(backend.encode_image(image), build_text_target(backend, target));
}

std::optional<double> matcher_score(const Matcher* matcher, const ImageHandle& image, const std::string& target) {
    if (matcher == nullptr) return std::nullopt;
    return matcher->score(image, target);
}

DetectionOutcome detection_metrics(const Detector& detector, const ImageHandle& image, const std::string& original,
                                   const std::string& target) {
    for (const auto* c : {&original, &target}) {
        if (!detector.label_set().contains(*c)) {
            throw std::invalid_argument("category '" + *c + "' is not in the detector's label set");
        }
    }
    const auto found = detector.detect(image);
    DetectionOutcome out;
    out.ocndr = found.contains(original) ? 0 : 1;
    out.tcdr = found.contains(target) ? 1 : 0;
    out.both = out.ocndr & out.tcdr;
    return out;
}

Aggregates aggregate(const std::vector<EvalRecord>& records) {
    Aggregates a;
    a.count = records.size();
    double clip = 0.0, matcher = 0.0, ocndr = 0.0, tcdr = 0.0, both = 0.0;
    bool matcher_complete = !records.empty();
    for (const auto& r : records) {
        clip += r.clip_score;
        ocndr += r.ocndr;
        tcdr += r.tcdr;
        both += r.both;
        if (r.matcher_score) {
            matcher += *r.matcher_score;
        } else {
            matcher_complete = false;
        }
    }
    a.clip = mean(clip, a.count);
    a.ocndr = mean(ocndr, a.count);
    a.tcdr = mean(tcdr, a.count);
    a.both = mean(both, a.count);
    if (matcher_complete) a.matcher = mean(matcher, a.count);
    return a;
}

TokenId category_token(const EncoderBackend& backend, const ProtocolConfig& config, const std::string& category) {
    if (auto it = config.category_tokens.find(category); it != config.category_tokens.end()) {
        if (!backend.codebook().contains(it->second)) {
            throw std::invalid_argument("category '" + category + "' maps to an out-of-range token id");
        }
        return it->second;
    }
    const auto ids = WhitespaceTokenizer(backend.codebook().vocab()).tokenize(category);
    if (!ids || ids->size() != 1) {
        throw std::invalid_argument("category '" + category + "' is not a single vocabulary token; map it explicitly");
    }
    return ids->front();
}

EvalReport evaluate_pair(const CategoryPair& pair, const std::string& suffix, ImageSource& source,
                         const Detector& detector, const Matcher* matcher, const EncoderBackend& backend,
                         const ProtocolConfig& config) {
    EvalReport report;
    report.pair = pair;
    report.suffix = suffix;
    report.mode = config.mode;
    report.provenance = source.provenance();

    const Vector text_target = build_text_target(backend, category_token(backend, config, pair.target));
    while (auto image = source.next_image()) {
        EvalRecord rec;
        rec.image_id = image->id;
        rec.clip_score = cosine(backend.encode_image(*image), text_target);
        rec.matcher_score = matcher_score(matcher, *image, pair.target);
        const auto det = detection_metrics(detector, *image, pair.original, pair.target);
        rec.ocndr = det.ocndr;
        rec.tcdr = det.tcdr;
        rec.both = det.both;
        report.records.push_back(std::move(rec));
    }
    report.aggregates = aggregate(report.records);
    return report;
}

ProtocolResult run_protocol(const std::map<CategoryPair, std::string>& suffixes, const ImageCatalog& catalog,
                            const Detector& detector, const Matcher* matcher, const EncoderBackend& backend,
                            const ProtocolConfig& config) {
    ProtocolResult result;
    result.mode = config.mode;
    result.detector_policy = detector.policy();
    std::vector<EvalRecord> all;

    for (const auto& original : config.categories) {
        for (const auto& target : config.categories) {
            if (original == target) continue;
            const CategoryPair pair{original, target};
            auto skip = [&](std::string reason) {
                EvalReport r;
                r.pair = pair;
                r.mode = config.mode;
                r.partial = true;
                r.skipped_reason = std::move(reason);
                result.pairs.push_back(std::move(r));
                result.partial = true;
            };
            const auto sfx = suffixes.find(pair);
            if (sfx == suffixes.end()) {
                skip("no suffix for pair");
                continue;
            }
            auto source = catalog.open(pair.key());
            if (!source) {
                skip("no image set '" + pair.key() + "'");
                continue;
            }
            auto report = evaluate_pair(pair, sfx->second, *source, detector, matcher, backend, config);
            all.insert(all.end(), report.records.begin(), report.records.end());
            result.pairs.push_back(std::move(report));
        }
    }
    result.grand = aggregate(all);
    return result;
}

UniversalityMatrix universality_matrix(const std::map<CategoryPair, std::string>& suffixes,
                                       const ImageCatalog& catalog, const Detector& detector,
                                       const EncoderBackend& backend, const ProtocolConfig& config) {
    const auto& cats = config.categories;
    UniversalityMatrix out;
    out.categories = cats;
    out.cells.assign(cats.size(), std::vector<std::optional<double>>(cats.size()));

    for (std::size_t o = 0; o < cats.size(); ++o) {
        for (std::size_t t = 0; t < cats.size(); ++t) {
            if (o == t) continue;
            const CategoryPair pair{cats[o], cats[t]};
            const auto sfx = suffixes.find(pair);
            if (sfx == suffixes.end()) continue;
            double sum = 0.0;
            std::size_t n = 0;
            bool complete = true;
            for (std::size_t a = 0; a < cats.size(); ++a) {
                if (a == o || a == t) continue;
                auto source = catalog.open(universality_key(pair, cats[a]));
                if (!source) {
                    complete = false;
                    break;
                }
                // Detection is judged against the prompt the suffix was applied to.
                const auto report = evaluate_pair({cats[a], cats[t]}, sfx->second, *source, detector, nullptr,
                                                  backend, config);
                sum += report.aggregates.both;
                ++n;
            }
            if (complete && n > 0) out.cells[o][t] = sum / static_cast<double>(n);
        }
    }
    return out;
}

ProtocolResult transfer_eval(const std::map<CategoryPair, std::string>& suffixes_from_a,
                             const EncoderBackend& backend_b, const TextTokenizer& tokenizer_b,
                             const ImageCatalog& catalog, const Detector& detector, const Matcher* matcher,
                             ProtocolConfig config) {
    config.mode = "transfer";
    std::map<CategoryPair, std::string> usable;
    std::map<CategoryPair, std::string> rejected;
    for (const auto& [pair, suffix] : suffixes_from_a) {
        const auto ids = tokenizer_b.tokenize(suffix);
        if (ids) {
            usable.emplace(pair, suffix);
        } else {
            rejected.emplace(pair, "suffix '" + suffix + "' is not tokenizable on backend " + backend_b.name());
        }
    }
    auto result = run_protocol(usable, catalog, detector, matcher, backend_b, config);
    for (auto& report : result.pairs) {
        if (auto it = rejected.find(report.pair); it != rejected.end()) report.skipped_reason = it->second;
    }
    return result;
}

json to_json(const Aggregates& a) {
    json j{{"count", a.count}, {"clip", a.clip}, {"ocndr", a.ocndr}, {"tcdr", a.tcdr}, {"both", a.both}};
    j["matcher"] = a.matcher ? json(*a.matcher) : json("unavailable");
    return j;
}

json to_json(const EvalReport& report) {
    json records = json::array();
    for (const auto& r : report.records) {
        records.push_back({{"image", r.image_id},
                           {"clip", r.clip_score},
                           {"matcher", r.matcher_score ? json(*r.matcher_score) : json("unavailable")},
                           {"ocndr", r.ocndr},
                           {"tcdr", r.tcdr},
                           {"both", r.both}});
    }
    json j{{"pair", {{"original", report.pair.original}, {"target", report.pair.target}}},
           {"suffix", report.suffix},
           {"records", std::move(records)},
           {"aggregates", to_json(report.aggregates)},
           {"mode", report.mode},
           {"partial", report.partial}};
    if (report.skipped_reason) j["skipped"] = *report.skipped_reason;
    if (!report.provenance.empty()) j["provenance"] = report.provenance;
    return j;
}

json to_json(const ProtocolResult& result) {
    json pairs = json::array();
    for (const auto& p : result.pairs) pairs.push_back(to_json(p));
    return {{"mode", result.mode},
            {"partial", result.partial},
            {"detector_policy", result.detector_policy},
            {"aggregates", to_json(result.grand)},
            {"pairs", std::move(pairs)}};
}

json to_json(const UniversalityMatrix& matrix) {
    json rows = json::array();
    for (const auto& row : matrix.cells) {
        json r = json::array();
        for (const auto& cell : row) r.push_back(cell ? json(*cell) : json(nullptr));
        rows.push_back(std::move(r));
    }
    return {{"categories", matrix.categories}, {"both", std::move(rows)}};
}

} // namespace suffixlab
