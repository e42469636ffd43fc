// Copyright 2026 The suffixlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "suffixlab/encoder_backend.hpp"
#include "suffixlab/tokenizer.hpp"

namespace suffixlab {

struct CategoryPair {
    std::string original;
    std::string target;

    // Directory / script key "<original>__<target>".
    std::string key() const { return original + "__" + target; }
    auto operator<=>(const CategoryPair&) const = default;
};

// Key of the image set produced by applying the (original, target) suffix to
// prompts of another original category: "<original>__<target>@<applied>".
std::string universality_key(const CategoryPair& pair, const std::string& applied_original);

// Images generated elsewhere; the harness never runs a generator.
class ImageSource {
public:
    virtual ~ImageSource() = default;
    virtual std::string provenance() const = 0;
    virtual std::size_t count() const = 0;
    // Handles in a fixed order; nullopt once `count()` images were yielded.
    virtual std::optional<ImageHandle> next_image() = 0;
};

// Opens the image set stored under a key, or returns nullptr when absent.
class ImageCatalog {
public:
    virtual ~ImageCatalog() = default;
    virtual std::unique_ptr<ImageSource> open(const std::string& key) const = 0;
};

// Synthetic in-memory images, ids "<key>/<index>".
class MemoryImageSource final : public ImageSource {
public:
    MemoryImageSource(std::string key, std::vector<ImageHandle> images);
    std::string provenance() const override { return "synthetic:" + key_; }
    std::size_t count() const override { return images_.size(); }
    std::optional<ImageHandle> next_image() override;

private:
    std::string key_;
    std::vector<ImageHandle> images_;
    std::size_t cursor_ = 0;
};

class MemoryImageCatalog final : public ImageCatalog {
public:
    // `count` images per key with no embedding attached.
    void add(const std::string& key, std::size_t count);
    void add(const std::string& key, std::vector<Vector> embeddings);
    std::unique_ptr<ImageSource> open(const std::string& key) const override;

private:
    std::map<std::string, std::vector<ImageHandle>> sets_;
};

// Directory layout <root>/<key>/<index>.png plus <root>/manifest.json:
//   {"format_version": 1, "sets": {"<key>": <count>, ...}}
// A sidecar <index>.vec (white-space separated floats) becomes the handle's
// embedding when present.
class DirectoryImageCatalog final : public ImageCatalog {
public:
    explicit DirectoryImageCatalog(std::filesystem::path root);
    std::unique_ptr<ImageSource> open(const std::string& key) const override;
    const std::map<std::string, std::size_t>& sets() const { return sets_; }

private:
    std::filesystem::path root_;
    std::map<std::string, std::size_t> sets_;
};

class Detector {
public:
    virtual ~Detector() = default;
    virtual const std::set<std::string>& label_set() const = 0;
    virtual std::set<std::string> detect(const ImageHandle& image) const = 0;
    // Confidence threshold and multi-detection policy, copied into reports.
    virtual std::string policy() const = 0;
};

// Mock detector driven by a script:
//   {"labels": [...], "default": [...],
//    "sets": {"<key>": [{"count": 50, "labels": ["dog"]}, ...]}}
// Runs apply in order to image indices of the set; later indices fall back to
// "default".
class ScriptedDetector final : public Detector {
public:
    struct Run {
        std::size_t count = 0;
        std::set<std::string> labels;
    };

    ScriptedDetector(std::set<std::string> labels, std::set<std::string> fallback = {});
    static ScriptedDetector from_json(const nlohmann::json& script);

    void script(const std::string& key, std::vector<Run> runs);

    const std::set<std::string>& label_set() const override { return labels_; }
    std::set<std::string> detect(const ImageHandle& image) const override;
    std::string policy() const override { return "scripted mock: labels assigned per image index"; }

private:
    std::set<std::string> labels_;
    std::set<std::string> fallback_;
    std::map<std::string, std::vector<Run>> runs_;
};

class Matcher {
public:
    virtual ~Matcher() = default;
    virtual double score(const ImageHandle& image, const std::string& target) const = 0;
};

class ConstantMatcher final : public Matcher {
public:
    explicit ConstantMatcher(double value) : value_(value) {}
    double score(const ImageHandle&, const std::string&) const override { return value_; }

private:
    double value_;
};

struct DetectionOutcome {
    int ocndr = 0;
    int tcdr = 0;
    int both = 0;
};

struct EvalRecord {
    std::string image_id;
    double clip_score = 0.0;
    std::optional<double> matcher_score; // nullopt: matcher unavailable
    int ocndr = 0;
    int tcdr = 0;
    int both = 0;
};

struct Aggregates {
    std::size_t count = 0;
    double clip = 0.0;
    std::optional<double> matcher;
    double ocndr = 0.0;
    double tcdr = 0.0;
    double both = 0.0;
};

struct EvalReport {
    CategoryPair pair;
    std::string suffix;
    std::vector<EvalRecord> records;
    Aggregates aggregates;
    std::string mode = "grey-box";
    bool partial = false;
    std::optional<std::string> skipped_reason;
    std::string provenance;
};

struct ProtocolResult {
    std::vector<EvalReport> pairs;
    Aggregates grand;
    std::string mode = "grey-box";
    bool partial = false;
    std::string detector_policy;
};

struct ProtocolConfig {
    std::vector<std::string> categories{"car", "dog", "person", "bird", "knife"};
    // Category name -> token id for the CLIP score template. Categories not
    // listed are looked up as single vocabulary surfaces.
    std::map<std::string, TokenId> category_tokens;
    std::string mode = "grey-box";
};

double clip_score(const EncoderBackend& backend, const ImageHandle& image, TokenId target);

std::optional<double> matcher_score(const Matcher* matcher, const ImageHandle& image, const std::string& target);

// ocndr = original not detected, tcdr = target detected, both = their AND.
// Throws std::invalid_argument for categories outside the detector's labels.
DetectionOutcome detection_metrics(const Detector& detector, const ImageHandle& image, const std::string& original,
                                   const std::string& target);

// Means over records; `matcher` is set only when every record has a score.
Aggregates aggregate(const std::vector<EvalRecord>& records);

TokenId category_token(const EncoderBackend& backend, const ProtocolConfig& config, const std::string& category);

// Evaluates one image set for a category pair.
EvalReport evaluate_pair(const CategoryPair& pair, const std::string& suffix, ImageSource& source,
                         const Detector& detector, const Matcher* matcher, const EncoderBackend& backend,
                         const ProtocolConfig& config);

// All ordered pairs of distinct categories. Pairs without a suffix or image
// set are listed as skipped and mark the result partial.
ProtocolResult run_protocol(const std::map<CategoryPair, std::string>& suffixes, const ImageCatalog& catalog,
                            const Detector& detector, const Matcher* matcher, const EncoderBackend& backend,
                            const ProtocolConfig& config);

struct UniversalityMatrix {
    std::vector<std::string> categories;
    // cells[original][target]; nullopt on the diagonal or when no data.
    std::vector<std::vector<std::optional<double>>> cells;
};

// Cell (o, t) averages, over every other original category o' ∉ {o, t}, the
// BOTH rate of images from the (o, t) suffix applied to o' prompts.
UniversalityMatrix universality_matrix(const std::map<CategoryPair, std::string>& suffixes,
                                       const ImageCatalog& catalog, const Detector& detector,
                                       const EncoderBackend& backend, const ProtocolConfig& config);

// Re-tokenizes suffixes found on another model for `backend_b` and runs the
// protocol in "transfer" mode. Untokenizable suffixes skip their pair.
ProtocolResult transfer_eval(const std::map<CategoryPair, std::string>& suffixes_from_a,
                             const EncoderBackend& backend_b, const TextTokenizer& tokenizer_b,
                             const ImageCatalog& catalog, const Detector& detector, const Matcher* matcher,
                             ProtocolConfig config);

nlohmann::json to_json(const Aggregates& a);
nlohmann::json to_json(const EvalReport& report);
nlohmann::json to_json(const ProtocolResult& result);
nlohmann::json to_json(const UniversalityMatrix& matrix);

} // namespace suffixlab
