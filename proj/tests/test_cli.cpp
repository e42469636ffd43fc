// Copyright 2026 The suffixlab Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "suffixlab/ablation.hpp"
#include "suffixlab/cli.hpp"

using namespace suffixlab;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code = 0;
    std::string out;
    std::string err;
};

Run cli(std::vector<std::string> args) {
    args.insert(args.begin(), "suffixlab");
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "suffixlab_cli_test" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_file(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

// Reference image vector for desk instance 0, written as a .vec file.
fs::path image_file(const fs::path& dir) {
    const ReferenceBackend backend;
    const auto inst = make_desk_instance(backend, 0);
    std::ostringstream s;
    s.precision(17);
    for (double x : *inst.reference_image.embedding) s << x << "\n";
    const auto p = dir / "ref.vec";
    write_file(p, s.str());
    return p;
}

} // namespace

TEST_CASE("exit codes for usage errors") {
    CHECK(cli({}).code == kExitUsage);
    CHECK(cli({"bogus"}).code == kExitUsage);
    CHECK(cli({"attack", "--no-such-flag"}).code == kExitUsage);
    CHECK(cli({"filter-vocab"}).code == kExitUsage); // missing target
    CHECK(cli({"filter-vocab", "--target", "999"}).code == kExitUsage);
    CHECK(cli({"filter-vocab", "--target", "5", "--top-k", "x"}).code == kExitUsage);
    const auto r = cli({"attack", "--target", "5", "--prompt-ids", "1,2"});
    CHECK(r.code == kExitUsage);
    CHECK(r.err.find("--image") != std::string::npos);
    CHECK(cli({"--help"}).code == kExitOk);
    const auto h = cli({"attack", "--help"});
    CHECK(h.code == kExitOk);
    CHECK(h.out.find("--lambda") != std::string::npos);
}

TEST_CASE("filter-vocab top-3 and top-0") {
    const auto r = cli({"filter-vocab", "--target", "5", "--top-k", "3"});
    REQUIRE(r.code == kExitOk);
    const auto doc = json::parse(r.out);
    CHECK(doc["format_version"] == 1);
    REQUIRE(doc["removed"].size() == 3);
    CHECK(doc["removed"][0]["id"] == 5);
    CHECK(doc["removed"][1]["id"] == 47);
    CHECK(doc["removed"][2]["id"] == 9);
    CHECK(doc["allowed_ids"].size() == 61);

    const auto z = json::parse(cli({"filter-vocab", "--target", "tok05", "--top-k", "0"}).out);
    CHECK(z["removed"].empty());
    CHECK(std::count(z["allowed_ids"].begin(), z["allowed_ids"].end(), 5) == 0);
    CHECK(z["allowed_ids"].size() == 63);
}

TEST_CASE("attack echoes defaults and is byte-identical across runs") {
    const auto dir = scratch("attack");
    const auto img = image_file(dir);
    const std::vector<std::string> args{"attack", "--target", "5", "--prompt-ids", "1,2,3,4", "--image", img.string(),
                                        "--iters", "50"};
    const auto a = cli(args);
    REQUIRE_MESSAGE(a.code == kExitOk, a.err);
    const auto doc = json::parse(a.out);
    CHECK(doc["config"]["m"] == 4);
    CHECK(doc["config"]["lambda"] == 0.1);
    CHECK(doc["config"]["lr"] == 0.001);
    CHECK(doc["config"]["init"] == "synonym");
    CHECK(doc["suffix"]["ids"].size() == 4);
    CHECK(doc["loss_trace"].size() == 50);
    CHECK_FALSE(doc.contains("wall_clock_seconds"));
    CHECK(cli(args).out == a.out);

    const auto d = json::parse(cli({"attack", "--target", "5", "--prompt-ids", "1", "--image", img.string(), "--iters",
                                    "0"})
                                   .out);
    CHECK(d["config"]["iters"] == 0);
    CHECK(d["loss_trace"].size() == 1);
    CHECK(d["suffix"] == d["init_suffix"]);

    auto defaults_only = cli({"attack", "--help"}).out;
    CHECK(defaults_only.find("10000") != std::string::npos);

    auto timed = json::parse(cli({"attack", "--target", "5", "--prompt-ids", "1", "--image", img.string(), "--iters",
                                  "1", "--record-timing"})
                                 .out);
    CHECK(timed.contains("wall_clock_seconds"));
}

TEST_CASE("attack baselines") {
    for (const std::string method : {"none", "random", "gcg"}) {
        const auto r = cli({"attack", "--method", method, "--target", "5", "--prompt-ids", "1,2", "--steps", "3"});
        REQUIRE_MESSAGE(r.code == kExitOk, r.err);
        const auto doc = json::parse(r.out);
        CHECK(doc["suffix"]["ids"].size() == (method == "none" ? 0u : 4u));
        CHECK(doc["best_loss"].is_null());
    }
    const auto g = cli({"attack", "--method", "genetic", "--target", "5", "--prompt-ids", "1,2", "--generations", "3"});
    REQUIRE_MESSAGE(g.code == kExitOk, g.err);
    CHECK(cli({"attack", "--method", "genetic", "--genetic-mode", "character", "--target", "5", "--prompt-ids", "1"})
              .code == kExitUsage);
}

TEST_CASE("config file precedence and unknown keys") {
    const auto dir = scratch("config");
    const auto img = image_file(dir);
    write_file(dir / "cfg.json", R"({"m": 2, "lambda": 0.5, "iters": 3})");
    const auto r = cli({"attack", "--config", (dir / "cfg.json").string(), "--lambda", "0.25", "--target", "5",
                        "--prompt-ids", "1", "--image", img.string()});
    REQUIRE_MESSAGE(r.code == kExitOk, r.err);
    const auto doc = json::parse(r.out);
    CHECK(doc["config"]["m"] == 2);        // from file
    CHECK(doc["config"]["lambda"] == 0.25); // flag wins
    CHECK(doc["config"]["lr"] == 0.001);    // default

    write_file(dir / "bad.json", R"({"learning_rate": 0.1})");
    const auto bad = cli({"attack", "--config", (dir / "bad.json").string(), "--target", "5", "--prompt-ids", "1",
                          "--image", img.string()});
    CHECK(bad.code == kExitUsage);
    CHECK(bad.err.find("learning_rate") != std::string::npos);

    write_file(dir / "typed.json", R"({"m": "two"})");
    CHECK(cli({"attack", "--config", (dir / "typed.json").string()}).code == kExitUsage);
    CHECK(cli({"attack", "--config", (dir / "missing.json").string()}).code == kExitUsage);
}

TEST_CASE("output file and runtime failures") {
    const auto dir = scratch("out");
    const auto path = dir / "f.json";
    REQUIRE(cli({"filter-vocab", "--target", "5", "--out", path.string()}).code == kExitOk);
    CHECK(json::parse(read_file(path))["target"]["id"] == 5);
    // unwritable output path is a runtime failure, not a usage error
    CHECK(cli({"filter-vocab", "--target", "5", "--out", (dir / "no" / "such" / "f.json").string()}).code ==
          kExitRuntime);
}

TEST_CASE("analyze writes a 2x2 grid and reports template lines") {
    const auto dir = scratch("analyze");
    write_file(dir / "t.txt", "tok01 {} tok02\n\ntok03 {}\n");
    const auto r = cli({"analyze", "--templates", (dir / "t.txt").string(), "--subjects", "tok10,tok11", "--out",
                        (dir / "a").string()});
    REQUIRE_MESSAGE(r.code == kExitOk, r.err);
    const auto emb = read_file(dir / "a" / "embeddings.csv");
    CHECK(std::count(emb.begin(), emb.end(), '\n') == 5);
    const auto dist = read_file(dir / "a" / "distances.csv");
    CHECK(dist.rfind("id,0,1,2,3\n", 0) == 0);
    const auto doc = json::parse(read_file(dir / "a" / "analysis.json"));
    CHECK(doc["prompts"] == 4);
    CHECK(doc["subject_separation"]["ratio"].is_number());

    // single prompt: separation undefined, still succeeds
    write_file(dir / "one.txt", "tok01 {}\n");
    REQUIRE(cli({"analyze", "--templates", (dir / "one.txt").string(), "--subjects", "tok10", "--out",
                 (dir / "b").string()})
                .code == kExitOk);
    CHECK(json::parse(read_file(dir / "b" / "analysis.json"))["subject_separation"].contains("undefined"));

    write_file(dir / "bad.txt", "tok01 {}\nno slot here\n");
    const auto bad = cli({"analyze", "--templates", (dir / "bad.txt").string(), "--subjects", "tok10", "--out",
                          (dir / "c").string()});
    CHECK(bad.code == kExitUsage);
    CHECK(bad.err.find("bad.txt:2") != std::string::npos);
}

TEST_CASE("eval over a directory catalog") {
    const auto dir = scratch("eval");
    fs::create_directories(dir / "imgs" / "tok10__tok11");
    write_file(dir / "imgs" / "manifest.json", R"({"format_version": 1, "sets": {"tok10__tok11": 2}})");
    for (int i = 0; i < 2; ++i) {
        std::string v;
        for (int k = 0; k < 16; ++k) v += (k == i ? "1 " : "0 ");
        write_file(dir / "imgs" / "tok10__tok11" / (std::to_string(i) + ".vec"), v);
    }
    write_file(dir / "det.json",
               R"({"labels": ["tok10", "tok11"], "sets": {"tok10__tok11": [{"count": 1, "labels": ["tok11"]}]}})");
    write_file(dir / "sfx.json", R"({"tok10__tok11": "tok20 tok21"})");
    const std::vector<std::string> base{"--images", (dir / "imgs").string(), "--detector", (dir / "det.json").string(),
                                        "--suffixes", (dir / "sfx.json").string(), "--categories", "tok10,tok11"};
    auto args = base;
    args.insert(args.begin(), "eval");
    const auto r = cli(args);
    REQUIRE_MESSAGE(r.code == kExitOk, r.err);
    const auto doc = json::parse(r.out);
    CHECK(doc["report"]["partial"] == true); // reverse pair has no suffix
    CHECK(doc["report"]["aggregates"]["both"] == 0.5);
    CHECK(doc["report"]["aggregates"]["matcher"] == "unavailable");

    args = base;
    args.insert(args.begin(), "transfer");
    const auto t = json::parse(cli(args).out);
    CHECK(t["report"]["mode"] == "transfer");
    CHECK(t["report"]["aggregates"]["both"] == 0.5);
}

TEST_CASE("ablate writes CSV and a config sidecar") {
    const auto dir = scratch("ablate");
    const auto path = dir / "sweep.csv";
    const auto r = cli({"ablate", "--kind", "init", "--runs", "2", "--iters", "5", "--jobs", "2", "--out",
                        path.string()});
    REQUIRE_MESSAGE(r.code == kExitOk, r.err);
    const auto csv = read_file(path);
    CHECK(csv.rfind("variant,lambda,init,runs,", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
    CHECK(json::parse(read_file(dir / "sweep.csv.json"))["config"]["runs"] == 2);
    CHECK(cli({"ablate", "--kind", "nope"}).code == kExitUsage);
}
