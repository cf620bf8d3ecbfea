#include <cstdio>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "doctest.h"
#include "helpers.hpp"
#include "json.hpp"
#include "umr/util.hpp"

using namespace umr;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct CmdResult {
    int exit_code = -1;
    std::string output;  // stdout and stderr interleaved
};

CmdResult run_cli(const std::string& args) {
    std::string cmd = std::string("\"") + UMR_CLI_PATH + "\" " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    CmdResult res;
    char buf[4096];
    size_t n;
    while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0) res.output.append(buf, n);
    int status = pclose(pipe);
    res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return res;
}

// relative path -> file bytes, for whole-tree comparisons
std::map<std::string, std::string> snapshot_tree(const std::string& root) {
    std::map<std::string, std::string> out;
    for (const auto& entry : fs::recursive_directory_iterator(root))
        if (entry.is_regular_file())
            out[fs::relative(entry.path(), root).string()] =
                util::read_file(entry.path().string());
    return out;
}

std::string gen_benchmark(const TempDir& tmp, const std::string& rel,
                          const std::string& extra = "") {
    std::string dir = tmp.str(rel);
    auto gen = run_cli("synth gen --out " + dir + " --entities 6 --distractors 1 --seed 5 " + extra);
    INFO(gen.output);
    REQUIRE(gen.exit_code == 0);
    return dir;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("the version flag reports the tool version") {
    auto res = run_cli("--version");
    CHECK(res.exit_code == 0);
    CHECK(res.output == "umr 0.1.0\n");
}

TEST_CASE("benchmark generation is reproducible") {
    TempDir tmp;
    std::string a = gen_benchmark(tmp, "a");
    std::string b = gen_benchmark(tmp, "b");
    auto ta = snapshot_tree(a);
    auto tb = snapshot_tree(b);
    CHECK(ta.size() > 5);  // manifest, pools, queries, tasks, answers, sidecars
    CHECK(ta == tb);
    CHECK(ta.count("manifest.json") == 1);
    CHECK(ta.count("config.lock.json") == 1);

    std::string c = gen_benchmark(tmp, "c", "--caption-noise 0.5");
    CHECK(snapshot_tree(c) != ta);  // config is part of the output
}

TEST_CASE("config files feed defaults and flags override them") {
    TempDir tmp;
    util::write_file(tmp.str("cfg.json"), R"({"synth": {"entities": 4, "seed": 5}})");

    auto from_file = run_cli("--config " + tmp.str("cfg.json") + " synth gen --out " +
                             tmp.str("d1") + " --distractors 1");
    INFO(from_file.output);
    REQUIRE(from_file.exit_code == 0);
    json m1 = json::parse(util::read_file(tmp.str("d1/manifest.json")));
    CHECK(m1.at("config").at("n_entities").get<int>() == 4);

    auto overridden = run_cli("--config " + tmp.str("cfg.json") + " synth gen --out " +
                              tmp.str("d2") + " --distractors 1 --entities 6");
    REQUIRE(overridden.exit_code == 0);
    json m2 = json::parse(util::read_file(tmp.str("d2/manifest.json")));
    CHECK(m2.at("config").at("n_entities").get<int>() == 6);

    util::write_file(tmp.str("bad.json"), R"({"train": {"lrr": 0.1}})");
    auto bad = run_cli("--config " + tmp.str("bad.json") + " synth gen --out " + tmp.str("d3"));
    CHECK(bad.exit_code == 1);
    CHECK(bad.output.find("unknown key 'train.lrr'") != std::string::npos);

    util::write_file(tmp.str("badsec.json"), R"({"turbo": {}})");
    auto badsec = run_cli("--config " + tmp.str("badsec.json") + " synth gen --out " + tmp.str("d4"));
    CHECK(badsec.exit_code == 1);
    CHECK(badsec.output.find("unknown section 'turbo'") != std::string::npos);
}

TEST_CASE("usage errors exit nonzero with a pointer to the fix") {
    TempDir tmp;
    auto no_out = run_cli("synth gen");
    CHECK(no_out.exit_code != 0);
    CHECK(no_out.output.find("--out") != std::string::npos);

    auto bad_side = run_cli("enhance --side middle --in x --out y");
    CHECK(bad_side.exit_code != 0);

    util::write_file(tmp.str("x.jsonl"),
                     R"({"did":"d1","txt":"x","img_path":null,"modality":"text"})" "\n");
    auto no_gateway = run_cli("enhance --side corpus --in " + tmp.str("x.jsonl") + " --out " +
                              tmp.str("y.jsonl"));
    CHECK(no_gateway.exit_code == 1);
    CHECK(no_gateway.output.find("no gateway") != std::string::npos);

    auto no_bench = run_cli("train --bench " + tmp.str("nowhere") + " --out " + tmp.str("t"));
    CHECK(no_bench.exit_code == 1);
    CHECK(no_bench.output.find("no benchmark manifest") != std::string::npos);

    std::string bench = gen_benchmark(tmp, "bench");
    auto needs_enhanced = run_cli("train --bench " + bench + " --mode full --out " + tmp.str("t2"));
    CHECK(needs_enhanced.exit_code == 1);
    CHECK(needs_enhanced.output.find("pass --enhanced") != std::string::npos);

    auto no_ckpt = run_cli("eval --bench " + bench + " --checkpoint " + tmp.str("ghost.json") +
                           " --out " + tmp.str("e"));
    CHECK(no_ckpt.exit_code == 1);
    CHECK(no_ckpt.output.find("checkpoint") != std::string::npos);
    CHECK(no_ckpt.output.find("umr train") != std::string::npos);
}

TEST_CASE("zero learning rate leaves the initial checkpoint untouched") {
    TempDir tmp;
    std::string bench = gen_benchmark(tmp, "bench");
    auto tr = run_cli("train --bench " + bench + " --out " + tmp.str("t") +
                      " --lr 0 --epochs 1 --dim 64 --proj-dim 32");
    INFO(tr.output);
    REQUIRE(tr.exit_code == 0);
    CHECK(tr.output.find("pairs=18") != std::string::npos);
    CHECK(util::read_file(tmp.str("t/model.json")) == util::read_file(tmp.str("t/model_init.json")));
}

TEST_CASE("the mock-backed pipeline runs end to end") {
    TempDir tmp;
    std::string bench = gen_benchmark(tmp, "bench");
    std::string mock = " --mock-world " + bench;
    std::string cache = " --cache-dir " + tmp.str("cache");

    // Text pool: six identity passes plus six captioned image+text docs.
    auto text1 = run_cli("enhance --side corpus --in " + bench + "/corpus_text.jsonl --out " +
                         tmp.str("rec_text.jsonl") + mock + cache);
    INFO(text1.output);
    REQUIRE(text1.exit_code == 0);
    CHECK(text1.output.find("total=12 enhanced=12 cached=0 fallback=0 gateway_calls=6") !=
          std::string::npos);

    // Warm rerun: everything comes back from the persistent cache.
    auto text2 = run_cli("enhance --side corpus --in " + bench + "/corpus_text.jsonl --out " +
                         tmp.str("rec_text2.jsonl") + mock + cache);
    REQUIRE(text2.exit_code == 0);
    CHECK(text2.output.find("total=12 enhanced=0 cached=12 fallback=0 gateway_calls=0") !=
          std::string::npos);
    CHECK(util::read_file(tmp.str("rec_text.jsonl")) == util::read_file(tmp.str("rec_text2.jsonl")));

    auto img = run_cli("enhance --side corpus --in " + bench + "/corpus_image.jsonl --out " +
                       tmp.str("rec_img.jsonl") + mock + cache);
    INFO(img.output);
    REQUIRE(img.exit_code == 0);
    CHECK(img.output.find("total=12 enhanced=12 cached=0 fallback=0 gateway_calls=12") !=
          std::string::npos);

    // Caption-task queries carry the same text as the text documents, so the
    // content-addressed cache already holds their identity records.
    auto queries = run_cli("enhance --side queries --in " + bench + "/queries.jsonl --out " +
                           tmp.str("rec_q.jsonl") + mock + cache + " --tasks " + bench +
                           "/tasks.json");
    INFO(queries.output);
    REQUIRE(queries.exit_code == 0);
    CHECK(queries.output.find("total=18 enhanced=12 cached=6 fallback=0 gateway_calls=12") !=
          std::string::npos);

    std::string enhanced = " --enhanced " + tmp.str("rec_text.jsonl") + " " +
                           tmp.str("rec_img.jsonl") + " " + tmp.str("rec_q.jsonl");
    auto tr = run_cli("train --bench " + bench + " --mode full --out " + tmp.str("t") +
                      " --epochs 2 --dim 64 --proj-dim 32" + enhanced);
    INFO(tr.output);
    REQUIRE(tr.exit_code == 0);
    CHECK(tr.output.find("pairs=18") != std::string::npos);

    auto ev = run_cli("eval --bench " + bench + " --mode full --checkpoint " +
                      tmp.str("t/model.json") + " --out " + tmp.str("e_full") + enhanced);
    INFO(ev.output);
    REQUIRE(ev.exit_code == 0);
    CHECK(ev.output.find("mode=full macro R@5=") != std::string::npos);
    std::string csv = util::read_file(tmp.str("e_full/report.csv"));
    CHECK(csv.rfind("task,R@", 0) == 0);
    CHECK(csv.find("macro") != std::string::npos);

    // Default mode is baseline; spelling it out changes nothing.
    auto ev_default = run_cli("eval --bench " + bench + " --checkpoint " + tmp.str("t/model.json") +
                              " --out " + tmp.str("e_d"));
    auto ev_spelled = run_cli("eval --bench " + bench + " --mode baseline --checkpoint " +
                              tmp.str("t/model.json") + " --out " + tmp.str("e_b"));
    REQUIRE(ev_default.exit_code == 0);
    REQUIRE(ev_spelled.exit_code == 0);
    CHECK(util::read_file(tmp.str("e_d/report.csv")) == util::read_file(tmp.str("e_b/report.csv")));

    // The report command re-renders the JSON sidecar byte-for-byte.
    auto rendered = run_cli("report --in " + tmp.str("e_full/report.json") + " --format csv");
    REQUIRE(rendered.exit_code == 0);
    CHECK(rendered.output == csv);
    auto md = run_cli("report --in " + tmp.str("e_full/report.json"));
    REQUIRE(md.exit_code == 0);
    CHECK(md.output.rfind("# Recall report (mode: full)", 0) == 0);

    // Comparing a report against itself yields all-zero deltas.
    auto self_delta = run_cli("report --in " + tmp.str("e_full/report.json") + " --compare " +
                              tmp.str("e_full/report.json"));
    REQUIRE(self_delta.exit_code == 0);
    CHECK(self_delta.output.rfind("task,dR@", 0) == 0);
    for (const char* frag : {",0\n", ",0,"})
        CHECK(self_delta.output.find(frag) != std::string::npos);
}

TEST_CASE("vectors flow from embed through index build and search") {
    TempDir tmp;
    std::string bench = gen_benchmark(tmp, "bench");
    auto tr = run_cli("train --bench " + bench + " --out " + tmp.str("t") +
                      " --lr 0 --epochs 1 --dim 64 --proj-dim 32");
    REQUIRE(tr.exit_code == 0);
    std::string ckpt = tmp.str("t/model_init.json");

    auto em = run_cli("embed --side corpus --in " + bench + "/corpus_text.jsonl --out " +
                      tmp.str("vec.jsonl") + " --checkpoint " + ckpt);
    INFO(em.output);
    REQUIRE(em.exit_code == 0);
    CHECK(em.output.find("embedded=12 dim=32") != std::string::npos);

    auto ib = run_cli("index build --vectors " + tmp.str("vec.jsonl") + " --out " +
                      tmp.str("idx.bin"));
    INFO(ib.output);
    REQUIRE(ib.exit_code == 0);
    CHECK(ib.output.find("indexed=12 dim=32") != std::string::npos);

    auto is = run_cli("index search --index " + tmp.str("idx.bin") + " --vectors " +
                      tmp.str("vec.jsonl") + " --k 3 --out " + tmp.str("hits.jsonl"));
    INFO(is.output);
    REQUIRE(is.exit_code == 0);
    CHECK(is.output.find("queries=12 k=3") != std::string::npos);

    // Every vector finds a perfect-score match (itself, modulo exact ties).
    std::istringstream lines(util::read_file(tmp.str("hits.jsonl")));
    std::string line;
    size_t n_lines = 0;
    while (std::getline(lines, line)) {
        json j = json::parse(line);
        REQUIRE(j.at("hits").size() == 3);
        CHECK(j.at("hits")[0].at("score").get<double>() > 0.999);
        ++n_lines;
    }
    CHECK(n_lines == 12);

    auto missing = run_cli("index search --index " + tmp.str("ghost.bin") + " --vectors " +
                           tmp.str("vec.jsonl") + " --out " + tmp.str("h2.jsonl"));
    CHECK(missing.exit_code == 1);
    CHECK(missing.output.find("umr index build") != std::string::npos);
}

}  // TEST_SUITE
