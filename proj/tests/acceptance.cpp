// Acceptance gate: nine pipeline-level checks with pinned tolerances, printed
// one PASS/FAIL line each. Exits nonzero if any check fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "umr/datamodel.hpp"
#include "umr/embed.hpp"
#include "umr/enhance.hpp"
#include "umr/eval.hpp"
#include "umr/gateway.hpp"
#include "umr/index.hpp"
#include "umr/mock_server.hpp"
#include "umr/prompts.hpp"
#include "umr/synth.hpp"
#include "umr/util.hpp"

namespace {

using namespace umr;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        std::string tmpl =
            (std::filesystem::temp_directory_path() / "umr_accept_XXXXXX").string();
        char* made = mkdtemp(tmpl.data());
        if (!made) throw std::runtime_error("mkdtemp failed");
        path = made;
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
};

int g_failures = 0;

void report(int criterion, const std::string& label, bool ok, const std::string& detail) {
    std::printf("%s  criterion %d: %s (%s)\n", ok ? "PASS" : "FAIL", criterion, label.c_str(),
                detail.c_str());
    std::fflush(stdout);
    if (!ok) ++g_failures;
}

template <typename Fn>
void guarded(int criterion, const std::string& label, Fn fn) {
    try {
        fn();
    } catch (const std::exception& e) {
        report(criterion, label, false, std::string("exception: ") + e.what());
    }
}

embed::Vec random_vec(util::SplitMix64& rng, int dim) {
    embed::Vec v(dim);
    for (auto& x : v) x = rng.gaussian();
    return v;
}

// ---------------------------------------------------------------------------
// 1. Search exactness against a brute-force oracle.

std::vector<index::SearchEntry> brute_force_topk(
    const std::vector<std::pair<std::string, embed::Vec>>& rows, const embed::Vec& q, int k) {
    std::vector<index::SearchEntry> all;
    for (const auto& [did, vec] : rows) all.push_back({did, embed::dot(vec, q)});
    std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.did < b.did;
    });
    if (static_cast<int>(all.size()) > k) all.resize(k);
    return all;
}

void criterion_search_exactness() {
    auto start = Clock::now();
    util::SplitMix64 rng(2026);
    double max_err = 0.0;
    bool ids_match = true;
    for (int trial = 0; trial < 100 && ids_match; ++trial) {
        int n = 1 + static_cast<int>(rng.below(2000));
        int d = 2 + static_cast<int>(rng.below(63));
        int k = 1 + static_cast<int>(rng.below(50));
        std::vector<std::pair<std::string, embed::Vec>> rows;
        rows.reserve(n);
        for (int i = 0; i < n; ++i)
            rows.emplace_back("d" + std::to_string(100000 + i), random_vec(rng, d));
        auto idx = index::VectorIndex::build(rows);

        int nq = 1 + static_cast<int>(rng.below(4));
        std::vector<embed::Vec> queries;
        for (int i = 0; i < nq; ++i) queries.push_back(random_vec(rng, d));
        int threads = 1 + static_cast<int>(rng.below(8));
        auto results = idx.batch_search(queries, k, threads);

        for (int i = 0; i < nq && ids_match; ++i) {
            auto want = brute_force_topk(rows, queries[i], k);
            const auto& got = results[i].entries;
            if (got.size() != want.size()) {
                ids_match = false;
                break;
            }
            for (size_t j = 0; j < want.size(); ++j) {
                if (got[j].did != want[j].did) {
                    ids_match = false;
                    break;
                }
                max_err = std::max(max_err, std::abs(got[j].score - want[j].score));
            }
        }
    }
    double elapsed = seconds_since(start);
    bool ok = ids_match && max_err <= 1e-12 && elapsed < 10.0;
    char detail[160];
    std::snprintf(detail, sizeof(detail),
                  "100 instances, N<=2000, k<=50; ids %s, max score err %.2e <= 1e-12, %.1fs < 10s",
                  ids_match ? "identical" : "DIVERGED", max_err, elapsed);
    report(1, "exact top-k search matches the brute-force oracle", ok, detail);
}

// ---------------------------------------------------------------------------
// 2. Analytic InfoNCE gradients against central finite differences.

double fd_relative_error(const embed::TwoTowerModel& model, const std::vector<embed::Vec>& q_raw,
                         const std::vector<embed::Vec>& d_raw,
                         const std::vector<embed::Vec>& extras, bool symmetric) {
    const double h = 1e-5;
    auto analytic = embed::infonce_loss(model, q_raw, d_raw, extras, symmetric);
    double worst = 0.0;
    for (int tower = 0; tower < 2; ++tower) {
        std::vector<double> embed::TwoTowerModel::*w =
            tower == 0 ? &embed::TwoTowerModel::w_q : &embed::TwoTowerModel::w_d;
        const std::vector<double>& grad = tower == 0 ? analytic.d_wq : analytic.d_wd;
        double diff2 = 0.0, a2 = 0.0, f2 = 0.0;
        for (size_t i = 0; i < (model.*w).size(); ++i) {
            embed::TwoTowerModel m = model;
            (m.*w)[i] += h;
            double up = embed::infonce_loss(m, q_raw, d_raw, extras, symmetric).loss;
            (m.*w)[i] -= 2 * h;
            double down = embed::infonce_loss(m, q_raw, d_raw, extras, symmetric).loss;
            double fd = (up - down) / (2 * h);
            diff2 += (grad[i] - fd) * (grad[i] - fd);
            a2 += grad[i] * grad[i];
            f2 += fd * fd;
        }
        double denom = std::max(std::sqrt(a2) + std::sqrt(f2), 1e-12);
        worst = std::max(worst, std::sqrt(diff2) / denom);
    }
    return worst;
}

void criterion_gradient_correctness() {
    auto start = Clock::now();
    double worst = 0.0;
    for (uint64_t seed = 0; seed < 10; ++seed) {
        util::SplitMix64 rng(seed * 7919 + 13);
        int d_in = 6 + static_cast<int>(rng.below(8));
        int d_out = 3 + static_cast<int>(rng.below(5));
        int b = 2 + static_cast<int>(rng.below(3));
        int m = static_cast<int>(rng.below(4));
        auto model = embed::initial_model(d_in, d_out, 0.07, seed);
        std::vector<embed::Vec> q_raw, d_raw, extras;
        for (int i = 0; i < b; ++i) {
            q_raw.push_back(random_vec(rng, d_in));
            d_raw.push_back(random_vec(rng, d_in));
        }
        for (int i = 0; i < m; ++i) extras.push_back(random_vec(rng, d_in));
        worst = std::max(worst, fd_relative_error(model, q_raw, d_raw, extras, seed % 2 == 1));
    }
    double elapsed = seconds_since(start);
    bool ok = worst < 1e-4 && elapsed < 5.0;
    char detail[160];
    std::snprintf(detail, sizeof(detail),
                  "10 seeds, both towers, h=1e-5; max relative error %.2e < 1e-4, %.1fs < 5s",
                  worst, elapsed);
    report(2, "analytic gradients match finite differences", ok, detail);
}

// ---------------------------------------------------------------------------
// 3. Prompt fidelity against the golden files, and the image-free wire rule.

std::string golden_prompt(const std::string& name) {
    return util::read_file(std::string(UMR_REPO_DIR) + "/docs/prompts/" + name);
}

std::string substituted(std::string body, const std::string& text) {
    const std::string slot = "{query_txt}";
    size_t pos = body.find(slot);
    if (pos != std::string::npos) body.replace(pos, slot.size(), text);
    return body;
}

void criterion_prompt_fidelity() {
    bool ok = true;
    std::string why = "all golden files matched";

    auto expect = [&](bool cond, const std::string& msg) {
        if (!cond && ok) {
            ok = false;
            why = msg;
        }
    };

    auto cc = prompts::build_corpus_caption_prompt("img_ref");
    expect(cc.text == golden_prompt("corpus_caption.txt"), "corpus caption diverged");
    expect(cc.image_ref == "img_ref", "corpus caption lost its image");
    auto qc = prompts::build_query_caption_prompt("img_ref");
    expect(qc.text == golden_prompt("query_caption.txt"), "query caption diverged");
    auto qa = prompts::build_qa_rewrite_prompt("When was this building built?", "img_ref");
    expect(qa.text == substituted(golden_prompt("qa_rewrite.txt"), "When was this building built?"),
           "qa rewrite diverged");
    expect(qa.image_ref == "img_ref", "qa rewrite lost its image");
    auto mod = prompts::build_modification_prompt("Remove the lemon.");
    expect(mod.text == substituted(golden_prompt("modification.txt"), "Remove the lemon."),
           "modification diverged");
    expect(!mod.image_ref.has_value(), "modification prompt carries an image ref");

    // The wire itself: a modification round trip logs zero image parts while a
    // caption round trip logs one, so the capture channel is live.
    synth::MockOracle oracle;
    oracle.answers["img_ref"] = {"ruby brass lantern", {"ruby", "brass", "lantern"}, {"dust_mote"}};
    auto server = synth::serve_mock(oracle);
    gateway::VlmGatewayConfig cfg;
    cfg.endpoint_url = server->base_url();
    gateway::HttpVlmGateway gw(cfg);
    auto mod_reply = gw.complete(mod);
    auto cap_reply = gw.complete(cc);
    auto log = server->log();
    expect(mod_reply.ok && cap_reply.ok, "mock round trip failed");
    expect(log.size() == 2, "expected two captured requests");
    if (log.size() == 2) {
        expect(log[0].image_parts == 0, "modification request carried an image on the wire");
        expect(log[0].image_urls.empty(), "modification request carried an image url");
        expect(log[1].image_parts == 1, "caption request lost its image on the wire");
    }

    report(3, "built prompts match the golden templates byte-for-byte", ok,
           ok ? "4 templates + image-free modification wire confirmed" : why);
}

// ---------------------------------------------------------------------------
// 4. Routing identity for pass-through entries and the caption-append rule.

struct CountingGateway final : gateway::VlmGateway {
    gateway::VlmGatewayConfig cfg_;
    int calls = 0;
    gateway::GatewayReply complete(const gateway::PromptMessage&) override {
        ++calls;
        return {false, "", "unexpected gateway call", 1};
    }
    const gateway::VlmGatewayConfig& config() const override { return cfg_; }
};

void criterion_routing_identity() {
    bool ok = true;
    std::string why = "identity and append rules hold";
    auto expect = [&](bool cond, const std::string& msg) {
        if (!cond && ok) {
            ok = false;
            why = msg;
        }
    };

    data::SidecarStore sidecars;
    enhance::EnhancementCache cache;
    CountingGateway counting;

    data::Document text_doc{"d1", "A weathered oak bench under late light.", std::nullopt,
                            data::Modality::Text, std::nullopt};
    auto doc_rec = enhance::enhance_corpus(text_doc, counting, cache, sidecars);
    expect(doc_rec.enhanced_text == *text_doc.text, "text document was altered");
    expect(!doc_rec.fallback && doc_rec.category == data::Category::I,
           "text document left the identity route");

    data::Query q;
    q.qid = "q1";
    q.text = "magnolia trees in bloom along a brick path";
    q.modality = data::Modality::Text;
    q.task_id = "t";
    auto q_rec = enhance::enhance_query(q, counting, cache, sidecars);
    expect(q_rec.enhanced_text == *q.text, "text query was altered");
    expect(counting.calls == 0, "identity routing still called the gateway");

    synth::SynthConfig sc;
    sc.n_entities = 4;
    sc.seed = 17;
    auto world = synth::generate_world(sc);
    const auto& entity = world.entities.front();
    synth::MockVlm mock(synth::MockOracle::from_world(world));

    data::Document pair_doc{"d2", "hand-carved relief", entity.image_ref,
                            data::Modality::ImageText, std::nullopt};
    auto rec = enhance::enhance_corpus(pair_doc, mock, cache, sidecars);
    std::string caption = synth::mock_vlm_reply(
        mock.oracle(), prompts::build_corpus_caption_prompt(entity.image_ref).text,
        entity.image_ref);
    expect(rec.enhanced_text == "hand-carved relief\nVisual Context: " + caption,
           "caption append rule diverged");

    report(4, "category routing keeps pass-through entries byte-identical", ok,
           ok ? "identity untouched, zero gateway calls, append rule exact" : why);
}

// ---------------------------------------------------------------------------
// 5. Recall metric on a hand-built fixture plus monotonicity in k.

void criterion_recall_metric() {
    bool ok = true;
    std::string why;

    eval::Benchmark bench;
    data::TaskSpec spec;
    spec.task_id = "t";
    spec.name = "fixture";
    spec.pool_id = "p";
    spec.cutoffs = {1, 5};
    bench.tasks.tasks.emplace("t", spec);
    auto add_doc = [&](const std::string& did, const std::string& text) {
        bench.pools["p"].push_back({did, text, std::nullopt, data::Modality::Text, std::nullopt});
    };
    auto add_query = [&](const std::string& qid, const std::string& text, const std::string& pos) {
        data::Query q;
        q.qid = qid;
        q.text = text;
        q.modality = data::Modality::Text;
        q.task_id = "t";
        q.positives = {pos};
        bench.queries.push_back(q);
    };
    add_doc("hit1", "ember glow");
    add_doc("hit2", "quiet harbor");
    add_doc("hit3", "velvet moth");
    for (int i = 0; i < 6; ++i) add_doc("decoy" + std::to_string(i), "alpha");
    add_doc("lost1", "omega");
    add_doc("lost2", "sigma");
    add_query("q1", "ember glow", "hit1");
    add_query("q2", "quiet harbor", "hit2");
    add_query("q3", "velvet moth", "hit3");
    add_query("q4", "alpha", "lost1");
    add_query("q5", "alpha", "lost2");

    auto report_fixture =
        eval::run_eval(bench, nullptr, embed::identity_model(256), {42, 256},
                       eval::make_run_config(eval::AblationMode::Baseline));
    double got = report_fixture.macro.at(5);
    if (got != 0.6) {
        ok = false;
        why = "macro R@5 = " + util::format_double(got) + ", wanted 0.6";
    }

    util::SplitMix64 rng(404);
    for (int trial = 0; trial < 1000 && ok; ++trial) {
        index::SearchResult ranked;
        double score = 100.0;
        std::vector<std::string> dids;
        for (int i = 0; i < 20; ++i) dids.push_back("d" + std::to_string(i));
        util::shuffle(dids, rng);
        for (const auto& did : dids) ranked.entries.push_back({did, score--});
        std::set<std::string> positives{"d" + std::to_string(rng.below(25))};
        int prev = 0;
        for (int k : {1, 3, 10, 50}) {
            int r = eval::recall_at_k(ranked, positives, k);
            if (r < prev) {
                ok = false;
                why = "recall decreased in k";
                break;
            }
            prev = r;
        }
    }

    report(5, "recall@k matches hand-computed values and is monotone in k", ok,
           ok ? "fixture macro R@5 = 0.6; 1000 random rankings monotone" : why);
}

// ---------------------------------------------------------------------------
// 6-8. The five-seed ablation pipeline, its shift finding, and determinism.

struct SeedOutcome {
    std::map<std::string, double> macro_r5;
    std::map<std::string, std::string> csv;
};

SeedOutcome run_pipeline(uint64_t seed) {
    TempDir tmp;
    synth::SynthConfig sc;
    sc.n_entities = 200;
    sc.distractors_per_entity = 3;
    sc.caption_noise = 0.2;
    sc.seed = seed;
    auto world = synth::generate_world(sc);
    synth::emit_benchmark(world, tmp.path.string());
    auto bench = eval::load_benchmark(tmp.path.string());

    synth::MockVlm gw(synth::MockOracle::from_world(world));
    enhance::EnhancementCache cache;
    auto stores = eval::enhance_benchmark(bench, gw, cache);

    embed::TokenHasher hasher{42, 256};
    using eval::AblationMode;
    std::map<std::string, embed::TwoTowerModel> models;
    for (auto mode : {AblationMode::Baseline, AblationMode::QOnly, AblationMode::COnly,
                      AblationMode::Full}) {
        auto rc = eval::make_run_config(mode, "", seed);
        auto pairs = eval::build_train_pairs(bench, stores, rc.train_enhanced_queries,
                                             rc.train_enhanced_corpus);
        auto pool = eval::build_negative_pool(bench, stores, rc.train_enhanced_corpus);
        embed::TrainConfig tc;
        tc.seed = seed;
        auto init = embed::initial_model(hasher.dim, 128, tc.tau, seed);
        models[eval::to_string(mode)] = embed::train(init, pairs, pool, tc, hasher);
    }

    SeedOutcome out;
    for (auto mode : {AblationMode::Baseline, AblationMode::QOnly, AblationMode::COnly,
                      AblationMode::Full, AblationMode::InferenceOnly}) {
        auto rc = eval::make_run_config(mode, "", seed);
        const std::string model_key =
            mode == AblationMode::InferenceOnly ? "baseline" : eval::to_string(mode);
        auto rep = eval::run_eval(bench, &stores, models.at(model_key), hasher, rc);
        out.macro_r5[eval::to_string(mode)] = rep.macro.at(5);
        out.csv[eval::to_string(mode)] = eval::render_report(rep, eval::ReportFormat::Csv);
    }
    return out;
}

void criteria_directional_and_determinism() {
    auto start = Clock::now();
    const std::vector<uint64_t> seeds{1, 2, 3, 4, 5};
    std::vector<SeedOutcome> outcomes;
    try {
        for (uint64_t seed : seeds) {
            outcomes.push_back(run_pipeline(seed));
            const auto& m = outcomes.back().macro_r5;
            std::printf(
                "    seed %llu: baseline=%.3f q-only=%.3f c-only=%.3f full=%.3f "
                "inference-only=%.3f\n",
                static_cast<unsigned long long>(seed), m.at("baseline"), m.at("q-only"),
                m.at("c-only"), m.at("full"), m.at("inference-only"));
            std::fflush(stdout);
        }
    } catch (const std::exception& e) {
        std::string detail = std::string("pipeline exception: ") + e.what();
        report(6, "enhancement ablations order as published on 5 seeds", false, detail);
        report(7, "enhanced-eval-only scoring degrades against full", false, detail);
        report(8, "identical seeds reproduce byte-identical CSV reports", false, detail);
        return;
    }
    double elapsed = seconds_since(start);

    int full_wins = 0, q_holds = 0, c_holds = 0, io_drops = 0;
    for (const auto& o : outcomes) {
        const auto& m = o.macro_r5;
        full_wins += m.at("full") > m.at("baseline") ? 1 : 0;
        q_holds += m.at("q-only") >= m.at("baseline") ? 1 : 0;
        c_holds += m.at("c-only") >= m.at("baseline") ? 1 : 0;
        io_drops += m.at("inference-only") < m.at("full") ? 1 : 0;
    }

    {
        bool ok = full_wins >= 4 && q_holds >= 3 && c_holds >= 3 && elapsed < 300.0;
        char detail[200];
        std::snprintf(detail, sizeof(detail),
                      "full>baseline %d/5 (need >=4), q-only>=baseline %d/5 (need >=3), "
                      "c-only>=baseline %d/5 (need >=3), %.0fs < 300s",
                      full_wins, q_holds, c_holds, elapsed);
        report(6, "enhancement ablations order as published on 5 seeds", ok, detail);
    }
    {
        bool ok = io_drops >= 4;
        char detail[120];
        std::snprintf(detail, sizeof(detail),
                      "inference-only<full %d/5 (need >=4): train/eval distribution shift degrades",
                      io_drops);
        report(7, "enhanced-eval-only scoring degrades against full", ok, detail);
    }
    try {
        auto again = run_pipeline(seeds[0]);
        bool ok = again.csv == outcomes[0].csv;
        report(8, "identical seeds reproduce byte-identical CSV reports", ok,
               ok ? "5 ablation CSVs from two seed-1 pipeline runs compared equal"
                  : "seed-1 rerun CSVs diverged");
    } catch (const std::exception& e) {
        report(8, "identical seeds reproduce byte-identical CSV reports", false,
               std::string("pipeline exception: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// 9. Hard-negative mining: completes, checks out, changes the optimum.

void criterion_hard_negatives() {
    bool ok = true;
    std::string why;
    auto expect = [&](bool cond, const std::string& msg) {
        if (!cond && ok) {
            ok = false;
            why = msg;
        }
    };

    // Mining oracle on 50-doc fixtures.
    util::SplitMix64 rng(71);
    for (int trial = 0; trial < 20 && ok; ++trial) {
        std::vector<std::pair<std::string, embed::Vec>> rows;
        for (int i = 0; i < 50; ++i) {
            auto v = random_vec(rng, 16);
            embed::l2_normalize(v);
            rows.emplace_back("doc" + std::to_string(100 + i), v);
        }
        auto idx = index::VectorIndex::build(rows);
        std::set<std::string> positives;
        for (uint64_t i = rng.below(5); i > 0; --i)
            positives.insert("doc" + std::to_string(100 + rng.below(50)));
        auto q = random_vec(rng, 16);
        int n = 1 + static_cast<int>(rng.below(10));
        auto got = embed::sample_hard_negatives(q, positives, idx, n);

        auto all = brute_force_topk(rows, q, 50);
        std::vector<std::string> want;
        for (const auto& e : all)
            if (!positives.count(e.did) && static_cast<int>(want.size()) < n)
                want.push_back(e.did);
        expect(got == want, "mined negatives diverged from the brute-force oracle");
    }

    // Gradients stay correct with extra negatives in every denominator.
    double worst = 0.0;
    for (uint64_t seed = 20; seed < 23; ++seed) {
        util::SplitMix64 grng(seed);
        auto model = embed::initial_model(10, 5, 0.07, seed);
        std::vector<embed::Vec> q_raw, d_raw, extras;
        for (int i = 0; i < 3; ++i) {
            q_raw.push_back(random_vec(grng, 10));
            d_raw.push_back(random_vec(grng, 10));
        }
        for (int i = 0; i < 2; ++i) extras.push_back(random_vec(grng, 10));
        worst = std::max(worst, fd_relative_error(model, q_raw, d_raw, extras, false));
    }
    expect(worst < 1e-4, "gradient check failed with mined negatives present");

    // End to end on a synthetic benchmark: completes and moves the optimum.
    TempDir tmp;
    synth::SynthConfig sc;
    sc.n_entities = 50;
    sc.distractors_per_entity = 2;
    sc.caption_noise = 0.2;
    sc.seed = 3;
    auto world = synth::generate_world(sc);
    synth::emit_benchmark(world, tmp.path.string());
    auto bench = eval::load_benchmark(tmp.path.string());
    synth::MockVlm gw(synth::MockOracle::from_world(world));
    enhance::EnhancementCache cache;
    auto stores = eval::enhance_benchmark(bench, gw, cache);
    auto rc = eval::make_run_config(eval::AblationMode::Full, "", 3);
    auto pairs = eval::build_train_pairs(bench, stores, rc.train_enhanced_queries,
                                         rc.train_enhanced_corpus);
    auto pool = eval::build_negative_pool(bench, stores, rc.train_enhanced_corpus);
    embed::TokenHasher hasher{42, 256};
    auto init = embed::initial_model(256, 128, 0.07, 3);
    embed::TrainConfig tc;
    tc.seed = 3;
    tc.epochs = 3;
    auto plain = embed::train(init, pairs, pool, tc, hasher);
    tc.hard_negatives_per_query = 2;
    auto mined = embed::train(init, pairs, pool, tc, hasher);
    expect(mined.w_q != plain.w_q || mined.w_d != plain.w_d,
           "mining had no effect on the checkpoint");
    expect(mined.w_q != init.w_q, "mined training never left the initial weights");

    char detail[200];
    std::snprintf(detail, sizeof(detail),
                  "20 mining fixtures exact, grad err %.2e < 1e-4, checkpoint moved", worst);
    report(9, "hard-negative mining works end to end", ok, ok ? detail : why.c_str());
}

}  // namespace

int main() {
    guarded(1, "exact top-k search matches the brute-force oracle", criterion_search_exactness);
    guarded(2, "analytic gradients match finite differences", criterion_gradient_correctness);
    guarded(3, "built prompts match the golden templates byte-for-byte", criterion_prompt_fidelity);
    guarded(4, "category routing keeps pass-through entries byte-identical",
            criterion_routing_identity);
    guarded(5, "recall@k matches hand-computed values and is monotone in k",
            criterion_recall_metric);
    criteria_directional_and_determinism();  // reports 6, 7 and 8 itself
    guarded(9, "hard-negative mining works end to end", criterion_hard_negatives);

    if (g_failures == 0) {
        std::printf("acceptance: all 9 criteria passed\n");
        return 0;
    }
    std::printf("acceptance: %d criterion(s) FAILED\n", g_failures);
    return 1;
}
