#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "umr/datamodel.hpp"
#include "umr/embed.hpp"
#include "umr/enhance.hpp"
#include "umr/eval.hpp"
#include "umr/gateway.hpp"
#include "umr/index.hpp"
#include "umr/synth.hpp"
#include "umr/util.hpp"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr const char* kVersion = "umr 0.1.0";

// Effective settings for a run: file values overridden by flags, echoed into
// every output directory as config.lock.json.
struct Settings {
    // data
    std::string sidecar_root;
    std::string tasks;
    // gateway
    std::string endpoint;
    std::string model = "mock-vlm";
    int timeout_ms = 30000;
    int max_retries = 3;
    int max_in_flight = 4;
    int backoff_base_ms = 100;
    int max_output_tokens = 512;
    double temperature = 0.0;
    // embedder
    uint64_t hash_seed = 42;
    int dim = 256;
    int proj_dim = 128;
    double tau = 0.07;
    // train
    double lr = 0.05;
    int epochs = 8;
    int batch = 32;
    uint64_t train_seed = 0;
    int hard_negatives = 0;
    std::string optimizer = "adam";
    bool symmetric = false;
    // eval
    std::string mode = "baseline";
    uint64_t eval_seed = 0;
    // synth
    int entities = 100;
    int distractors = 3;
    double caption_noise = 0.2;
    double deixis_rate = 1.0;
    uint64_t synth_seed = 0;
};

Settings load_settings_file(const std::string& path) {
    Settings c;
    json root;
    try {
        root = json::parse(umr::util::read_file(path));
    } catch (const json::exception& e) {
        throw std::runtime_error("config " + path + ": " + e.what());
    }
    if (!root.is_object()) throw std::runtime_error("config " + path + ": expected a JSON object");

    for (const auto& [section, body] : root.items()) {
        if (!body.is_object())
            throw std::runtime_error("config: section '" + section + "' must be an object");
        auto bad_key = [&section](const std::string& key) {
            throw std::runtime_error("config: unknown key '" + section + "." + key + "'");
        };
        try {
            if (section == "data") {
                for (const auto& [key, v] : body.items()) {
                    if (key == "sidecar_root") c.sidecar_root = v.get<std::string>();
                    else if (key == "tasks") c.tasks = v.get<std::string>();
                    else bad_key(key);
                }
            } else if (section == "gateway") {
                for (const auto& [key, v] : body.items()) {
                    if (key == "endpoint") c.endpoint = v.get<std::string>();
                    else if (key == "model") c.model = v.get<std::string>();
                    else if (key == "timeout_ms") c.timeout_ms = v.get<int>();
                    else if (key == "max_retries") c.max_retries = v.get<int>();
                    else if (key == "max_in_flight") c.max_in_flight = v.get<int>();
                    else if (key == "backoff_base_ms") c.backoff_base_ms = v.get<int>();
                    else if (key == "max_output_tokens") c.max_output_tokens = v.get<int>();
                    else if (key == "temperature") c.temperature = v.get<double>();
                    else bad_key(key);
                }
            } else if (section == "embedder") {
                for (const auto& [key, v] : body.items()) {
                    if (key == "hash_seed") c.hash_seed = v.get<uint64_t>();
                    else if (key == "dim") c.dim = v.get<int>();
                    else if (key == "proj_dim") c.proj_dim = v.get<int>();
                    else if (key == "tau") c.tau = v.get<double>();
                    else bad_key(key);
                }
            } else if (section == "train") {
                for (const auto& [key, v] : body.items()) {
                    if (key == "lr") c.lr = v.get<double>();
                    else if (key == "epochs") c.epochs = v.get<int>();
                    else if (key == "batch") c.batch = v.get<int>();
                    else if (key == "seed") c.train_seed = v.get<uint64_t>();
                    else if (key == "hard_negatives") c.hard_negatives = v.get<int>();
                    else if (key == "optimizer") c.optimizer = v.get<std::string>();
                    else if (key == "symmetric") c.symmetric = v.get<bool>();
                    else bad_key(key);
                }
            } else if (section == "eval") {
                for (const auto& [key, v] : body.items()) {
                    if (key == "mode") c.mode = v.get<std::string>();
                    else if (key == "seed") c.eval_seed = v.get<uint64_t>();
                    else bad_key(key);
                }
            } else if (section == "synth") {
                for (const auto& [key, v] : body.items()) {
                    if (key == "entities") c.entities = v.get<int>();
                    else if (key == "distractors") c.distractors = v.get<int>();
                    else if (key == "caption_noise") c.caption_noise = v.get<double>();
                    else if (key == "deixis_rate") c.deixis_rate = v.get<double>();
                    else if (key == "seed") c.synth_seed = v.get<uint64_t>();
                    else bad_key(key);
                }
            } else {
                throw std::runtime_error("config: unknown section '" + section + "'");
            }
        } catch (const json::exception& e) {
            throw std::runtime_error("config " + path + ", section '" + section +
                                     "': " + e.what());
        }
    }
    return c;
}

void write_lock(const fs::path& out_dir, const std::string& command, const Settings& c) {
    json lock{
        {"command", command},
        {"data", {{"sidecar_root", c.sidecar_root}, {"tasks", c.tasks}}},
        {"gateway",
         {{"endpoint", c.endpoint},
          {"model", c.model},
          {"timeout_ms", c.timeout_ms},
          {"max_retries", c.max_retries},
          {"max_in_flight", c.max_in_flight},
          {"backoff_base_ms", c.backoff_base_ms},
          {"max_output_tokens", c.max_output_tokens},
          {"temperature", c.temperature}}},
        {"embedder",
         {{"hash_seed", c.hash_seed},
          {"dim", c.dim},
          {"proj_dim", c.proj_dim},
          {"tau", c.tau}}},
        {"train",
         {{"lr", c.lr},
          {"epochs", c.epochs},
          {"batch", c.batch},
          {"seed", c.train_seed},
          {"hard_negatives", c.hard_negatives},
          {"optimizer", c.optimizer},
          {"symmetric", c.symmetric}}},
        {"eval", {{"mode", c.mode}, {"seed", c.eval_seed}}},
        {"synth",
         {{"entities", c.entities},
          {"distractors", c.distractors},
          {"caption_noise", c.caption_noise},
          {"deixis_rate", c.deixis_rate},
          {"seed", c.synth_seed}}}};
    fs::path dir = out_dir.empty() ? fs::path(".") : out_dir;
    fs::create_directories(dir);
    umr::util::write_file((dir / "config.lock.json").string(), lock.dump(2) + "\n");
}

umr::gateway::VlmGatewayConfig gateway_config(const Settings& c) {
    umr::gateway::VlmGatewayConfig gc;
    gc.endpoint_url = c.endpoint;
    gc.model_id = c.model;
    gc.timeout_ms = c.timeout_ms;
    gc.max_retries = c.max_retries;
    gc.max_in_flight = c.max_in_flight;
    gc.backoff_base_ms = c.backoff_base_ms;
    gc.max_output_tokens = c.max_output_tokens;
    gc.temperature = c.temperature;
    if (const char* token = std::getenv("UMR_GATEWAY_TOKEN")) gc.bearer_token = token;
    return gc;
}

std::unique_ptr<umr::gateway::VlmGateway> make_gateway(const Settings& c,
                                                       const std::string& mock_world) {
    umr::gateway::VlmGatewayConfig gc = gateway_config(c);
    if (!mock_world.empty())
        return std::make_unique<umr::synth::MockVlm>(
            umr::synth::MockOracle::from_benchmark(mock_world), gc);
    if (c.endpoint.empty())
        throw std::runtime_error("no gateway: pass --endpoint <url> or --mock-world <bench dir>");
    return std::make_unique<umr::gateway::HttpVlmGateway>(gc);
}

umr::eval::EnhancedStores load_stores(const std::vector<std::string>& files) {
    umr::eval::EnhancedStores stores;
    for (const auto& f : files)
        for (const auto& rec : umr::data::load_enhanced(f)) stores.add(rec);
    return stores;
}

umr::eval::Benchmark open_benchmark(const std::string& dir) {
    if (!fs::exists(fs::path(dir) / "manifest.json"))
        throw std::runtime_error("no benchmark manifest under '" + dir +
                                 "'; generate one with `umr synth gen --out " + dir + "`");
    return umr::eval::load_benchmark(dir);
}

umr::embed::TwoTowerModel open_checkpoint(const std::string& path) {
    if (!fs::exists(path))
        throw std::runtime_error("checkpoint '" + path +
                                 "' not found; produce one with `umr train`");
    return umr::embed::load_checkpoint(path);
}

std::vector<std::pair<std::string, umr::embed::Vec>> load_vectors(const std::string& path) {
    std::vector<std::pair<std::string, umr::embed::Vec>> out;
    std::string text = umr::util::read_file(path);
    size_t pos = 0, line_no = 0;
    while (pos < text.size()) {
        size_t end = text.find('\n', pos);
        if (end == std::string::npos) end = text.size();
        std::string line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("id") || !j.contains("vec"))
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": expected {\"id\", \"vec\"}");
        out.emplace_back(j.at("id").get<std::string>(), j.at("vec").get<umr::embed::Vec>());
    }
    return out;
}

void write_vectors(const std::vector<std::pair<std::string, umr::embed::Vec>>& rows,
                   const std::string& path) {
    std::string out;
    for (const auto& [id, vec] : rows) {
        json j{{"id", id}, {"vec", vec}};
        out += j.dump();
        out += '\n';
    }
    umr::util::write_file(path, out);
}

struct CommonFlags {
    std::string config_path;   // consumed by the pre-scan, registered for --help
    std::string mock_world;
    std::vector<std::string> enhanced_files;
};

int run(int argc, char** argv) {
    // The config file must be applied before flag parsing so flags override
    // it; scan for --config up front.
    std::string config_path;
    for (int i = 1; i < argc; ++i) {
        std::string a = argv[i];
        if (a == "--config" && i + 1 < argc) config_path = argv[i + 1];
        else if (a.rfind("--config=", 0) == 0) config_path = a.substr(9);
    }
    Settings cfg;
    if (!config_path.empty()) cfg = load_settings_file(config_path);

    CLI::App app{"Reasoning-augmented multimodal retrieval pipeline"};
    app.fallthrough();
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kVersion));
    CommonFlags common;
    app.add_option("--config", common.config_path, "JSON config file; flags override its values");

    // synth gen
    auto* synth_cmd = app.add_subcommand("synth", "Synthetic benchmark generation");
    synth_cmd->require_subcommand(1);
    auto* gen = synth_cmd->add_subcommand("gen", "Generate a benchmark directory");
    std::string gen_out;
    gen->add_option("--out", gen_out, "Output directory")->required();
    gen->add_option("--seed", cfg.synth_seed, "World seed");
    gen->add_option("--entities", cfg.entities, "Number of entities");
    gen->add_option("--distractors", cfg.distractors, "Distractors per entity");
    gen->add_option("--caption-noise", cfg.caption_noise, "Fraction of attributes dropped");
    gen->add_option("--deixis-rate", cfg.deixis_rate, "Fraction of deictic QA queries");
    gen->callback([&] {
        umr::synth::SynthConfig sc;
        sc.n_entities = cfg.entities;
        sc.distractors_per_entity = cfg.distractors;
        sc.caption_noise = cfg.caption_noise;
        sc.deixis_rate = cfg.deixis_rate;
        sc.seed = cfg.synth_seed;
        umr::synth::SynthWorld world = umr::synth::generate_world(sc);
        umr::synth::emit_benchmark(world, gen_out);
        write_lock(gen_out, "synth gen", cfg);
        std::printf("%s\n", (fs::path(gen_out) / "manifest.json").string().c_str());
    });

    // enhance
    auto* enh = app.add_subcommand("enhance", "Rewrite queries / caption corpus items");
    std::string enh_side, enh_in, enh_out, enh_cache;
    enh->add_option("--side", enh_side, "corpus or queries")
        ->required()
        ->check(CLI::IsMember({"corpus", "queries"}));
    enh->add_option("--in", enh_in, "Input JSONL")->required();
    enh->add_option("--out", enh_out, "Output records JSONL")->required();
    enh->add_option("--endpoint", cfg.endpoint, "Chat-completions endpoint URL");
    enh->add_option("--mock-world", common.mock_world, "Benchmark dir with planted answers");
    enh->add_option("--cache-dir", enh_cache, "Persistent cache directory");
    enh->add_option("--model", cfg.model, "Model id");
    enh->add_option("--tasks", cfg.tasks, "tasks.json (required for --side queries)");
    enh->add_option("--sidecar-root", cfg.sidecar_root, "Root for token sidecar refs");
    enh->add_option("--max-in-flight", cfg.max_in_flight, "Concurrent gateway calls");
    enh->callback([&] {
        std::string root =
            cfg.sidecar_root.empty() ? fs::path(enh_in).parent_path().string() : cfg.sidecar_root;
        umr::data::SidecarStore sidecars(root);
        std::vector<umr::enhance::EnhanceRequest> requests;
        if (enh_side == "corpus") {
            for (const auto& doc : umr::data::load_corpus(enh_in))
                requests.push_back(umr::enhance::plan_corpus(doc, cfg.model, sidecars));
        } else {
            if (cfg.tasks.empty())
                throw std::runtime_error("--side queries needs --tasks <tasks.json>");
            umr::data::TaskRegistry registry = umr::data::load_tasks(cfg.tasks);
            for (const auto& q : umr::data::load_queries(enh_in, registry))
                requests.push_back(umr::enhance::plan_query(q, cfg.model, sidecars));
        }
        auto gw = make_gateway(cfg, common.mock_world);
        umr::enhance::EnhancementCache cache(enh_cache);
        umr::enhance::DispatchResult result = umr::enhance::dispatch_batch(requests, *gw, cache);
        umr::data::write_enhanced(result.records, enh_out);
        write_lock(fs::path(enh_out).parent_path(), "enhance", cfg);
        const auto& s = result.stats;
        std::printf("total=%zu enhanced=%zu cached=%zu fallback=%zu gateway_calls=%zu\n", s.total,
                    s.enhanced, s.cached, s.fallback, s.gateway_calls);
        if (s.gateway_calls > 0 && s.gateway_success == 0 && s.fallback > 0)
            throw std::runtime_error("every gateway call failed; check --endpoint and the log");
    });

    // train
    auto* tr = app.add_subcommand("train", "Train the two-tower model on a benchmark");
    std::string tr_bench, tr_out;
    tr->add_option("--bench", tr_bench, "Benchmark directory")->required();
    tr->add_option("--mode", cfg.mode,
                   "baseline | q-only | c-only | full | inference-only (training switches)");
    tr->add_option("--out", tr_out, "Output directory")->required();
    tr->add_option("--enhanced", common.enhanced_files, "Enhanced record JSONL files")
        ->take_all();
    tr->add_option("--lr", cfg.lr, "Learning rate");
    tr->add_option("--epochs", cfg.epochs, "Training epochs");
    tr->add_option("--batch", cfg.batch, "Batch size");
    tr->add_option("--seed", cfg.train_seed, "Init and shuffle seed");
    tr->add_option("--tau", cfg.tau, "Softmax temperature");
    tr->add_option("--hard-negatives", cfg.hard_negatives, "Mined negatives per query");
    tr->add_option("--optimizer", cfg.optimizer, "adam or sgd")
        ->check(CLI::IsMember({"adam", "sgd"}));
    tr->add_flag("--symmetric", cfg.symmetric, "Symmetric InfoNCE");
    tr->add_option("--dim", cfg.dim, "Input hash dimension");
    tr->add_option("--proj-dim", cfg.proj_dim, "Projection dimension");
    tr->add_option("--hash-seed", cfg.hash_seed, "Token hash seed");
    tr->callback([&] {
        umr::eval::Benchmark bench = open_benchmark(tr_bench);
        umr::eval::RunConfig rc =
            umr::eval::make_run_config(umr::eval::ablation_mode_from_string(cfg.mode));
        bool needs = rc.train_enhanced_queries || rc.train_enhanced_corpus;
        if (needs && common.enhanced_files.empty())
            throw std::runtime_error("mode '" + cfg.mode +
                                     "' trains on enhanced data; pass --enhanced files "
                                     "produced by `umr enhance`");
        umr::eval::EnhancedStores stores = load_stores(common.enhanced_files);
        auto pairs = umr::eval::build_train_pairs(bench, stores, rc.train_enhanced_queries,
                                                  rc.train_enhanced_corpus);
        auto pool = umr::eval::build_negative_pool(bench, stores, rc.train_enhanced_corpus);
        umr::embed::TokenHasher hasher{cfg.hash_seed, cfg.dim};
        umr::embed::TwoTowerModel init =
            umr::embed::initial_model(cfg.dim, cfg.proj_dim, cfg.tau, cfg.train_seed);
        fs::create_directories(tr_out);
        umr::embed::save_checkpoint(init, (fs::path(tr_out) / "model_init.json").string());
        umr::embed::TrainConfig tc;
        tc.learning_rate = cfg.lr;
        tc.batch_size = cfg.batch;
        tc.epochs = cfg.epochs;
        tc.seed = cfg.train_seed;
        tc.tau = cfg.tau;
        tc.hard_negatives_per_query = cfg.hard_negatives;
        tc.optimizer = cfg.optimizer == "sgd" ? umr::embed::TrainConfig::Optimizer::SGD
                                              : umr::embed::TrainConfig::Optimizer::Adam;
        tc.symmetric = cfg.symmetric;
        umr::embed::TrainLog log;
        umr::embed::TwoTowerModel model = umr::embed::train(init, pairs, pool, tc, hasher, &log);
        std::string checkpoint = (fs::path(tr_out) / "model.json").string();
        umr::embed::save_checkpoint(model, checkpoint);
        write_lock(tr_out, "train", cfg);
        if (!log.epoch_mean_loss.empty())
            std::printf("pairs=%zu loss: %.6f -> %.6f\n", pairs.size(),
                        log.epoch_mean_loss.front(), log.epoch_mean_loss.back());
        std::printf("%s\n", checkpoint.c_str());
    });

    // embed
    auto* em = app.add_subcommand("embed", "Embed corpus documents or queries");
    std::string em_side, em_in, em_out, em_checkpoint;
    em->add_option("--side", em_side, "corpus or queries")
        ->required()
        ->check(CLI::IsMember({"corpus", "queries"}));
    em->add_option("--in", em_in, "Input JSONL")->required();
    em->add_option("--out", em_out, "Output vectors JSONL")->required();
    em->add_option("--checkpoint", em_checkpoint, "Model checkpoint")->required();
    em->add_option("--enhanced", common.enhanced_files,
                   "Enhanced record JSONL files (use enhanced surfaces)")
        ->take_all();
    em->add_option("--tasks", cfg.tasks, "tasks.json (required for --side queries)");
    em->add_option("--sidecar-root", cfg.sidecar_root, "Root for token sidecar refs");
    em->add_option("--hash-seed", cfg.hash_seed, "Token hash seed");
    em->callback([&] {
        umr::embed::TwoTowerModel model = open_checkpoint(em_checkpoint);
        umr::embed::TokenHasher hasher{cfg.hash_seed, model.d_in};
        std::string root =
            cfg.sidecar_root.empty() ? fs::path(em_in).parent_path().string() : cfg.sidecar_root;
        umr::data::SidecarStore sidecars(root);
        umr::eval::EnhancedStores stores = load_stores(common.enhanced_files);
        bool use_enhanced = !common.enhanced_files.empty();
        std::vector<std::pair<std::string, umr::embed::Vec>> rows;
        std::vector<std::string> missing;
        if (em_side == "corpus") {
            for (const auto& doc : umr::data::load_corpus(em_in)) {
                const umr::data::EnhancedRecord* rec =
                    use_enhanced ? stores.find_corpus(doc.did) : nullptr;
                if (use_enhanced && !rec) {
                    missing.push_back(doc.did);
                    continue;
                }
                rows.emplace_back(doc.did,
                                  umr::embed::embed_document(doc, rec, model, hasher, sidecars));
            }
        } else {
            if (cfg.tasks.empty())
                throw std::runtime_error("--side queries needs --tasks <tasks.json>");
            umr::data::TaskRegistry registry = umr::data::load_tasks(cfg.tasks);
            for (const auto& q : umr::data::load_queries(em_in, registry)) {
                const umr::data::EnhancedRecord* rec =
                    use_enhanced ? stores.find_query(q.qid) : nullptr;
                if (use_enhanced && !rec) {
                    missing.push_back(q.qid);
                    continue;
                }
                rows.emplace_back(q.qid, umr::embed::embed_query(q, rec, model, hasher, sidecars));
            }
        }
        if (!missing.empty())
            throw std::runtime_error("missing enhanced records for " +
                                     std::to_string(missing.size()) + " item(s), first '" +
                                     missing.front() + "'; produce them with `umr enhance`");
        write_vectors(rows, em_out);
        write_lock(fs::path(em_out).parent_path(), "embed", cfg);
        std::printf("embedded=%zu dim=%d\n", rows.size(), model.d_out);
    });

    // index build / search
    auto* ix = app.add_subcommand("index", "Exact top-k vector index");
    ix->require_subcommand(1);
    auto* ixb = ix->add_subcommand("build", "Build an index from vectors");
    std::string ixb_vectors, ixb_out;
    ixb->add_option("--vectors", ixb_vectors, "Vectors JSONL (from `umr embed`)")->required();
    ixb->add_option("--out", ixb_out, "Index file")->required();
    ixb->callback([&] {
        if (!fs::exists(ixb_vectors))
            throw std::runtime_error("vectors '" + ixb_vectors +
                                     "' not found; produce them with `umr embed`");
        umr::index::VectorIndex idx = umr::index::VectorIndex::build(load_vectors(ixb_vectors));
        idx.save(ixb_out);
        write_lock(fs::path(ixb_out).parent_path(), "index build", cfg);
        std::printf("indexed=%zu dim=%d\n", idx.size(), idx.dim());
    });
    auto* ixs = ix->add_subcommand("search", "Search an index with query vectors");
    std::string ixs_index, ixs_vectors, ixs_out;
    int ixs_k = 10;
    ixs->add_option("--index", ixs_index, "Index file (from `umr index build`)")->required();
    ixs->add_option("--vectors", ixs_vectors, "Query vectors JSONL")->required();
    ixs->add_option("--k", ixs_k, "Results per query");
    ixs->add_option("--out", ixs_out, "Results JSONL")->required();
    ixs->callback([&] {
        if (!fs::exists(ixs_index))
            throw std::runtime_error("index '" + ixs_index +
                                     "' not found; produce it with `umr index build`");
        umr::index::VectorIndex idx = umr::index::VectorIndex::load(ixs_index);
        auto queries = load_vectors(ixs_vectors);
        std::string out;
        for (const auto& [id, vec] : queries) {
            umr::index::SearchResult res = idx.search(vec, ixs_k);
            json hits = json::array();
            for (const auto& e : res.entries) hits.push_back({{"did", e.did}, {"score", e.score}});
            out += json{{"id", id}, {"hits", hits}}.dump();
            out += '\n';
        }
        umr::util::write_file(ixs_out, out);
        write_lock(fs::path(ixs_out).parent_path(), "index search", cfg);
        std::printf("queries=%zu k=%d\n", queries.size(), ixs_k);
    });

    // eval
    auto* ev = app.add_subcommand("eval", "Score a checkpoint on a benchmark");
    std::string ev_bench, ev_checkpoint, ev_out;
    ev->add_option("--bench", ev_bench, "Benchmark directory")->required();
    ev->add_option("--mode", cfg.mode,
                   "baseline | q-only | c-only | full | inference-only (eval switches)");
    ev->add_option("--checkpoint", ev_checkpoint, "Model checkpoint")->required();
    ev->add_option("--enhanced", common.enhanced_files, "Enhanced record JSONL files")
        ->take_all();
    ev->add_option("--out", ev_out, "Output directory")->required();
    ev->add_option("--seed", cfg.eval_seed, "Recorded run seed");
    ev->add_option("--hash-seed", cfg.hash_seed, "Token hash seed");
    ev->callback([&] {
        umr::eval::Benchmark bench = open_benchmark(ev_bench);
        umr::embed::TwoTowerModel model = open_checkpoint(ev_checkpoint);
        umr::embed::TokenHasher hasher{cfg.hash_seed, model.d_in};
        umr::eval::RunConfig rc = umr::eval::make_run_config(
            umr::eval::ablation_mode_from_string(cfg.mode), ev_checkpoint, cfg.eval_seed);
        bool needs = rc.eval_enhanced_queries || rc.eval_enhanced_corpus;
        if (needs && common.enhanced_files.empty())
            throw std::runtime_error("mode '" + cfg.mode +
                                     "' scores enhanced data; pass --enhanced files produced "
                                     "by `umr enhance`");
        umr::eval::EnhancedStores stores = load_stores(common.enhanced_files);
        umr::eval::RecallReport report = umr::eval::run_eval(bench, &stores, model, hasher, rc);
        fs::create_directories(ev_out);
        umr::util::write_file((fs::path(ev_out) / "report.csv").string(),
                              umr::eval::render_report(report, umr::eval::ReportFormat::Csv));
        umr::util::write_file((fs::path(ev_out) / "report.md").string(),
                              umr::eval::render_report(report, umr::eval::ReportFormat::Markdown));
        umr::util::write_file((fs::path(ev_out) / "report.json").string(),
                              umr::eval::report_to_json(report));
        write_lock(ev_out, "eval", cfg);
        auto r5 = report.macro.find(5);
        if (r5 != report.macro.end())
            std::printf("mode=%s macro R@5=%s\n", report.mode.c_str(),
                        umr::util::format_double(r5->second).c_str());
        std::printf("%s\n", (fs::path(ev_out) / "report.csv").string().c_str());
    });

    // report
    auto* rp = app.add_subcommand("report", "Render or compare recall reports");
    std::string rp_in, rp_format = "markdown", rp_compare, rp_out;
    rp->add_option("--in", rp_in, "report.json (from `umr eval`)")->required();
    rp->add_option("--format", rp_format, "markdown or csv")
        ->check(CLI::IsMember({"markdown", "md", "csv"}));
    rp->add_option("--compare", rp_compare, "Second report.json; prints deltas (second - first)");
    rp->add_option("--out", rp_out, "Output file (default stdout)");
    rp->callback([&] {
        if (!fs::exists(rp_in))
            throw std::runtime_error("report '" + rp_in +
                                     "' not found; produce one with `umr eval`");
        umr::eval::RecallReport report =
            umr::eval::report_from_json(umr::util::read_file(rp_in));
        std::string text;
        if (!rp_compare.empty()) {
            umr::eval::RecallReport other =
                umr::eval::report_from_json(umr::util::read_file(rp_compare));
            text = umr::eval::render_delta(umr::eval::compare_reports(report, other));
        } else {
            text = umr::eval::render_report(report, rp_format == "csv"
                                                        ? umr::eval::ReportFormat::Csv
                                                        : umr::eval::ReportFormat::Markdown);
        }
        if (rp_out.empty())
            std::fputs(text.c_str(), stdout);
        else
            umr::util::write_file(rp_out, text);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "umr: %s\n", e.what());
        return 1;
    }
}
