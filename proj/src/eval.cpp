#include "umr/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "umr/util.hpp"

namespace umr::eval {

using json = nlohmann::json;

std::string to_string(AblationMode m) {
    switch (m) {
        case AblationMode::Baseline: return "baseline";
        case AblationMode::QOnly: return "q-only";
        case AblationMode::COnly: return "c-only";
        case AblationMode::Full: return "full";
        case AblationMode::InferenceOnly: return "inference-only";
    }
    throw std::logic_error("unreachable ablation mode");
}

AblationMode ablation_mode_from_string(const std::string& s) {
    std::string key;
    for (char c : s) {
        if (c == '-' || c == '_') continue;
        key += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    if (key == "baseline") return AblationMode::Baseline;
    if (key == "qonly") return AblationMode::QOnly;
    if (key == "conly") return AblationMode::COnly;
    if (key == "full") return AblationMode::Full;
    if (key == "inferenceonly") return AblationMode::InferenceOnly;
    throw std::invalid_argument("unknown ablation mode '" + s + "'");
}

RunConfig make_run_config(AblationMode mode, std::string checkpoint, uint64_t seed) {
    RunConfig c;
    c.mode = mode;
    c.model_checkpoint = std::move(checkpoint);
    c.seed = seed;
    switch (mode) {
        case AblationMode::Baseline:
            break;
        case AblationMode::QOnly:
            c.train_enhanced_queries = c.eval_enhanced_queries = true;
            break;
        case AblationMode::COnly:
            c.train_enhanced_corpus = c.eval_enhanced_corpus = true;
            break;
        case AblationMode::Full:
            c.train_enhanced_queries = c.train_enhanced_corpus = true;
            c.eval_enhanced_queries = c.eval_enhanced_corpus = true;
            break;
        case AblationMode::InferenceOnly:
            c.eval_enhanced_queries = c.eval_enhanced_corpus = true;
            break;
    }
    return c;
}

int recall_at_k(const index::SearchResult& ranked, const std::set<std::string>& positives,
                int k) {
    if (positives.empty()) throw std::invalid_argument("recall_at_k: empty positive set");
    if (k < 1) throw std::invalid_argument("recall_at_k: k must be >= 1");
    size_t limit = std::min(static_cast<size_t>(k), ranked.entries.size());
    for (size_t i = 0; i < limit; ++i) {
        if (positives.count(ranked.entries[i].did)) return 1;
    }
    return 0;
}

const data::EnhancedRecord* EnhancedStores::find_corpus(const std::string& did) const {
    auto it = corpus.find(did);
    return it == corpus.end() ? nullptr : &it->second;
}

const data::EnhancedRecord* EnhancedStores::find_query(const std::string& qid) const {
    auto it = query.find(qid);
    return it == query.end() ? nullptr : &it->second;
}

void EnhancedStores::add(const data::EnhancedRecord& rec) {
    if (rec.side == data::Side::CorpusSide)
        corpus[rec.source_id] = rec;
    else
        query[rec.source_id] = rec;
}

Benchmark load_benchmark(const std::string& dir) {
    namespace fs = std::filesystem;
    std::string manifest_path = (fs::path(dir) / "manifest.json").string();
    json m;
    try {
        m = json::parse(util::read_file(manifest_path));
    } catch (const json::exception& e) {
        throw std::runtime_error("failed to parse " + manifest_path + ": " + e.what());
    }
    if (!m.is_object() || !m.contains("pools") || !m.contains("queries") || !m.contains("tasks"))
        throw std::runtime_error(manifest_path + ": expected pools, queries and tasks entries");

    Benchmark bench;
    bench.dir = dir;
    bench.sidecars = data::SidecarStore(dir);
    bench.tasks = data::load_tasks((fs::path(dir) / m.at("tasks").get<std::string>()).string());
    bench.queries = data::load_queries(
        (fs::path(dir) / m.at("queries").get<std::string>()).string(), bench.tasks);
    for (const auto& [pool_id, file] : m.at("pools").items()) {
        bench.pools[pool_id] =
            data::load_corpus((fs::path(dir) / file.get<std::string>()).string());
    }
    for (const auto& [task_id, spec] : bench.tasks.tasks) {
        if (!bench.pools.count(spec.pool_id))
            throw std::runtime_error("task '" + task_id + "' references unknown pool '" +
                                     spec.pool_id + "'");
    }
    return bench;
}

EnhancedStores enhance_benchmark(const Benchmark& bench, gateway::VlmGateway& gw,
                                 enhance::EnhancementCache& cache) {
    std::vector<enhance::EnhanceRequest> requests;
    const std::string& model_id = gw.config().model_id;
    for (const auto& [pool_id, docs] : bench.pools) {
        for (const auto& doc : docs)
            requests.push_back(enhance::plan_corpus(doc, model_id, bench.sidecars));
    }
    for (const auto& q : bench.queries)
        requests.push_back(enhance::plan_query(q, model_id, bench.sidecars));

    enhance::DispatchResult out = enhance::dispatch_batch(requests, gw, cache);
    EnhancedStores stores;
    for (const auto& rec : out.records) stores.add(rec);
    return stores;
}

namespace {

std::string iso_utc_now() {
    std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

[[noreturn]] void throw_missing(const char* side, const std::vector<std::string>& ids) {
    std::string msg = std::string("missing enhanced records for ") +
                      std::to_string(ids.size()) + " " + side + " item(s): ";
    size_t shown = std::min<size_t>(ids.size(), 10);
    for (size_t i = 0; i < shown; ++i) {
        if (i) msg += ", ";
        msg += ids[i];
    }
    if (ids.size() > shown) msg += ", ...";
    throw std::runtime_error(msg);
}

const data::EnhancedRecord* corpus_record(const EnhancedStores* stores, bool enhanced,
                                          const std::string& did,
                                          std::vector<std::string>* missing) {
    if (!enhanced) return nullptr;
    const data::EnhancedRecord* rec = stores ? stores->find_corpus(did) : nullptr;
    if (!rec) missing->push_back(did);
    return rec;
}

const data::EnhancedRecord* query_record(const EnhancedStores* stores, bool enhanced,
                                         const std::string& qid,
                                         std::vector<std::string>* missing) {
    if (!enhanced) return nullptr;
    const data::EnhancedRecord* rec = stores ? stores->find_query(qid) : nullptr;
    if (!rec) missing->push_back(qid);
    return rec;
}

std::map<int, double> mean_over_tasks(const std::vector<const TaskResult*>& tasks) {
    std::map<int, double> sums;
    std::map<int, int> counts;
    for (const TaskResult* t : tasks) {
        for (const auto& [k, v] : t->recall) {
            sums[k] += v;
            counts[k] += 1;
        }
    }
    std::map<int, double> out;
    for (const auto& [k, s] : sums) out[k] = s / counts[k];
    return out;
}

}  // namespace

RecallReport run_eval(const Benchmark& bench, const EnhancedStores* stores,
                      const embed::TwoTowerModel& model, const embed::TokenHasher& hasher,
                      const RunConfig& config) {
    bool needs_stores = config.eval_enhanced_queries || config.eval_enhanced_corpus;
    if (needs_stores && !stores)
        throw std::invalid_argument("mode '" + to_string(config.mode) +
                                    "' needs enhanced records but none were provided");

    std::map<std::string, std::vector<const data::Query*>> by_task;
    for (const auto& q : bench.queries) by_task[q.task_id].push_back(&q);

    // Each pool is embedded and indexed once per run, shared across tasks.
    std::map<std::string, index::VectorIndex> pool_index;
    std::vector<std::string> missing_docs, missing_queries;
    for (const auto& [task_id, spec] : bench.tasks.tasks) {
        if (!by_task.count(task_id) || pool_index.count(spec.pool_id)) continue;
        const auto& docs = bench.pools.at(spec.pool_id);
        std::vector<std::pair<std::string, embed::Vec>> rows;
        rows.reserve(docs.size());
        for (const auto& doc : docs) {
            const data::EnhancedRecord* rec =
                corpus_record(stores, config.eval_enhanced_corpus, doc.did, &missing_docs);
            if (config.eval_enhanced_corpus && !rec) continue;
            rows.emplace_back(doc.did,
                              embed::embed_document(doc, rec, model, hasher, bench.sidecars));
        }
        if (missing_docs.empty()) pool_index.emplace(spec.pool_id, index::VectorIndex::build(rows));
    }
    if (!missing_docs.empty()) throw_missing("corpus", missing_docs);

    RecallReport report;
    report.mode = to_string(config.mode);
    report.model_id = config.model_checkpoint.empty() ? "(in-memory)" : config.model_checkpoint;
    report.seed = config.seed;
    report.timestamp = iso_utc_now();

    for (const auto& [task_id, spec] : bench.tasks.tasks) {
        auto it = by_task.find(task_id);
        if (it == by_task.end()) continue;  // no queries, nothing to score
        const auto& queries = it->second;
        const index::VectorIndex& idx = pool_index.at(spec.pool_id);
        int k_max = *std::max_element(spec.cutoffs.begin(), spec.cutoffs.end());

        std::vector<embed::Vec> q_vecs;
        q_vecs.reserve(queries.size());
        for (const data::Query* q : queries) {
            const data::EnhancedRecord* rec =
                query_record(stores, config.eval_enhanced_queries, q->qid, &missing_queries);
            if (config.eval_enhanced_queries && !rec) continue;
            q_vecs.push_back(embed::embed_query(*q, rec, model, hasher, bench.sidecars));
        }
        if (!missing_queries.empty()) throw_missing("query", missing_queries);

        std::vector<index::SearchResult> ranked = idx.batch_search(q_vecs, k_max);

        TaskResult tr;
        tr.task_id = task_id;
        tr.name = spec.name;
        tr.advisory = spec.advisory;
        tr.n_queries = queries.size();
        for (int k : spec.cutoffs) {
            double hits = 0.0;
            for (size_t i = 0; i < queries.size(); ++i)
                hits += recall_at_k(ranked[i], queries[i]->positives, k);
            tr.recall[k] = hits / queries.size();
        }
        report.tasks.push_back(std::move(tr));
    }

    std::vector<const TaskResult*> scored, all;
    for (const auto& t : report.tasks) {
        all.push_back(&t);
        if (!t.advisory) scored.push_back(&t);
    }
    if (!scored.empty()) report.macro = mean_over_tasks(scored);
    if (!all.empty()) report.macro_all = mean_over_tasks(all);
    return report;
}

std::vector<embed::TrainPair> build_train_pairs(const Benchmark& bench,
                                                const EnhancedStores& stores,
                                                bool enhanced_queries, bool enhanced_corpus,
                                                const std::string& pool_id) {
    std::map<std::string, const data::Document*> by_did;
    for (const auto& [pid, docs] : bench.pools)
        for (const auto& doc : docs) by_did.emplace(doc.did, &doc);

    std::vector<embed::TrainPair> pairs;
    std::vector<std::string> missing_docs, missing_queries;
    for (const auto& q : bench.queries) {
        if (!pool_id.empty() && bench.tasks.at(q.task_id).pool_id != pool_id) continue;
        if (q.positives.empty())
            throw std::runtime_error("query '" + q.qid + "' has no positive documents");
        const data::EnhancedRecord* q_rec =
            query_record(&stores, enhanced_queries, q.qid, &missing_queries);
        if (enhanced_queries && !q_rec) continue;
        std::string qs = embed::query_surface(q, q_rec, bench.sidecars);

        // One pair per positive; a multi-positive query contributes several.
        for (const std::string& pos : q.positives) {
            auto it = by_did.find(pos);
            if (it == by_did.end())
                throw std::runtime_error("positive document '" + pos + "' for query '" + q.qid +
                                         "' not found in any pool");
            const data::EnhancedRecord* d_rec =
                corpus_record(&stores, enhanced_corpus, pos, &missing_docs);
            if (enhanced_corpus && !d_rec) continue;

            embed::TrainPair pair;
            pair.query_surface = qs;
            pair.doc_surface = embed::document_surface(*it->second, d_rec, bench.sidecars);
            pair.pos_did = pos;
            pair.positives = q.positives;
            pairs.push_back(std::move(pair));
        }
    }
    if (!missing_queries.empty()) throw_missing("query", missing_queries);
    if (!missing_docs.empty()) throw_missing("corpus", missing_docs);
    return pairs;
}

embed::NegativePool build_negative_pool(const Benchmark& bench, const EnhancedStores& stores,
                                        bool enhanced_corpus) {
    embed::NegativePool pool;
    std::vector<std::string> missing;
    for (const auto& [pid, docs] : bench.pools) {
        for (const auto& doc : docs) {
            const data::EnhancedRecord* rec =
                corpus_record(&stores, enhanced_corpus, doc.did, &missing);
            if (enhanced_corpus && !rec) continue;
            pool.dids.push_back(doc.did);
            pool.surfaces.push_back(embed::document_surface(doc, rec, bench.sidecars));
        }
    }
    if (!missing.empty()) throw_missing("corpus", missing);
    return pool;
}

DeltaReport compare_reports(const RecallReport& a, const RecallReport& b) {
    if (a.tasks.size() != b.tasks.size())
        throw std::invalid_argument("reports cover different task sets");
    DeltaReport delta;
    for (size_t i = 0; i < a.tasks.size(); ++i) {
        const TaskResult& ta = a.tasks[i];
        const TaskResult& tb = b.tasks[i];
        if (ta.task_id != tb.task_id)
            throw std::invalid_argument("reports cover different task sets ('" + ta.task_id +
                                        "' vs '" + tb.task_id + "')");
        std::map<int, double> d;
        for (const auto& [k, v] : ta.recall) {
            auto it = tb.recall.find(k);
            if (it == tb.recall.end())
                throw std::invalid_argument("task '" + ta.task_id +
                                            "' has mismatched cutoffs between reports");
            d[k] = it->second - v;
        }
        if (tb.recall.size() != ta.recall.size())
            throw std::invalid_argument("task '" + ta.task_id +
                                        "' has mismatched cutoffs between reports");
        delta.task_ids.push_back(ta.task_id);
        delta.deltas.push_back(std::move(d));
    }
    for (const auto& [k, v] : a.macro) {
        auto it = b.macro.find(k);
        if (it != b.macro.end()) delta.macro_delta[k] = it->second - v;
    }
    return delta;
}

namespace {

std::vector<int> cutoff_union(const RecallReport& report) {
    std::set<int> ks;
    for (const auto& t : report.tasks)
        for (const auto& [k, v] : t.recall) ks.insert(k);
    for (const auto& [k, v] : report.macro) ks.insert(k);
    return {ks.begin(), ks.end()};
}

std::string two_decimals(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

}  // namespace

std::string render_report(const RecallReport& report, ReportFormat format) {
    std::vector<int> ks = cutoff_union(report);
    std::ostringstream out;
    if (format == ReportFormat::Csv) {
        out << "task";
        for (int k : ks) out << ",R@" << k;
        out << "\n";
        auto row = [&](const std::string& label, const std::map<int, double>& recall) {
            out << label;
            for (int k : ks) {
                out << ",";
                auto it = recall.find(k);
                if (it != recall.end()) out << util::format_double(it->second);
            }
            out << "\n";
        };
        for (const auto& t : report.tasks) row(t.task_id, t.recall);
        if (!report.macro.empty()) row("macro", report.macro);
        if (!report.macro_all.empty()) row("macro_all", report.macro_all);
        return out.str();
    }

    out << "# Recall report (mode: " << report.mode << ")\n\n";
    out << "| Task |";
    for (int k : ks) out << " R@" << k << " |";
    out << "\n|---|";
    for (size_t i = 0; i < ks.size(); ++i) out << "---|";
    out << "\n";
    auto row = [&](const std::string& label, const std::map<int, double>& recall) {
        out << "| " << label << " |";
        for (int k : ks) {
            auto it = recall.find(k);
            out << " " << (it != recall.end() ? two_decimals(it->second) : "") << " |";
        }
        out << "\n";
    };
    for (const auto& t : report.tasks) row(t.name.empty() ? t.task_id : t.name, t.recall);
    if (!report.macro.empty()) row("**macro**", report.macro);
    if (!report.macro_all.empty()) row("**macro (all)**", report.macro_all);
    return out.str();
}

std::string render_delta(const DeltaReport& delta) {
    std::set<int> ks;
    for (const auto& d : delta.deltas)
        for (const auto& [k, v] : d) ks.insert(k);
    for (const auto& [k, v] : delta.macro_delta) ks.insert(k);

    std::ostringstream out;
    out << "task";
    for (int k : ks) out << ",dR@" << k;
    out << "\n";
    auto row = [&](const std::string& label, const std::map<int, double>& d) {
        out << label;
        for (int k : ks) {
            out << ",";
            auto it = d.find(k);
            if (it != d.end()) out << util::format_double(it->second);
        }
        out << "\n";
    };
    for (size_t i = 0; i < delta.task_ids.size(); ++i) row(delta.task_ids[i], delta.deltas[i]);
    if (!delta.macro_delta.empty()) row("macro", delta.macro_delta);
    return out.str();
}

namespace {

json recall_to_json(const std::map<int, double>& recall) {
    json j = json::object();
    for (const auto& [k, v] : recall) j[std::to_string(k)] = v;
    return j;
}

std::map<int, double> recall_from_json(const json& j) {
    std::map<int, double> out;
    for (const auto& [k, v] : j.items()) out[std::stoi(k)] = v.get<double>();
    return out;
}

}  // namespace

std::string report_to_json(const RecallReport& report) {
    json tasks = json::array();
    for (const auto& t : report.tasks) {
        tasks.push_back({{"task_id", t.task_id},
                         {"name", t.name},
                         {"advisory", t.advisory},
                         {"n_queries", t.n_queries},
                         {"recall", recall_to_json(t.recall)}});
    }
    json j{{"version", 1},
           {"mode", report.mode},
           {"model_id", report.model_id},
           {"seed", report.seed},
           {"timestamp", report.timestamp},
           {"tasks", tasks},
           {"macro", recall_to_json(report.macro)},
           {"macro_all", recall_to_json(report.macro_all)}};
    return j.dump(2) + "\n";
}

RecallReport report_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw std::runtime_error(std::string("failed to parse recall report: ") + e.what());
    }
    if (!j.is_object() || j.value("version", 0) != 1)
        throw std::runtime_error("recall report: unsupported layout");
    RecallReport report;
    report.mode = j.value("mode", "");
    report.model_id = j.value("model_id", "");
    report.seed = j.value("seed", uint64_t{0});
    report.timestamp = j.value("timestamp", "");
    for (const auto& t : j.at("tasks")) {
        TaskResult tr;
        tr.task_id = t.at("task_id").get<std::string>();
        tr.name = t.value("name", "");
        tr.advisory = t.value("advisory", false);
        tr.n_queries = t.value("n_queries", size_t{0});
        tr.recall = recall_from_json(t.at("recall"));
        report.tasks.push_back(std::move(tr));
    }
    report.macro = recall_from_json(j.at("macro"));
    report.macro_all = recall_from_json(j.at("macro_all"));
    return report;
}

}  // namespace umr::eval
