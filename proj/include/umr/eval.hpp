#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "umr/datamodel.hpp"
#include "umr/embed.hpp"
#include "umr/enhance.hpp"
#include "umr/index.hpp"

namespace umr::eval {

enum class AblationMode { Baseline, QOnly, COnly, Full, InferenceOnly };

std::string to_string(AblationMode m);
AblationMode ablation_mode_from_string(const std::string& s);

struct RunConfig {
    AblationMode mode = AblationMode::Baseline;
    bool train_enhanced_queries = false;
    bool train_enhanced_corpus = false;
    bool eval_enhanced_queries = false;
    bool eval_enhanced_corpus = false;
    std::string model_checkpoint;
    uint64_t seed = 0;
};

RunConfig make_run_config(AblationMode mode, std::string checkpoint = "", uint64_t seed = 0);

struct TaskResult {
    std::string task_id;
    std::string name;
    std::map<int, double> recall;  // cutoff -> mean recall
    size_t n_queries = 0;
    bool advisory = false;
};

struct RecallReport {
    std::vector<TaskResult> tasks;      // registry order
    std::map<int, double> macro;        // non-advisory tasks only
    std::map<int, double> macro_all;    // every task
    std::string mode;
    std::string model_id;
    uint64_t seed = 0;
    std::string timestamp;              // only surfaces in the JSON sidecar
};

// 1 iff any positive id appears among the first min(k, |ranked|) entries.
int recall_at_k(const index::SearchResult& ranked, const std::set<std::string>& positives, int k);

// Per-side lookup of enhanced records by source id.
struct EnhancedStores {
    std::map<std::string, data::EnhancedRecord> corpus;
    std::map<std::string, data::EnhancedRecord> query;

    const data::EnhancedRecord* find_corpus(const std::string& did) const;
    const data::EnhancedRecord* find_query(const std::string& qid) const;
    void add(const data::EnhancedRecord& rec);
};

// A loaded synthetic benchmark directory.
struct Benchmark {
    std::string dir;
    data::TaskRegistry tasks;
    std::map<std::string, std::vector<data::Document>> pools;
    std::vector<data::Query> queries;
    data::SidecarStore sidecars;
};

Benchmark load_benchmark(const std::string& dir);

// Enhances every pool document and query through the gateway (cache-first).
EnhancedStores enhance_benchmark(const Benchmark& bench, gateway::VlmGateway& gw,
                                 enhance::EnhancementCache& cache);

RecallReport run_eval(const Benchmark& bench, const EnhancedStores* stores,
                      const embed::TwoTowerModel& model, const embed::TokenHasher& hasher,
                      const RunConfig& config);

// Contrastive pairs (query surface, positive doc surface), one per positive,
// under the given train-side enhancement switches, plus the negative pool for
// mining.
std::vector<embed::TrainPair> build_train_pairs(const Benchmark& bench,
                                                const EnhancedStores& stores,
                                                bool enhanced_queries, bool enhanced_corpus,
                                                const std::string& pool_id = "");
embed::NegativePool build_negative_pool(const Benchmark& bench, const EnhancedStores& stores,
                                        bool enhanced_corpus);

struct DeltaReport {
    std::vector<std::string> task_ids;
    std::vector<std::map<int, double>> deltas;  // b - a per task
    std::map<int, double> macro_delta;
};

DeltaReport compare_reports(const RecallReport& a, const RecallReport& b);

enum class ReportFormat { Markdown, Csv };

std::string render_report(const RecallReport& report, ReportFormat format);
std::string render_delta(const DeltaReport& delta);

// Full-precision JSON sidecar, including metadata and timestamps.
std::string report_to_json(const RecallReport& report);
RecallReport report_from_json(const std::string& text);

}  // namespace umr::eval
