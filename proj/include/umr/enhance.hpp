#pragma once

#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "umr/datamodel.hpp"
#include "umr/gateway.hpp"

namespace umr::enhance {

std::string make_cache_key(const std::string& template_id, const std::string& model_id,
                           const std::string& input_text, const std::string& image_ref,
                           const std::string& sidecar_digest);

std::string sidecar_digest(const data::SidecarStore& sidecars,
                           const std::optional<std::string>& tokens_ref);

// In-memory store, optionally backed by a directory of <key>.json files so
// enhancement survives restarts. Safe for concurrent get/put.
class EnhancementCache {
public:
    EnhancementCache() = default;
    explicit EnhancementCache(std::string dir);

    std::optional<data::EnhancedRecord> get(const std::string& key) const;
    void put(const std::string& key, const data::EnhancedRecord& record);
    size_t size() const;

private:
    mutable std::mutex mu_;
    mutable std::unordered_map<std::string, data::EnhancedRecord> mem_;
    std::string dir_;
};

data::Category classify_corpus(const data::Document& doc);

// One planned enhancement: either an identity pass-through or a prompt
// awaiting a gateway round trip.
struct EnhanceRequest {
    std::string source_id;
    data::Side side = data::Side::CorpusSide;
    data::Category category = data::Category::I;
    std::string template_id;
    std::string original_text;
    gateway::PromptMessage prompt;
    bool needs_gateway = false;
    std::string cache_key;
};

EnhanceRequest plan_corpus(const data::Document& doc, const std::string& model_id,
                           const data::SidecarStore& sidecars);
EnhanceRequest plan_query(const data::Query& q, const std::string& model_id,
                          const data::SidecarStore& sidecars);

struct DispatchStats {
    size_t total = 0;
    size_t enhanced = 0;   // fresh results this run (identity or gateway)
    size_t cached = 0;     // served from the cache
    size_t fallback = 0;   // gateway failed, original text kept
    size_t gateway_calls = 0;    // unique round trips attempted
    size_t gateway_success = 0;  // unique round trips that produced a record
};

struct DispatchResult {
    std::vector<data::EnhancedRecord> records;  // aligned 1:1 with the input
    DispatchStats stats;
};

// Cache-first, deduplicating, bounded-concurrency dispatcher. Per-item
// failures become fallback records; the batch itself never aborts.
DispatchResult dispatch_batch(const std::vector<EnhanceRequest>& requests,
                              gateway::VlmGateway& gw, EnhancementCache& cache);

data::EnhancedRecord enhance_corpus(const data::Document& doc, gateway::VlmGateway& gw,
                                    EnhancementCache& cache, const data::SidecarStore& sidecars);
data::EnhancedRecord enhance_query(const data::Query& q, gateway::VlmGateway& gw,
                                   EnhancementCache& cache, const data::SidecarStore& sidecars);

}  // namespace umr::enhance
