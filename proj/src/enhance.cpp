#include "umr/enhance.hpp"

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <thread>

#include "json.hpp"
#include "umr/prompts.hpp"
#include "umr/util.hpp"

using nlohmann::json;

namespace umr::enhance {

namespace {

constexpr const char* kVisualContextSep = "\nVisual Context: ";
constexpr const char* kIdentityTemplate = "identity";

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

std::string make_cache_key(const std::string& template_id, const std::string& model_id,
                           const std::string& input_text, const std::string& image_ref,
                           const std::string& sidecar_dig) {
    // Length-prefixed fields so concatenation collisions are impossible.
    std::string material;
    for (const std::string* part :
         {&template_id, &model_id, &input_text, &image_ref, &sidecar_dig}) {
        material += std::to_string(part->size());
        material += ':';
        material += *part;
    }
    return util::digest_hex(material);
}

std::string sidecar_digest(const data::SidecarStore& sidecars,
                           const std::optional<std::string>& tokens_ref) {
    if (!tokens_ref) return "";
    return util::digest_hex(util::join(sidecars.get(*tokens_ref), "\n"));
}

EnhancementCache::EnhancementCache(std::string dir) : dir_(std::move(dir)) {
    if (!dir_.empty()) std::filesystem::create_directories(dir_);
}

std::optional<data::EnhancedRecord> EnhancementCache::get(const std::string& key) const {
    {
        std::lock_guard lock(mu_);
        auto it = mem_.find(key);
        if (it != mem_.end()) return it->second;
    }
    if (dir_.empty()) return std::nullopt;
    auto path = std::filesystem::path(dir_) / (key + ".json");
    if (!std::filesystem::exists(path)) return std::nullopt;
    json j = json::parse(util::read_file(path.string()), nullptr, false);
    if (j.is_discarded()) return std::nullopt;
    data::EnhancedRecord r;
    try {
        r.source_id = j.at("source_id").get<std::string>();
        r.side = data::side_from_string(j.at("side").get<std::string>());
        r.enhanced_text = j.at("enhanced_text").get<std::string>();
        r.category = data::category_from_string(j.at("category").get<std::string>());
        r.template_id = j.at("template_id").get<std::string>();
        r.model_id = j.at("model_id").get<std::string>();
        r.raw_reply = j.at("raw_reply").get<std::string>();
        r.fallback = j.at("fallback").get<bool>();
    } catch (const json::exception&) {
        return std::nullopt;
    }
    {
        std::lock_guard lock(mu_);
        mem_.emplace(key, r);
    }
    return r;
}

void EnhancementCache::put(const std::string& key, const data::EnhancedRecord& record) {
    std::lock_guard lock(mu_);
    mem_[key] = record;
    if (dir_.empty()) return;
    json j{{"source_id", record.source_id},
           {"side", data::to_string(record.side)},
           {"enhanced_text", record.enhanced_text},
           {"category", data::to_string(record.category)},
           {"template_id", record.template_id},
           {"model_id", record.model_id},
           {"raw_reply", record.raw_reply},
           {"fallback", record.fallback}};
    auto path = std::filesystem::path(dir_) / (key + ".json");
    util::write_file(path.string(), j.dump() + "\n");
}

size_t EnhancementCache::size() const {
    std::lock_guard lock(mu_);
    return mem_.size();
}

data::Category classify_corpus(const data::Document& doc) {
    switch (doc.modality) {
        case data::Modality::Text: return data::Category::I;
        case data::Modality::Image: return data::Category::II;
        case data::Modality::ImageText: return data::Category::III;
    }
    throw std::logic_error("bad modality");
}

EnhanceRequest plan_corpus(const data::Document& doc, const std::string& model_id,
                           const data::SidecarStore& sidecars) {
    EnhanceRequest req;
    req.source_id = doc.did;
    req.side = data::Side::CorpusSide;
    req.category = classify_corpus(doc);
    const std::string text = doc.text.value_or("");
    const std::string image = doc.image_ref.value_or("");
    switch (req.category) {
        case data::Category::I:
            req.template_id = kIdentityTemplate;
            req.original_text = text;
            req.needs_gateway = false;
            break;
        case data::Category::II:
        case data::Category::III:
            req.template_id = prompts::corpus_caption_template().template_id;
            req.original_text = text;
            req.prompt = prompts::build_corpus_caption_prompt(image);
            req.needs_gateway = true;
            break;
    }
    req.cache_key = make_cache_key(req.template_id, model_id, text, image,
                                   sidecar_digest(sidecars, doc.image_tokens_ref));
    return req;
}

EnhanceRequest plan_query(const data::Query& q, const std::string& model_id,
                          const data::SidecarStore& sidecars) {
    EnhanceRequest req;
    req.source_id = q.qid;
    req.side = data::Side::QuerySide;
    const std::string text = q.text.value_or("");
    const std::string image = q.image_ref.value_or("");

    if (q.modality == data::Modality::Image) {
        req.category = data::Category::II;
        req.template_id = prompts::query_caption_template().template_id;
        req.prompt = prompts::build_query_caption_prompt(image);
        req.needs_gateway = true;
    } else if (q.kind == data::QueryKind::Modification) {
        // The reference image is excluded on purpose; see build_modification_prompt.
        req.category = data::Category::III;
        req.template_id = prompts::modification_template().template_id;
        req.original_text = text;
        req.prompt = prompts::build_modification_prompt(text);
        req.needs_gateway = true;
    } else if (q.kind == data::QueryKind::QA && q.modality == data::Modality::ImageText) {
        req.category = data::Category::III;
        req.template_id = prompts::qa_rewrite_template().template_id;
        req.original_text = text;
        req.prompt = prompts::build_qa_rewrite_prompt(text, image);
        req.needs_gateway = true;
    } else {
        // Plain queries of any modality with text, and text-only QA queries
        // (nothing to resolve without an image).
        req.category = data::Category::I;
        req.template_id = kIdentityTemplate;
        req.original_text = text;
        req.needs_gateway = false;
    }
    req.cache_key = make_cache_key(req.template_id, model_id, text, image,
                                   sidecar_digest(sidecars, q.image_tokens_ref));
    return req;
}

namespace {

data::EnhancedRecord assemble(const EnhanceRequest& req, const std::string& model_id,
                              const std::string& raw_reply) {
    data::EnhancedRecord r;
    r.source_id = req.source_id;
    r.side = req.side;
    r.category = req.category;
    r.template_id = req.template_id;
    r.model_id = model_id;
    r.raw_reply = raw_reply;
    const std::string reply = trim(raw_reply);
    if (req.side == data::Side::CorpusSide && req.category == data::Category::III) {
        r.enhanced_text = req.original_text + kVisualContextSep + reply;
    } else {
        r.enhanced_text = reply;
    }
    return r;
}

data::EnhancedRecord identity_record(const EnhanceRequest& req, const std::string& model_id) {
    data::EnhancedRecord r;
    r.source_id = req.source_id;
    r.side = req.side;
    r.category = data::Category::I;
    r.template_id = req.template_id;
    r.model_id = model_id;
    r.enhanced_text = req.original_text;
    return r;
}

data::EnhancedRecord fallback_record(const EnhanceRequest& req, const std::string& model_id) {
    data::EnhancedRecord r;
    r.source_id = req.source_id;
    r.side = req.side;
    r.category = req.category;
    r.template_id = req.template_id;
    r.model_id = model_id;
    r.enhanced_text = req.original_text;
    r.fallback = true;
    return r;
}

}  // namespace

DispatchResult dispatch_batch(const std::vector<EnhanceRequest>& requests,
                              gateway::VlmGateway& gw, EnhancementCache& cache) {
    DispatchResult out;
    out.stats.total = requests.size();
    const std::string model_id = gw.config().model_id;

    // Deduplicate work by cache key, preserving first-seen order.
    std::unordered_map<std::string, size_t> key_to_slot;
    std::vector<size_t> slot_to_request;
    std::vector<size_t> item_slot(requests.size());
    for (size_t i = 0; i < requests.size(); ++i) {
        auto [it, inserted] = key_to_slot.emplace(requests[i].cache_key, slot_to_request.size());
        if (inserted) slot_to_request.push_back(i);
        item_slot[i] = it->second;
    }

    const size_t n_slots = slot_to_request.size();
    std::vector<data::EnhancedRecord> slot_record(n_slots);
    enum class SlotState { CacheHit, Fresh, Fallback };
    std::vector<SlotState> slot_state(n_slots, SlotState::Fresh);
    std::vector<size_t> pending;
    for (size_t s = 0; s < n_slots; ++s) {
        const EnhanceRequest& req = requests[slot_to_request[s]];
        if (auto hit = cache.get(req.cache_key)) {
            slot_record[s] = *hit;
            slot_state[s] = SlotState::CacheHit;
        } else if (!req.needs_gateway) {
            slot_record[s] = identity_record(req, model_id);
            cache.put(req.cache_key, slot_record[s]);
        } else {
            pending.push_back(s);
        }
    }

    if (!pending.empty()) {
        std::atomic<size_t> cursor{0};
        std::atomic<size_t> calls{0};
        std::atomic<size_t> successes{0};
        auto worker = [&] {
            for (;;) {
                size_t i = cursor.fetch_add(1);
                if (i >= pending.size()) return;
                size_t s = pending[i];
                const EnhanceRequest& req = requests[slot_to_request[s]];
                calls.fetch_add(1);
                gateway::GatewayReply reply = gw.complete(req.prompt);
                if (reply.ok && !trim(reply.content).empty()) {
                    slot_record[s] = assemble(req, model_id, reply.content);
                    cache.put(req.cache_key, slot_record[s]);
                    successes.fetch_add(1);
                } else {
                    std::fprintf(stderr, "enhance: %s failed after %d attempt(s): %s\n",
                                 req.source_id.c_str(), reply.attempts,
                                 reply.ok ? "empty reply" : reply.error.c_str());
                    slot_record[s] = fallback_record(req, model_id);
                    slot_state[s] = SlotState::Fallback;
                }
            }
        };
        size_t n_threads = std::max(1, gw.config().max_in_flight);
        n_threads = std::min(n_threads, pending.size());
        std::vector<std::thread> threads;
        for (size_t t = 1; t < n_threads; ++t) threads.emplace_back(worker);
        worker();
        for (auto& t : threads) t.join();
        out.stats.gateway_calls = calls.load();
        out.stats.gateway_success = successes.load();
    }

    out.records.reserve(requests.size());
    std::vector<bool> slot_emitted(n_slots, false);
    for (size_t i = 0; i < requests.size(); ++i) {
        size_t s = item_slot[i];
        data::EnhancedRecord rec = slot_record[s];
        rec.source_id = requests[i].source_id;
        rec.side = requests[i].side;
        rec.category = requests[i].category;
        out.records.push_back(std::move(rec));
        switch (slot_state[s]) {
            case SlotState::CacheHit:
                ++out.stats.cached;
                break;
            case SlotState::Fresh:
                if (slot_emitted[s]) ++out.stats.cached;
                else ++out.stats.enhanced;
                break;
            case SlotState::Fallback:
                ++out.stats.fallback;
                break;
        }
        slot_emitted[s] = true;
    }
    return out;
}

data::EnhancedRecord enhance_corpus(const data::Document& doc, gateway::VlmGateway& gw,
                                    EnhancementCache& cache, const data::SidecarStore& sidecars) {
    auto res = dispatch_batch({plan_corpus(doc, gw.config().model_id, sidecars)}, gw, cache);
    return res.records.at(0);
}

data::EnhancedRecord enhance_query(const data::Query& q, gateway::VlmGateway& gw,
                                   EnhancementCache& cache, const data::SidecarStore& sidecars) {
    auto res = dispatch_batch({plan_query(q, gw.config().model_id, sidecars)}, gw, cache);
    return res.records.at(0);
}

}  // namespace umr::enhance
