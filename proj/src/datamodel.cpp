#include "umr/datamodel.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "umr/util.hpp"

using nlohmann::json;

namespace umr::data {

std::string to_string(Modality m) {
    switch (m) {
        case Modality::Text: return "text";
        case Modality::Image: return "image";
        case Modality::ImageText: return "image,text";
    }
    throw std::logic_error("bad modality");
}

Modality modality_from_string(const std::string& s) {
    if (s == "text") return Modality::Text;
    if (s == "image") return Modality::Image;
    if (s == "image,text") return Modality::ImageText;
    throw std::runtime_error("unknown modality '" + s + "'");
}

std::string to_string(QueryKind k) {
    switch (k) {
        case QueryKind::Plain: return "plain";
        case QueryKind::QA: return "qa";
        case QueryKind::Modification: return "modification";
    }
    throw std::logic_error("bad query kind");
}

QueryKind query_kind_from_string(const std::string& s) {
    if (s == "plain") return QueryKind::Plain;
    if (s == "qa") return QueryKind::QA;
    if (s == "modification") return QueryKind::Modification;
    throw std::runtime_error("unknown query kind '" + s + "'");
}

std::string to_string(Side s) {
    return s == Side::CorpusSide ? "corpus" : "query";
}

Side side_from_string(const std::string& s) {
    if (s == "corpus") return Side::CorpusSide;
    if (s == "query") return Side::QuerySide;
    throw std::runtime_error("unknown side '" + s + "'");
}

std::string to_string(Category c) {
    switch (c) {
        case Category::I: return "I";
        case Category::II: return "II";
        case Category::III: return "III";
    }
    throw std::logic_error("bad category");
}

Category category_from_string(const std::string& s) {
    if (s == "I") return Category::I;
    if (s == "II") return Category::II;
    if (s == "III") return Category::III;
    throw std::runtime_error("unknown category '" + s + "'");
}

const TaskSpec& TaskRegistry::at(const std::string& task_id) const {
    auto it = tasks.find(task_id);
    if (it == tasks.end()) throw std::runtime_error("unknown task_id '" + task_id + "'");
    return it->second;
}

namespace {

[[noreturn]] void fail_at(const std::string& path, size_t line_no, const std::string& what) {
    throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + what);
}

std::optional<std::string> opt_string(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) throw std::runtime_error(std::string("field '") + key + "' must be a string");
    return it->get<std::string>();
}

void check_fields(const std::string& id, Modality m,
                  const std::optional<std::string>& text,
                  const std::optional<std::string>& image_ref) {
    switch (m) {
        case Modality::Text:
            if (!text) throw std::runtime_error("'" + id + "': modality text requires txt");
            if (image_ref) throw std::runtime_error("'" + id + "': modality text forbids img_path");
            break;
        case Modality::Image:
            if (!image_ref) throw std::runtime_error("'" + id + "': modality image requires img_path");
            if (text) throw std::runtime_error("'" + id + "': modality image forbids txt");
            break;
        case Modality::ImageText:
            if (!text || !image_ref)
                throw std::runtime_error("'" + id + "': modality image,text requires txt and img_path");
            break;
    }
}

// Calls fn(line_no, parsed_json) for every non-empty line.
template <typename Fn>
void for_each_record(const std::string& path, Fn&& fn) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) fail_at(path, line_no, "malformed JSON");
        if (!j.is_object()) fail_at(path, line_no, "record is not a JSON object");
        try {
            fn(line_no, j);
        } catch (const std::exception& e) {
            fail_at(path, line_no, e.what());
        }
    }
}

json opt_to_json(const std::optional<std::string>& v) {
    return v ? json(*v) : json(nullptr);
}

}  // namespace

std::vector<Document> load_corpus(const std::string& path) {
    std::vector<Document> docs;
    std::set<std::string> seen;
    for_each_record(path, [&](size_t, const json& j) {
        Document d;
        auto did = opt_string(j, "did");
        if (!did) throw std::runtime_error("missing did");
        d.did = *did;
        if (!seen.insert(d.did).second) throw std::runtime_error("duplicate did '" + d.did + "'");
        d.text = opt_string(j, "txt");
        d.image_ref = opt_string(j, "img_path");
        auto mod = opt_string(j, "modality");
        if (!mod) throw std::runtime_error("missing modality");
        d.modality = modality_from_string(*mod);
        d.image_tokens_ref = opt_string(j, "img_tokens_path");
        check_fields(d.did, d.modality, d.text, d.image_ref);
        docs.push_back(std::move(d));
    });
    return docs;
}

std::vector<Query> load_queries(const std::string& path, const TaskRegistry& tasks) {
    std::vector<Query> queries;
    std::set<std::string> seen;
    for_each_record(path, [&](size_t, const json& j) {
        Query q;
        auto qid = opt_string(j, "qid");
        if (!qid) throw std::runtime_error("missing qid");
        q.qid = *qid;
        if (!seen.insert(q.qid).second) throw std::runtime_error("duplicate qid '" + q.qid + "'");

        q.text = opt_string(j, "query_txt");
        if (!q.text) q.text = opt_string(j, "txt");
        q.image_ref = opt_string(j, "query_img_path");
        if (!q.image_ref) q.image_ref = opt_string(j, "img_path");
        auto mod = opt_string(j, "query_modality");
        if (!mod) mod = opt_string(j, "modality");
        if (!mod) throw std::runtime_error("missing query_modality");
        q.modality = modality_from_string(*mod);
        q.image_tokens_ref = opt_string(j, "img_tokens_path");

        auto task_id = opt_string(j, "task_id");
        if (!task_id) throw std::runtime_error("missing task_id");
        q.task_id = *task_id;
        const TaskSpec& spec = tasks.at(q.task_id);
        q.kind = spec.kind;

        auto instr = opt_string(j, "instruction");
        q.instruction = instr ? *instr : spec.instruction;

        auto pos = j.find("pos_cand_list");
        if (pos == j.end() || !pos->is_array() || pos->empty())
            throw std::runtime_error("'" + q.qid + "': pos_cand_list missing or empty");
        for (const auto& p : *pos) {
            if (!p.is_string()) throw std::runtime_error("'" + q.qid + "': pos_cand_list entries must be strings");
            q.positives.insert(p.get<std::string>());
        }

        check_fields(q.qid, q.modality, q.text, q.image_ref);
        queries.push_back(std::move(q));
    });
    return queries;
}

TaskRegistry load_tasks(const std::string& path) {
    json j = json::parse(util::read_file(path), nullptr, false);
    if (j.is_discarded() || !j.is_object())
        throw std::runtime_error(path + ": task registry must be a JSON object");
    TaskRegistry reg;
    for (auto it = j.begin(); it != j.end(); ++it) {
        const json& t = it.value();
        if (!t.is_object()) throw std::runtime_error(path + ": task '" + it.key() + "' must be an object");
        TaskSpec spec;
        spec.task_id = it.key();
        try {
            spec.name = t.at("name").get<std::string>();
            spec.query_modality = modality_from_string(t.at("query_modality").get<std::string>());
            spec.corpus_modality = modality_from_string(t.at("corpus_modality").get<std::string>());
            spec.pool_id = t.at("pool_id").get<std::string>();
            spec.kind = query_kind_from_string(t.at("kind").get<std::string>());
            if (t.contains("cutoffs")) {
                spec.cutoffs = t.at("cutoffs").get<std::vector<int>>();
                for (size_t i = 0; i < spec.cutoffs.size(); ++i) {
                    if (spec.cutoffs[i] < 1 || (i > 0 && spec.cutoffs[i] <= spec.cutoffs[i - 1]))
                        throw std::runtime_error("cutoffs must be strictly increasing positives");
                }
                if (spec.cutoffs.empty()) throw std::runtime_error("cutoffs must be non-empty");
            }
            if (t.contains("instruction")) spec.instruction = t.at("instruction").get<std::string>();
            if (t.contains("advisory")) spec.advisory = t.at("advisory").get<bool>();
        } catch (const json::exception& e) {
            throw std::runtime_error(path + ": task '" + it.key() + "': " + e.what());
        }
        reg.tasks.emplace(spec.task_id, std::move(spec));
    }
    return reg;
}

void write_corpus(const std::vector<Document>& docs, const std::string& path) {
    std::ostringstream out;
    for (const auto& d : docs) {
        json j{{"did", d.did},
               {"txt", opt_to_json(d.text)},
               {"img_path", opt_to_json(d.image_ref)},
               {"modality", to_string(d.modality)}};
        if (d.image_tokens_ref) j["img_tokens_path"] = *d.image_tokens_ref;
        out << j.dump() << '\n';
    }
    util::write_file(path, out.str());
}

void write_queries(const std::vector<Query>& queries, const std::string& path) {
    std::ostringstream out;
    for (const auto& q : queries) {
        json j{{"qid", q.qid},
               {"query_txt", opt_to_json(q.text)},
               {"query_img_path", opt_to_json(q.image_ref)},
               {"query_modality", to_string(q.modality)},
               {"task_id", q.task_id},
               {"pos_cand_list", json(q.positives)}};
        if (!q.instruction.empty()) j["instruction"] = q.instruction;
        if (q.image_tokens_ref) j["img_tokens_path"] = *q.image_tokens_ref;
        out << j.dump() << '\n';
    }
    util::write_file(path, out.str());
}

void write_enhanced(const std::vector<EnhancedRecord>& records, const std::string& path) {
    std::ostringstream out;
    for (const auto& r : records) {
        json j{{"source_id", r.source_id},
               {"side", to_string(r.side)},
               {"enhanced_text", r.enhanced_text},
               {"category", to_string(r.category)},
               {"template_id", r.template_id},
               {"model_id", r.model_id},
               {"raw_reply", r.raw_reply},
               {"fallback", r.fallback}};
        out << j.dump() << '\n';
    }
    util::write_file(path, out.str());
}

std::vector<EnhancedRecord> load_enhanced(const std::string& path) {
    std::vector<EnhancedRecord> records;
    for_each_record(path, [&](size_t, const json& j) {
        EnhancedRecord r;
        r.source_id = j.at("source_id").get<std::string>();
        r.side = side_from_string(j.at("side").get<std::string>());
        r.enhanced_text = j.at("enhanced_text").get<std::string>();
        r.category = category_from_string(j.at("category").get<std::string>());
        r.template_id = j.at("template_id").get<std::string>();
        r.model_id = j.at("model_id").get<std::string>();
        r.raw_reply = j.at("raw_reply").get<std::string>();
        r.fallback = j.at("fallback").get<bool>();
        records.push_back(std::move(r));
    });
    return records;
}

const std::vector<std::string>& SidecarStore::get(const std::string& ref) const {
    auto it = cache_.find(ref);
    if (it != cache_.end()) return it->second;

    std::filesystem::path p(ref);
    if (p.is_relative() && !root_.empty()) p = std::filesystem::path(root_) / p;
    std::ifstream in(p);
    if (!in) throw std::runtime_error("cannot open sidecar token file " + p.string());
    std::vector<std::string> tokens;
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (!line.empty()) tokens.push_back(line);
    }
    return cache_.emplace(ref, std::move(tokens)).first->second;
}

void SidecarStore::warm(const std::vector<std::string>& refs) const {
    for (const auto& r : refs) get(r);
}

}  // namespace umr::data
