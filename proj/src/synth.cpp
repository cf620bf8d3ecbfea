#include "umr/synth.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "umr/datamodel.hpp"
#include "umr/util.hpp"

using nlohmann::json;

namespace umr::synth {

namespace {

struct NounEntry {
    const char* noun;
    const char* class_word;
};

constexpr NounEntry kNouns[] = {
    {"cheetah", "animal"},   {"panda", "animal"},      {"falcon", "animal"},
    {"otter", "animal"},     {"bison", "animal"},      {"gecko", "animal"},
    {"heron", "animal"},     {"lynx", "animal"},       {"marmot", "animal"},
    {"toucan", "animal"},    {"cathedral", "building"}, {"pagoda", "building"},
    {"lighthouse", "building"}, {"windmill", "building"}, {"observatory", "building"},
    {"chapel", "building"},  {"fortress", "building"}, {"granary", "building"},
    {"sedan", "vehicle"},    {"trawler", "vehicle"},   {"glider", "vehicle"},
    {"tram", "vehicle"},     {"scooter", "vehicle"},   {"zeppelin", "vehicle"},
    {"rickshaw", "vehicle"}, {"snowplow", "vehicle"},  {"kimono", "garment"},
    {"parka", "garment"},    {"tunic", "garment"},     {"waistcoat", "garment"},
    {"sarong", "garment"},   {"poncho", "garment"},    {"laksa", "dish"},
    {"risotto", "dish"},     {"goulash", "dish"},      {"tagine", "dish"},
    {"chowder", "dish"},     {"strudel", "dish"},      {"cello", "instrument"},
    {"marimba", "instrument"}, {"theremin", "instrument"}, {"banjo", "instrument"},
    {"ocarina", "instrument"}, {"zither", "instrument"}, {"fern", "plant"},
    {"baobab", "plant"},     {"orchid", "plant"},      {"juniper", "plant"},
    {"cactus", "plant"},     {"bamboo", "plant"},      {"drone", "gadget"},
    {"projector", "gadget"}, {"toaster", "gadget"},    {"modem", "gadget"},
    {"compass", "gadget"},   {"turntable", "gadget"},  {"obelisk", "landmark"},
    {"aqueduct", "landmark"}, {"ziggurat", "landmark"}, {"monolith", "landmark"},
    {"armoire", "furniture"}, {"settee", "furniture"}, {"credenza", "furniture"},
    {"ottoman", "furniture"},
};

constexpr const char* kAdjectives[] = {
    "crimson",  "cobalt",    "amber",     "ivory",     "obsidian",   "sleek",
    "rugged",   "glossy",    "matte",     "striped",   "spotted",    "woven",
    "carved",   "gilded",    "rusty",     "polished",  "angular",    "curved",
    "towering", "compact",   "ancient",   "foldable",  "inflatable", "ceramic",
    "wooden",   "copper",    "velvet",    "braided",   "perforated", "lacquered",
    "tapered",  "ribbed",    "quilted",   "speckled",  "translucent", "magnetic",
    "hydraulic", "thermal",  "nocturnal", "migratory", "armored",    "feathered",
    "scaled",   "fragrant",  "spicy",     "smoked",    "pickled",    "crescent",
    "hexagonal", "slender",  "stout",     "weathered", "luminous",   "agile",
    "burly",    "hollow",    "dappled",   "frosted",   "embossed",   "serrated",
};

constexpr const char* kSpurious[] = {
    "sky_blue",       "sky_gray",        "overcast",       "sunny_glare",
    "viewpoint_aerial", "viewpoint_closeup", "viewpoint_profile", "low_light",
    "golden_hour",    "motion_blur",     "shallow_focus",  "grainy_texture",
    "vignette_border", "harsh_shadow",   "neon_tint",      "sepia_tone",
    "wide_angle",     "fisheye_warp",    "backlit_rim",    "softbox_light",
    "tripod_steady",  "handheld_shake",  "foggy_haze",     "rain_streaks",
};

constexpr int kClusterSize = 8;

const std::set<std::string>& banned_words() {
    static const std::set<std::string> words{"is", "has", "make", "change", "show",
                                             "put", "be",  "it",  "the",    "a",
                                             "an",  "my",  "me",  "them",   "this"};
    return words;
}

std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

bool istarts_with(const std::string& s, const std::string& prefix) {
    if (s.size() < prefix.size()) return false;
    for (size_t i = 0; i < prefix.size(); ++i)
        if (std::tolower(static_cast<unsigned char>(s[i])) !=
            std::tolower(static_cast<unsigned char>(prefix[i])))
            return false;
    return true;
}

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string entity_tag(int i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "e%04d", i);
    return buf;
}

}  // namespace

const std::vector<std::string>& default_filler_phrases() {
    static const std::vector<std::string> phrases{
        "Unlike the reference image, I want the target image to have",
        "Unlike the reference image, I want the target image to be",
        "Unlike the reference image, I want the target image to show",
        "I want the target image to have",
        "I want the target image to be",
        "The target image should have",
        "The target image should be",
        "Compared to the reference, the target should have",
    };
    return phrases;
}

SynthWorld generate_world(const SynthConfig& config) {
    if (config.n_entities < 1) throw std::runtime_error("generate_world: n_entities must be >= 1");
    if (config.distractors_per_entity < 0)
        throw std::runtime_error("generate_world: distractors_per_entity must be >= 0");
    if (config.caption_noise < 0.0 || config.caption_noise > 1.0)
        throw std::runtime_error("generate_world: caption_noise must be in [0,1]");
    if (config.deixis_rate < 0.0 || config.deixis_rate > 1.0)
        throw std::runtime_error("generate_world: deixis_rate must be in [0,1]");

    SynthWorld world;
    world.config = config;
    if (world.config.filler_phrases.empty())
        world.config.filler_phrases = default_filler_phrases();

    util::SplitMix64 rng(config.seed);
    const size_t n_nouns = std::size(kNouns);
    const size_t n_adj = std::size(kAdjectives);
    const size_t n_spur = std::size(kSpurious);

    int n_clusters = (config.n_entities + kClusterSize - 1) / kClusterSize;
    std::vector<std::vector<std::string>> cluster_spurious(n_clusters);
    for (auto& cluster : cluster_spurious) {
        std::vector<size_t> pick(n_spur);
        for (size_t i = 0; i < n_spur; ++i) pick[i] = i;
        util::shuffle(pick, rng);
        for (int t = 0; t < 3; ++t) cluster.push_back(kSpurious[pick[t]]);
    }

    std::set<std::string> used_names;
    std::set<std::string> class_set;
    for (int i = 0; i < config.n_entities; ++i) {
        Entity e;
        e.id = entity_tag(i);
        for (int attempt = 0;; ++attempt) {
            if (attempt > 1000) throw std::runtime_error("generate_world: name space exhausted");
            const NounEntry& ne = kNouns[rng.below(n_nouns)];
            std::vector<size_t> pick(n_adj);
            for (size_t t = 0; t < n_adj; ++t) pick[t] = t;
            util::shuffle(pick, rng);
            size_t n_attrs = 3 + rng.below(3);
            std::vector<std::string> adjs;
            for (size_t t = 0; t < n_attrs; ++t) adjs.push_back(kAdjectives[pick[t]]);
            std::string name = adjs[0] + " " + adjs[1] + " " + ne.noun;
            if (!used_names.insert(name).second) continue;
            e.noun = ne.noun;
            e.class_word = ne.class_word;
            e.adjectives = std::move(adjs);
            e.canonical_name = std::move(name);
            break;
        }
        e.attribute_tokens = e.adjectives;
        e.attribute_tokens.push_back(e.noun);
        e.spurious_tokens = cluster_spurious[i / kClusterSize];
        e.image_ref = "images/" + e.id + ".img";
        e.pair_image_ref = "images/" + e.id + "_b.img";
        class_set.insert(e.class_word);

        std::set<std::string> own(e.adjectives.begin(), e.adjectives.end());
        for (int d = 0; d < config.distractors_per_entity; ++d) {
            Distractor dis;
            dis.id = e.id + "_d" + std::to_string(d);
            dis.image_ref = "images/" + dis.id + ".img";
            dis.attribute_tokens = e.attribute_tokens;
            std::set<std::string> taken = own;
            for (int swap = 0; swap < 2; ++swap) {
                size_t pos = rng.below(e.adjectives.size());
                std::string fresh;
                do {
                    fresh = kAdjectives[rng.below(n_adj)];
                } while (taken.count(fresh));
                taken.insert(fresh);
                // Both swaps may land on the same slot; the distractor still
                // differs from the entity in at least one attribute.
                dis.attribute_tokens[pos] = fresh;
                dis.novel_adjectives.push_back(fresh);
            }
            e.distractors.push_back(std::move(dis));
        }
        world.entities.push_back(std::move(e));
    }

    for (const auto& c : class_set) world.deictic_phrases.push_back("this " + c);
    for (const auto& c : class_set) world.deictic_phrases.push_back("that " + c);
    world.deictic_phrases.push_back("it");
    world.deictic_phrases.push_back("this");
    world.deictic_phrases.push_back("that");
    return world;
}

MockOracle MockOracle::from_world(const SynthWorld& world) {
    MockOracle o;
    o.deictic_phrases = world.deictic_phrases;
    o.filler_phrases = world.config.filler_phrases;
    o.caption_noise = world.config.caption_noise;
    o.seed = world.config.seed;
    for (const auto& e : world.entities) {
        AnswerEntry entry{e.canonical_name, e.attribute_tokens, e.spurious_tokens};
        o.answers[e.image_ref] = entry;
        o.answers[e.pair_image_ref] = entry;
        for (const auto& d : e.distractors) {
            // A distractor has no name of its own; naming it after the entity
            // mirrors a VLM that recognizes the same subject with different
            // attributes.
            o.answers[d.image_ref] = AnswerEntry{e.canonical_name, d.attribute_tokens,
                                                 e.spurious_tokens};
        }
    }
    return o;
}

MockOracle MockOracle::from_benchmark(const std::string& dir) {
    namespace fs = std::filesystem;
    json manifest = json::parse(util::read_file((fs::path(dir) / "manifest.json").string()));
    MockOracle o;
    o.caption_noise = manifest.at("config").at("caption_noise").get<double>();
    o.seed = manifest.at("config").at("seed").get<uint64_t>();
    o.deictic_phrases = manifest.at("deictic_phrases").get<std::vector<std::string>>();
    o.filler_phrases = manifest.at("config").at("filler_phrases").get<std::vector<std::string>>();
    json answers = json::parse(
        util::read_file((fs::path(dir) / manifest.at("answers").get<std::string>()).string()));
    for (auto it = answers.begin(); it != answers.end(); ++it) {
        AnswerEntry e;
        e.canonical_name = it.value().at("canonical_name").get<std::string>();
        e.attribute_tokens = it.value().at("attribute_tokens").get<std::vector<std::string>>();
        e.spurious_tokens = it.value().at("spurious_tokens").get<std::vector<std::string>>();
        o.answers[it.key()] = std::move(e);
    }
    return o;
}

namespace {

const AnswerEntry& lookup_image(const MockOracle& oracle,
                                const std::optional<std::string>& image_ref) {
    if (!image_ref) throw std::runtime_error("mock oracle: request carries no image");
    std::string ref = *image_ref;
    if (ref.rfind("file://", 0) == 0) ref = ref.substr(7);
    auto it = oracle.answers.find(ref);
    if (it == oracle.answers.end())
        throw std::runtime_error("mock oracle: unknown image '" + ref + "'");
    return it->second;
}

std::string caption_reply(const MockOracle& oracle, const std::string& ref_for_seed,
                          const AnswerEntry& entry) {
    util::SplitMix64 rng(util::fnv1a64(ref_for_seed, oracle.seed));
    size_t n = entry.attribute_tokens.size();
    size_t n_drop = static_cast<size_t>(oracle.caption_noise * static_cast<double>(n));
    std::vector<size_t> idx(n);
    for (size_t i = 0; i < n; ++i) idx[i] = i;
    util::shuffle(idx, rng);
    std::set<size_t> dropped(idx.begin(), idx.begin() + n_drop);
    std::vector<std::string> parts;
    for (size_t i = 0; i < n; ++i)
        if (!dropped.count(i)) parts.push_back(entry.attribute_tokens[i]);
    if (!entry.spurious_tokens.empty()) {
        std::vector<size_t> sp(entry.spurious_tokens.size());
        for (size_t i = 0; i < sp.size(); ++i) sp[i] = i;
        util::shuffle(sp, rng);
        size_t n_sp = std::min<size_t>(1 + rng.below(2), sp.size());
        for (size_t i = 0; i < n_sp; ++i) parts.push_back(entry.spurious_tokens[sp[i]]);
    }
    return util::join(parts, " ");
}

bool word_boundary(const std::string& s, size_t pos, size_t len) {
    auto alnum = [&](size_t i) {
        return std::isalnum(static_cast<unsigned char>(s[i])) != 0;
    };
    if (pos > 0 && alnum(pos - 1)) return false;
    if (pos + len < s.size() && alnum(pos + len)) return false;
    return true;
}

// First word-boundary occurrence, case-insensitive, longest phrase wins.
std::string resolve_deixis(const std::string& text, const std::vector<std::string>& phrases,
                           const std::string& canonical_name) {
    std::vector<std::string> ordered = phrases;
    std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
        if (a.size() != b.size()) return a.size() > b.size();
        return a < b;
    });
    std::string low = lower(text);
    for (const auto& phrase : ordered) {
        std::string p = lower(phrase);
        size_t pos = 0;
        while ((pos = low.find(p, pos)) != std::string::npos) {
            if (word_boundary(low, pos, p.size())) {
                return text.substr(0, pos) + "the " + canonical_name +
                       text.substr(pos + p.size());
            }
            ++pos;
        }
    }
    return text;
}

std::string extract_between(const std::string& text, const std::string& start_marker,
                            const std::string& end_marker) {
    size_t b = text.find(start_marker);
    if (b == std::string::npos)
        throw std::runtime_error("mock oracle: prompt missing '" + trim(start_marker) + "'");
    b += start_marker.size();
    size_t e = text.find(end_marker, b);
    if (e == std::string::npos)
        throw std::runtime_error("mock oracle: prompt missing '" + trim(end_marker) + "'");
    return text.substr(b, e - b);
}

}  // namespace

std::string distill_modification(const std::string& text,
                                 const std::vector<std::string>& filler_phrases) {
    std::string s = trim(text);

    std::vector<std::string> phrases = filler_phrases;
    std::sort(phrases.begin(), phrases.end(), [](const auto& a, const auto& b) {
        if (a.size() != b.size()) return a.size() > b.size();
        return a < b;
    });
    for (const auto& phrase : phrases) {
        if (!phrase.empty() && istarts_with(s, phrase)) {
            s = trim(s.substr(phrase.size()));
            break;
        }
    }
    if (!s.empty() && s.back() == '.') s.pop_back();

    std::istringstream words(s);
    std::vector<std::string> kept;
    std::string w;
    bool leading_banned = false;
    while (words >> w) {
        std::string core = w;
        while (!core.empty() && !std::isalnum(static_cast<unsigned char>(core.back())))
            core.pop_back();
        while (!core.empty() && !std::isalnum(static_cast<unsigned char>(core.front())))
            core.erase(core.begin());
        if (banned_words().count(lower(core))) {
            if (kept.empty()) leading_banned = true;
            continue;
        }
        kept.push_back(w);
    }

    // "and" joins its neighbors: a multi-word left segment reads as a full
    // constraint and gets a "; " separator, a single word just continues.
    std::vector<std::vector<std::string>> segments(1);
    for (const auto& word : kept) {
        if (lower(word) == "and") {
            if (!segments.back().empty()) segments.emplace_back();
        } else {
            segments.back().push_back(word);
        }
    }
    std::string out;
    for (size_t i = 0; i < segments.size(); ++i) {
        if (segments[i].empty()) continue;
        if (!out.empty()) out += segments[i - 1].size() >= 2 ? "; " : " ";
        out += util::join(segments[i], " ");
    }

    if (leading_banned)
        for (char& c : out) {
            if (std::isalpha(static_cast<unsigned char>(c))) {
                c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
                break;
            }
            if (!std::isspace(static_cast<unsigned char>(c))) break;
        }
    return out;
}

std::string mock_vlm_reply(const MockOracle& oracle, const std::string& prompt_text,
                           const std::optional<std::string>& image_ref) {
    if (prompt_text.find("Strict Reduction Rules:") != std::string::npos) {
        std::string query = extract_between(prompt_text, "Current Input: ", "\nOutput:");
        return distill_modification(query, oracle.filler_phrases);
    }
    if (prompt_text.find("Strict Constraint Rules:") != std::string::npos) {
        std::string query = extract_between(prompt_text, "Current Task:\nQuery: ", "\nInput Image:");
        const AnswerEntry& entry = lookup_image(oracle, image_ref);
        return resolve_deixis(query, oracle.deictic_phrases, entry.canonical_name);
    }
    if (prompt_text.find("keyword-rich text entry based on the [Image]") != std::string::npos) {
        const AnswerEntry& entry = lookup_image(oracle, image_ref);
        std::string ref = *image_ref;
        if (ref.rfind("file://", 0) == 0) ref = ref.substr(7);
        return caption_reply(oracle, ref, entry);
    }
    throw std::runtime_error("mock oracle: unrecognized prompt");
}

MockVlm::MockVlm(MockOracle oracle, gateway::VlmGatewayConfig cfg)
    : oracle_(std::move(oracle)), cfg_(std::move(cfg)) {
    if (cfg_.model_id.empty()) cfg_.model_id = "mock-vlm";
}

gateway::GatewayReply MockVlm::complete(const gateway::PromptMessage& msg) {
    gateway::GatewayReply reply;
    reply.attempts = 1;
    try {
        reply.content = mock_vlm_reply(oracle_, msg.text, msg.image_ref);
        reply.ok = true;
    } catch (const std::exception& e) {
        reply.error = e.what();
    }
    return reply;
}

namespace {

std::string describe_all_attributes(const Entity& e) {
    std::string s = "A";
    for (const auto& a : e.adjectives) s += " " + a;
    s += " " + e.noun + ".";
    return s;
}

const char* qa_template(uint64_t pick) {
    switch (pick % 4) {
        case 0: return "When was %s discovered?";
        case 1: return "Where is %s typically found?";
        case 2: return "Who designed %s?";
        default: return "How old is %s?";
    }
}

}  // namespace

Manifest emit_benchmark(const SynthWorld& world, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(fs::path(out_dir) / "sidecars");

    const SynthConfig& cfg = world.config;
    // A generation-dependent stream, separate from the one used inside
    // generate_world, keyed so (config, seed) fully determines the output.
    util::SplitMix64 rng(cfg.seed ^ 0xB0C4DE5F12345678ull);

    std::vector<data::Document> pool_text, pool_image;
    std::vector<data::Query> queries;
    std::map<std::string, AnswerEntry> answers;

    auto sidecar_ref = [&](const std::string& image_ref) {
        fs::path p(image_ref);
        return "sidecars/" + p.stem().string() + ".tokens.txt";
    };
    auto write_sidecar = [&](const std::string& image_ref,
                             const std::vector<std::string>& tokens) {
        std::string rel = sidecar_ref(image_ref);
        util::write_file((fs::path(out_dir) / rel).string(), util::join(tokens, "\n") + "\n");
        return rel;
    };

    for (const auto& e : world.entities) {
        AnswerEntry entry{e.canonical_name, e.attribute_tokens, e.spurious_tokens};
        answers[e.image_ref] = entry;
        answers[e.pair_image_ref] = entry;

        data::Document txt_doc;
        txt_doc.did = "txt_" + e.id;
        txt_doc.text = describe_all_attributes(e);
        txt_doc.modality = data::Modality::Text;
        pool_text.push_back(txt_doc);

        data::Document it_doc;
        it_doc.did = "it_" + e.id;
        it_doc.text = "A photo of a " + e.class_word + ".";
        it_doc.image_ref = e.pair_image_ref;
        it_doc.modality = data::Modality::ImageText;
        it_doc.image_tokens_ref = write_sidecar(e.pair_image_ref, e.spurious_tokens);
        pool_text.push_back(it_doc);

        data::Document img_doc;
        img_doc.did = "img_" + e.id;
        img_doc.image_ref = e.image_ref;
        img_doc.modality = data::Modality::Image;
        img_doc.image_tokens_ref = write_sidecar(e.image_ref, e.spurious_tokens);
        pool_image.push_back(img_doc);

        for (const auto& d : e.distractors) {
            answers[d.image_ref] =
                AnswerEntry{e.canonical_name, d.attribute_tokens, e.spurious_tokens};
            data::Document dis_doc;
            dis_doc.did = "dis_" + d.id;
            dis_doc.image_ref = d.image_ref;
            dis_doc.modality = data::Modality::Image;
            dis_doc.image_tokens_ref = write_sidecar(d.image_ref, e.spurious_tokens);
            pool_image.push_back(dis_doc);
        }

        // QA: deictic or resolved reference, answered by the entity's text docs.
        {
            data::Query q;
            q.qid = "q_qa_" + e.id;
            q.task_id = "synth-qa-0";
            q.kind = data::QueryKind::QA;
            q.modality = data::Modality::ImageText;
            bool deictic = rng.uniform() < cfg.deixis_rate;
            std::string ref_phrase =
                deictic ? "this " + e.class_word : "the " + e.canonical_name;
            char buf[256];
            std::snprintf(buf, sizeof(buf), qa_template(rng.next()), ref_phrase.c_str());
            q.text = std::string(buf);
            // No token sidecar: low-level image features have nothing to
            // match in a text pool, so a blind embedder gets no signal from
            // the photo. The evidence is only reachable through the oracle.
            q.image_ref = e.image_ref;
            // The paired image+text doc stays in the pool as a distractor: it
            // names the class, not the entity, so it does not answer the
            // question.
            q.positives = {"txt_" + e.id};
            queries.push_back(std::move(q));
        }

        // Plain text query describing the entity, answered by its image doc.
        {
            data::Query q;
            q.qid = "q_cap_" + e.id;
            q.task_id = "synth-cap-1";
            q.kind = data::QueryKind::Plain;
            q.modality = data::Modality::Text;
            q.text = describe_all_attributes(e);
            q.positives = {"img_" + e.id};
            queries.push_back(std::move(q));
        }

        // Modification: reference image plus a filler-wrapped constraint pair
        // naming the first distractor's swapped-in adjectives.
        if (!e.distractors.empty()) {
            const Distractor& d = e.distractors.front();
            data::Query q;
            q.qid = "q_mod_" + e.id;
            q.task_id = "synth-mod-2";
            q.kind = data::QueryKind::Modification;
            q.modality = data::Modality::ImageText;
            const auto& phrases = cfg.filler_phrases;
            std::string filler = phrases[rng.below(phrases.size())];
            // Anchored on a scene token so the distilled request still names
            // the shared context, the way real modification requests do.
            const std::string& scene = e.spurious_tokens[rng.below(e.spurious_tokens.size())];
            q.text = filler + " the " + scene + " scene with " + d.novel_adjectives[0] + " and " +
                     d.novel_adjectives[1] + ".";
            q.image_ref = e.image_ref;
            q.image_tokens_ref = sidecar_ref(e.image_ref);
            q.positives = {"dis_" + d.id};
            queries.push_back(std::move(q));
        }
    }

    json tasks{
        {"synth-qa-0",
         {{"name", "SynthQA-0"},
          {"query_modality", "image,text"},
          {"corpus_modality", "text"},
          {"pool_id", "pool_text"},
          {"kind", "qa"},
          {"instruction", "Retrieve a passage that answers the question."}}},
        {"synth-cap-1",
         {{"name", "SynthCap-1"},
          {"query_modality", "text"},
          {"corpus_modality", "image"},
          {"pool_id", "pool_image"},
          {"kind", "plain"},
          {"instruction", "Retrieve an image matching the description."}}},
        {"synth-mod-2",
         {{"name", "SynthMod-2"},
          {"query_modality", "image,text"},
          {"corpus_modality", "image"},
          {"pool_id", "pool_image"},
          {"kind", "modification"},
          {"instruction", "Retrieve an image that matches the modified reference."}}},
    };

    data::write_corpus(pool_text, (fs::path(out_dir) / "corpus_text.jsonl").string());
    data::write_corpus(pool_image, (fs::path(out_dir) / "corpus_image.jsonl").string());
    util::write_file((fs::path(out_dir) / "tasks.json").string(), tasks.dump(2) + "\n");

    {
        data::TaskRegistry reg = data::load_tasks((fs::path(out_dir) / "tasks.json").string());
        for (auto& q : queries) q.instruction = reg.at(q.task_id).instruction;
    }
    data::write_queries(queries, (fs::path(out_dir) / "queries.jsonl").string());

    json answers_json = json::object();
    for (const auto& [ref, entry] : answers) {
        answers_json[ref] = {{"canonical_name", entry.canonical_name},
                             {"attribute_tokens", entry.attribute_tokens},
                             {"spurious_tokens", entry.spurious_tokens}};
    }
    util::write_file((fs::path(out_dir) / "answers.json").string(), answers_json.dump(2) + "\n");

    Manifest m;
    m.pools = {{"pool_text", "corpus_text.jsonl"}, {"pool_image", "corpus_image.jsonl"}};
    m.queries_file = "queries.jsonl";
    m.tasks_file = "tasks.json";
    m.answers_file = "answers.json";
    m.counts = {{"pool_text", pool_text.size()},
                {"pool_image", pool_image.size()},
                {"queries", queries.size()},
                {"entities", world.entities.size()}};

    json manifest{{"version", 1},
                  {"config",
                   {{"n_entities", cfg.n_entities},
                    {"distractors_per_entity", cfg.distractors_per_entity},
                    {"caption_noise", cfg.caption_noise},
                    {"deixis_rate", cfg.deixis_rate},
                    {"filler_phrases", cfg.filler_phrases},
                    {"seed", cfg.seed}}},
                  {"pools", m.pools},
                  {"queries", m.queries_file},
                  {"tasks", m.tasks_file},
                  {"answers", m.answers_file},
                  {"deictic_phrases", world.deictic_phrases},
                  {"counts", m.counts}};
    util::write_file((fs::path(out_dir) / "manifest.json").string(), manifest.dump(2) + "\n");
    return m;
}

}  // namespace umr::synth
