#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "umr/gateway.hpp"

namespace umr::synth {

struct SynthConfig {
    int n_entities = 100;
    int distractors_per_entity = 3;
    double caption_noise = 0.2;   // fraction of attribute tokens the oracle omits
    double deixis_rate = 1.0;     // fraction of QA queries phrased deictically
    std::vector<std::string> filler_phrases;  // empty -> defaults
    uint64_t seed = 0;
};

const std::vector<std::string>& default_filler_phrases();

struct Distractor {
    std::string id;
    std::string image_ref;
    std::vector<std::string> attribute_tokens;   // noun kept, two adjectives swapped
    std::vector<std::string> novel_adjectives;   // the swapped-in pair
};

struct Entity {
    std::string id;
    std::string class_word;               // deictic category ("animal", ...)
    std::string noun;
    std::vector<std::string> adjectives;  // 3..5, distinct
    std::vector<std::string> attribute_tokens;  // adjectives then noun
    std::string canonical_name;           // "adj1 adj2 noun"
    std::vector<std::string> spurious_tokens;   // shared within the scene cluster
    std::string image_ref;                // primary image
    std::string pair_image_ref;           // image of the image+text doc
    std::vector<Distractor> distractors;
};

struct SynthWorld {
    SynthConfig config;
    std::vector<Entity> entities;
    std::vector<std::string> deictic_phrases;
};

SynthWorld generate_world(const SynthConfig& config);

// Everything the oracle needs to answer for one image.
struct AnswerEntry {
    std::string canonical_name;
    std::vector<std::string> attribute_tokens;
    std::vector<std::string> spurious_tokens;
};

// The VLM stand-in: deterministic replies computed from planted answers.
struct MockOracle {
    std::map<std::string, AnswerEntry> answers;  // image_ref -> entry
    std::vector<std::string> deictic_phrases;
    std::vector<std::string> filler_phrases;
    double caption_noise = 0.0;
    uint64_t seed = 0;

    static MockOracle from_world(const SynthWorld& world);
    static MockOracle from_benchmark(const std::string& dir);
};

// Classifies the prompt by its template markers and produces the reply.
// Throws on caption/QA requests whose image is not in the answer map.
std::string mock_vlm_reply(const MockOracle& oracle, const std::string& prompt_text,
                           const std::optional<std::string>& image_ref);

// Rule-based constraint distillation used for modification requests.
std::string distill_modification(const std::string& text,
                                 const std::vector<std::string>& filler_phrases);

class MockVlm : public gateway::VlmGateway {
public:
    explicit MockVlm(MockOracle oracle, gateway::VlmGatewayConfig cfg = {});

    gateway::GatewayReply complete(const gateway::PromptMessage& msg) override;
    const gateway::VlmGatewayConfig& config() const override { return cfg_; }
    const MockOracle& oracle() const { return oracle_; }

private:
    MockOracle oracle_;
    gateway::VlmGatewayConfig cfg_;
};

// Writes corpus/query/task/answer/sidecar files and returns the manifest
// (also written as manifest.json). Image refs are opaque ids; only sidecar
// token files exist on disk.
struct Manifest {
    std::map<std::string, std::string> pools;  // pool_id -> corpus file
    std::string queries_file;
    std::string tasks_file;
    std::string answers_file;
    std::map<std::string, size_t> counts;
};

Manifest emit_benchmark(const SynthWorld& world, const std::string& out_dir);

}  // namespace umr::synth
