#include "umr/prompts.hpp"

#include <stdexcept>

namespace umr::prompts {

namespace {

constexpr const char* kCorpusCaptionBody =
R"PROMPT(Task: Generate a precise, keyword-rich text entry based on the [Image].

Instructions:
1. Subject First: Identify the main object, entity, or scene layout immediately.
2. Distinctive Features: List specific details: colors, materials, text/logos (if visible), and unique shapes. If a detail doesn't exist, don't mention it (no stating 'no visible logos or text').
3. Entity Recognition: If the object is a named entity (e.g., 'Eiffel Tower', 'Toyota Camry', 'Nike'), state it.
4. Viewpoint: Mention the angle (e.g., 'close-up', 'aerial', 'profile') ONLY IF it distinguishes the image.
5. No Filler: Do not use aesthetic words (e.g., 'beautiful', 'cinematic'). Focus on factual visual content.
6. Length: Maximum 100 words.

Reference Image: <image>
Output:
)PROMPT";

constexpr const char* kQueryCaptionBody =
R"PROMPT(Task: Generate a precise, keyword-rich text entry based on the [Image].

Instructions:
1. Subject First: Identify the main object, entity, or scene layout immediately.
2. Distinctive Features: List specific details: colors, materials, text/logos (if visible), and unique shapes. If a detail doesn't exist, don't mention it (no stating 'no visible logos or text').
3. Entity Recognition: If the object is a named entity (e.g., 'Eiffel Tower', 'Toyota Camry', 'Nike'), state it.
4. Viewpoint: Mention the angle (e.g., 'close-up', 'aerial', 'profile') ONLY IF it distinguishes the image.
5. No Filler: Do not use aesthetic words (e.g., 'beautiful', 'cinematic'). Focus on factual visual content.
6. Length: Maximum 50 words.

Reference Image: <image>
Output:
)PROMPT";

constexpr const char* kQaRewriteBody =
R"PROMPT(Task: Rewrite the user's question by integrating the visual subject.
Goal: Create a search query that matches text documents. Keep it extremely concise.

Strict Constraint Rules:
1. Length Limit: The added visual description must be MAX 3-5 words. No long sentences.
2. The 'Specific vs. Generic' Split:
   - If Unique Entity (Landmark, Art, Car Model): Use the NAME only. Delete all visual adjectives.
     - BAD: 'Who built this tall iron tower?'
     - GOOD: 'Who built the Eiffel Tower?'
   - If Generic Object (Food, Plant, Animal): Use [Dominant Color/Material] + [Broad Category].
     - BAD: 'What is this delicious spicy red soup with shrimp?' (Too many distractors)
     - GOOD: 'What is this red noodle soup with shrimp?' (Anchors only)
3. No 'Filler' Adjectives: Banned words: 'beautiful', 'large', 'small', 'generic', 'distinct', 'looking', 'shaped'.
4. No Environment: Never mention background, weather, or lighting.
5. Zero-Leakage: NEVER answer the question yourself. YOU ARE ONLY REWRITING THE QUERY.

Examples:

Input: [Photo of Giant Panda] | Query: 'When was it discovered?'
Output: When was the Giant Panda discovered?
(Reason: Named entity. No adjectives needed.)

Input: [Photo of Yellowjacket Wasp] | Query: 'What species is this?'
Output: What species is this black and yellow wasp?
(Reason: 'Black and yellow' distinguishes it. 'Insect' is too broad, 'Wasp' is better.)

Input: [Photo of Red Laksa Soup] | Query: 'What dish is this?'
Output: What dish is this red noodle soup with shrimp?
(Reason: 'Red', 'Noodle', 'Shrimp' are the only keys needed to find the recipe.)

Input: [Photo of Blue Ford Focus] | Query: 'What car is this?'
Output: What car is this blue hatchback?
(Reason: 'Blue' and 'Hatchback' filter the candidates. 'Ford Focus' might be a hallucination, so we play it safe. We also don't want to leak the answer.)

Input: [Photo of Melting Clock Painting] | Query: 'Who painted this?'
Output: Who painted The Persistence of Memory?
(Reason: Unique Art -> Specific Name.)

Current Task:
Query: {query_txt}
Input Image: <image>
Output:
)PROMPT";

constexpr const char* kModificationBody =
R"PROMPT(Task: Extract the key semantic phrases describing the TARGET image. Remove conversational filler and grammar words.
Input: User Query (describing a change or a target attribute).

Strict Reduction Rules:
1. Delete Filler Verbs: Remove 'Is', 'Has', 'Make', 'Change', 'Show', 'Put', 'Be'.
2. Delete Pronouns/Articles: Remove 'it', 'the', 'a', 'an', 'my', 'me', 'them', 'this'.
3. Preserve Adjectives & Nouns: Keep ALL descriptors (colors, patterns, objects). If the user says 'Is white', output 'White'.
4. Preserve Prepositions: Keep 'with', 'on', 'in', 'without' to maintain spatial/compositional logic.

Note: There are cases where the original query is concise enough, and you might not have to change anything.

Examples:

Input: 'Is shiny and silver with shorter sleeves.'
Output: Shiny silver with shorter sleeves

Input: 'Is white in color with short sleeves and is more plain.'
Output: White, short sleeves, more plain

Input: 'Remove the lemon.'
Output: Remove lemon

Input: 'Make the needle upside down in the hand.'
Output: Needle upside down in hand

Input: 'Human and one animal from a different species.'
Output: Human and animal from different species

Input: 'Is a plain white feminine t shirt and is a tan shirt.'
Output: Plain white feminine t-shirt and tan shirt

Input: 'Remove all cheetahs.'
Output: Remove all cheetahs

Input: 'Remove one cheetah.'
Output: Remove one cheetah.

Input: 'Remove green from the background.'
Output: Remove green from background.

Current Input: {query_txt}
Output:
)PROMPT";

std::string substitute_query(const std::string& body, const std::string& query_text) {
    const std::string slot = "{query_txt}";
    auto pos = body.find(slot);
    if (pos == std::string::npos) throw std::logic_error("template has no {query_txt} slot");
    std::string out = body;
    out.replace(pos, slot.size(), query_text);
    return out;
}

}  // namespace

const PromptTemplate& corpus_caption_template() {
    static const PromptTemplate t{"corpus_caption", kCorpusCaptionBody, true};
    return t;
}

const PromptTemplate& query_caption_template() {
    static const PromptTemplate t{"query_caption", kQueryCaptionBody, true};
    return t;
}

const PromptTemplate& qa_rewrite_template() {
    static const PromptTemplate t{"qa_rewrite", kQaRewriteBody, true};
    return t;
}

const PromptTemplate& modification_template() {
    static const PromptTemplate t{"modification", kModificationBody, false};
    return t;
}

const PromptTemplate& template_by_id(const std::string& template_id) {
    if (template_id == "corpus_caption") return corpus_caption_template();
    if (template_id == "query_caption") return query_caption_template();
    if (template_id == "qa_rewrite") return qa_rewrite_template();
    if (template_id == "modification") return modification_template();
    throw std::runtime_error("unknown template '" + template_id + "'");
}

gateway::PromptMessage build_corpus_caption_prompt(const std::string& image_ref) {
    if (image_ref.empty()) throw std::runtime_error("corpus caption prompt requires an image");
    return {corpus_caption_template().body, image_ref};
}

gateway::PromptMessage build_query_caption_prompt(const std::string& image_ref) {
    if (image_ref.empty()) throw std::runtime_error("query caption prompt requires an image");
    return {query_caption_template().body, image_ref};
}

gateway::PromptMessage build_qa_rewrite_prompt(const std::string& query_text,
                                               const std::string& image_ref) {
    if (query_text.empty()) throw std::runtime_error("qa rewrite prompt requires query text");
    if (image_ref.empty()) throw std::runtime_error("qa rewrite prompt requires an image");
    return {substitute_query(qa_rewrite_template().body, query_text), image_ref};
}

gateway::PromptMessage build_modification_prompt(const std::string& query_text) {
    if (query_text.empty()) throw std::runtime_error("modification prompt requires query text");
    return {substitute_query(modification_template().body, query_text), std::nullopt};
}

}  // namespace umr::prompts
