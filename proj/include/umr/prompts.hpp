#pragma once

#include <string>

#include "umr/gateway.hpp"

namespace umr::prompts {

struct PromptTemplate {
    std::string template_id;
    std::string body;  // may contain {query_txt} and an <image> marker
    bool wants_image = false;
};

const PromptTemplate& corpus_caption_template();
const PromptTemplate& query_caption_template();
const PromptTemplate& qa_rewrite_template();
const PromptTemplate& modification_template();
const PromptTemplate& template_by_id(const std::string& template_id);

gateway::PromptMessage build_corpus_caption_prompt(const std::string& image_ref);
gateway::PromptMessage build_query_caption_prompt(const std::string& image_ref);
gateway::PromptMessage build_qa_rewrite_prompt(const std::string& query_text,
                                               const std::string& image_ref);
// Deliberately image-free: conditioning on the reference image biases the
// rewrite toward the reference instead of the requested target.
gateway::PromptMessage build_modification_prompt(const std::string& query_text);

}  // namespace umr::prompts
