#include <string>

#include "doctest.h"
#include "helpers.hpp"
#include "umr/prompts.hpp"
#include "umr/util.hpp"

using namespace umr;

#ifndef UMR_REPO_DIR
#error "UMR_REPO_DIR must point at the repository root"
#endif

namespace {

std::string golden(const std::string& name) {
    return util::read_file(std::string(UMR_REPO_DIR) + "/docs/prompts/" + name);
}

}  // namespace

TEST_SUITE("prompts") {

TEST_CASE("compiled templates match the files shipped under docs/prompts") {
    CHECK(prompts::corpus_caption_template().body == golden("corpus_caption.txt"));
    CHECK(prompts::query_caption_template().body == golden("query_caption.txt"));
    CHECK(prompts::qa_rewrite_template().body == golden("qa_rewrite.txt"));
    CHECK(prompts::modification_template().body == golden("modification.txt"));
}

TEST_CASE("template ids resolve and unknown ids fail") {
    CHECK(prompts::template_by_id("corpus_caption").template_id == "corpus_caption");
    CHECK(prompts::template_by_id("query_caption").template_id == "query_caption");
    CHECK(prompts::template_by_id("qa_rewrite").template_id == "qa_rewrite");
    CHECK(prompts::template_by_id("modification").template_id == "modification");
    expect_throw_contains([] { prompts::template_by_id("summarize"); }, {"unknown template", "summarize"});
}

TEST_CASE("caption templates differ only in the length budget") {
    std::string corpus = prompts::corpus_caption_template().body;
    std::string query = prompts::query_caption_template().body;
    CHECK(corpus != query);
    CHECK(corpus.find("Maximum 100 words") != std::string::npos);
    CHECK(query.find("Maximum 50 words") != std::string::npos);
    // Replacing the budget makes them byte-identical.
    std::string patched = corpus;
    patched.replace(patched.find("Maximum 100 words"), 17, "Maximum 50 words");
    CHECK(patched == query);
}

TEST_CASE("caption builders attach the image") {
    auto msg = prompts::build_corpus_caption_prompt("images/x.jpg");
    CHECK(msg.text == prompts::corpus_caption_template().body);
    REQUIRE(msg.image_ref.has_value());
    CHECK(*msg.image_ref == "images/x.jpg");
    CHECK(prompts::corpus_caption_template().wants_image);
    CHECK(prompts::query_caption_template().wants_image);
}

TEST_CASE("qa rewrite substitutes the query text and keeps the image") {
    auto msg = prompts::build_qa_rewrite_prompt("When was it discovered?", "img/panda.jpg");
    CHECK(msg.text.find("Query: When was it discovered?") != std::string::npos);
    CHECK(msg.text.find("{query_txt}") == std::string::npos);
    REQUIRE(msg.image_ref.has_value());
    CHECK(*msg.image_ref == "img/panda.jpg");
    // Everything around the slot is unchanged.
    std::string body = prompts::qa_rewrite_template().body;
    auto slot = body.find("{query_txt}");
    CHECK(msg.text.substr(0, slot) == body.substr(0, slot));
}

TEST_CASE("modification prompt never carries an image") {
    auto msg = prompts::build_modification_prompt("Remove the lemon.");
    CHECK(msg.text.find("Current Input: Remove the lemon.") != std::string::npos);
    CHECK_FALSE(msg.image_ref.has_value());
    CHECK_FALSE(prompts::modification_template().wants_image);
}

TEST_CASE("builders reject empty inputs") {
    expect_throw_contains([] { prompts::build_corpus_caption_prompt(""); }, {"requires an image"});
    expect_throw_contains([] { prompts::build_query_caption_prompt(""); }, {"requires an image"});
    expect_throw_contains([] { prompts::build_qa_rewrite_prompt("", "i.jpg"); }, {"requires query text"});
    expect_throw_contains([] { prompts::build_qa_rewrite_prompt("q?", ""); }, {"requires an image"});
    expect_throw_contains([] { prompts::build_modification_prompt(""); }, {"requires query text"});
}

}  // TEST_SUITE
