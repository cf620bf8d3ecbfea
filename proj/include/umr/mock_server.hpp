#pragma once

#include <memory>
#include <string>
#include <vector>

#include "umr/synth.hpp"

namespace umr::synth {

struct LoggedRequest {
    std::string prompt_text;       // concatenated text parts
    int image_parts = 0;
    std::vector<std::string> image_urls;
    std::string authorization;     // raw header value, empty if absent
};

struct MockServerOptions {
    // Respond 500 to this many /chat/completions calls before behaving,
    // for retry-path tests.
    int fail_first_n = 0;
};

// Chat-completions mock bound to 127.0.0.1 on an ephemeral port.
class MockServer {
public:
    MockServer(MockOracle oracle, MockServerOptions opts = {});
    ~MockServer();

    MockServer(const MockServer&) = delete;
    MockServer& operator=(const MockServer&) = delete;

    std::string base_url() const;
    int port() const;
    std::vector<LoggedRequest> log() const;
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

std::unique_ptr<MockServer> serve_mock(MockOracle oracle, MockServerOptions opts = {});

}  // namespace umr::synth
