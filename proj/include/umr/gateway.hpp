#pragma once

#include <memory>
#include <optional>
#include <string>

namespace umr::gateway {

// A single-turn user message: prompt text plus at most one image attachment.
struct PromptMessage {
    std::string text;
    std::optional<std::string> image_ref;
};

struct GatewayReply {
    bool ok = false;
    std::string content;
    std::string error;
    int attempts = 0;
};

struct VlmGatewayConfig {
    std::string endpoint_url;
    std::string model_id = "mock-vlm";
    int max_output_tokens = 512;
    double temperature = 0.0;
    int timeout_ms = 30000;
    int max_retries = 3;
    int max_in_flight = 4;
    int backoff_base_ms = 100;
    std::string bearer_token;
};

class VlmGateway {
public:
    virtual ~VlmGateway() = default;
    virtual GatewayReply complete(const PromptMessage& msg) = 0;
    virtual const VlmGatewayConfig& config() const = 0;
};

// Request body for POST {endpoint_url}/chat/completions, serialized text.
// Exposed separately so tests can assert on the exact wire payload.
std::string wire_body(const VlmGatewayConfig& cfg, const PromptMessage& msg);

// Turns an image reference into the url field of an image_url part:
// data: and scheme-qualified URIs pass through, bare paths get file://.
std::string image_url_from_ref(const std::string& ref);

class HttpVlmGateway : public VlmGateway {
public:
    explicit HttpVlmGateway(VlmGatewayConfig cfg);
    ~HttpVlmGateway() override;

    GatewayReply complete(const PromptMessage& msg) override;
    const VlmGatewayConfig& config() const override { return cfg_; }

private:
    VlmGatewayConfig cfg_;
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace umr::gateway
