#include "umr/gateway.hpp"

#include <chrono>
#include <thread>

#include "httplib.h"
#include "json.hpp"

using nlohmann::json;

namespace umr::gateway {

std::string image_url_from_ref(const std::string& ref) {
    if (ref.rfind("data:", 0) == 0 || ref.find("://") != std::string::npos) return ref;
    return "file://" + ref;
}

std::string wire_body(const VlmGatewayConfig& cfg, const PromptMessage& msg) {
    json content = json::array();
    content.push_back({{"type", "text"}, {"text", msg.text}});
    if (msg.image_ref) {
        content.push_back({{"type", "image_url"},
                           {"image_url", {{"url", image_url_from_ref(*msg.image_ref)}}}});
    }
    json body{{"model", cfg.model_id},
              {"temperature", cfg.temperature},
              {"max_tokens", cfg.max_output_tokens},
              {"messages", json::array({json{{"role", "user"}, {"content", content}}})}};
    return body.dump();
}

namespace {

struct ParsedEndpoint {
    std::string host_port;  // scheme://host:port
    std::string base_path;  // path prefix, no trailing slash
};

ParsedEndpoint split_endpoint(const std::string& url) {
    auto scheme_end = url.find("://");
    size_t path_start = scheme_end == std::string::npos
                            ? url.find('/')
                            : url.find('/', scheme_end + 3);
    ParsedEndpoint ep;
    if (path_start == std::string::npos) {
        ep.host_port = url;
    } else {
        ep.host_port = url.substr(0, path_start);
        ep.base_path = url.substr(path_start);
        while (!ep.base_path.empty() && ep.base_path.back() == '/') ep.base_path.pop_back();
    }
    return ep;
}

bool transient_status(int status) {
    return status == 429 || (status >= 500 && status < 600);
}

}  // namespace

struct HttpVlmGateway::Impl {
    ParsedEndpoint endpoint;

    explicit Impl(const VlmGatewayConfig& cfg) : endpoint(split_endpoint(cfg.endpoint_url)) {}
};

HttpVlmGateway::HttpVlmGateway(VlmGatewayConfig cfg)
    : cfg_(std::move(cfg)), impl_(std::make_unique<Impl>(cfg_)) {}

HttpVlmGateway::~HttpVlmGateway() = default;

GatewayReply HttpVlmGateway::complete(const PromptMessage& msg) {
    const std::string path = impl_->endpoint.base_path + "/chat/completions";
    const std::string body = wire_body(cfg_, msg);
    httplib::Headers headers;
    if (!cfg_.bearer_token.empty())
        headers.emplace("Authorization", "Bearer " + cfg_.bearer_token);

    // httplib clients are not safe to share across threads; complete() may be
    // called concurrently from the dispatcher, so each call gets its own.
    httplib::Client client(impl_->endpoint.host_port);
    client.set_connection_timeout(0, cfg_.timeout_ms * 1000LL);
    client.set_read_timeout(cfg_.timeout_ms / 1000, (cfg_.timeout_ms % 1000) * 1000);

    GatewayReply reply;
    std::string last_error;
    for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
        if (attempt > 0) {
            auto delay = std::chrono::milliseconds(cfg_.backoff_base_ms << (attempt - 1));
            std::this_thread::sleep_for(delay);
        }
        ++reply.attempts;
        auto res = client.Post(path, headers, body, "application/json");
        if (!res) {
            last_error = "network error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status != 200) {
            last_error = "http status " + std::to_string(res->status);
            if (transient_status(res->status)) continue;
            break;
        }
        json j = json::parse(res->body, nullptr, false);
        if (j.is_discarded()) {
            last_error = "malformed reply JSON";
            break;
        }
        try {
            reply.content = j.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const json::exception&) {
            last_error = "reply missing choices[0].message.content";
            break;
        }
        reply.ok = true;
        return reply;
    }
    reply.error = last_error;
    return reply;
}

}  // namespace umr::gateway
