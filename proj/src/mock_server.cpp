#include "umr/mock_server.hpp"

#include <atomic>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "httplib.h"
#include "json.hpp"

using nlohmann::json;

namespace umr::synth {

struct MockServer::Impl {
    MockOracle oracle;
    MockServerOptions opts;
    httplib::Server server;
    std::thread listener;
    int port = 0;
    std::atomic<int> failures_left{0};
    mutable std::mutex log_mu;
    std::vector<LoggedRequest> log;
};

MockServer::MockServer(MockOracle oracle, MockServerOptions opts) : impl_(new Impl) {
    impl_->oracle = std::move(oracle);
    impl_->opts = opts;
    impl_->failures_left = opts.fail_first_n;

    impl_->server.Get("/health", [](const httplib::Request&, httplib::Response& res) {
        res.set_content("ok", "text/plain");
    });

    impl_->server.Post("/chat/completions", [this](const httplib::Request& req,
                                                   httplib::Response& res) {
        json body = json::parse(req.body, nullptr, false);
        LoggedRequest entry;
        entry.authorization = req.get_header_value("Authorization");
        std::optional<std::string> image_ref;
        if (!body.is_discarded() && body.contains("messages")) {
            for (const auto& msg : body["messages"]) {
                if (!msg.contains("content") || !msg["content"].is_array()) continue;
                for (const auto& part : msg["content"]) {
                    std::string type = part.value("type", "");
                    if (type == "text") {
                        entry.prompt_text += part.value("text", "");
                    } else if (type == "image_url") {
                        ++entry.image_parts;
                        std::string url = part.contains("image_url")
                                              ? part["image_url"].value("url", "")
                                              : "";
                        entry.image_urls.push_back(url);
                        if (!image_ref) image_ref = url;
                    }
                }
            }
        }
        {
            std::lock_guard lock(impl_->log_mu);
            impl_->log.push_back(entry);
        }

        if (body.is_discarded()) {
            res.status = 400;
            res.set_content(json{{"error", "malformed JSON body"}}.dump(), "application/json");
            return;
        }
        if (impl_->failures_left.fetch_sub(1) > 0) {
            res.status = 500;
            res.set_content(json{{"error", "injected failure"}}.dump(), "application/json");
            return;
        }
        impl_->failures_left.fetch_add(1);  // keep the counter from drifting below zero

        try {
            std::string reply = mock_vlm_reply(impl_->oracle, entry.prompt_text, image_ref);
            json out{{"model", "mock-vlm"},
                     {"choices",
                      json::array({json{{"index", 0},
                                        {"message", {{"role", "assistant"}, {"content", reply}}},
                                        {"finish_reason", "stop"}}})}};
            res.set_content(out.dump(), "application/json");
        } catch (const std::exception& e) {
            res.status = 400;
            res.set_content(json{{"error", e.what()}}.dump(), "application/json");
        }
    });

    impl_->port = impl_->server.bind_to_any_port("127.0.0.1");
    if (impl_->port <= 0) throw std::runtime_error("mock server: failed to bind a port");
    impl_->listener = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
}

MockServer::~MockServer() { stop(); }

void MockServer::stop() {
    if (impl_->listener.joinable()) {
        impl_->server.stop();
        impl_->listener.join();
    }
}

std::string MockServer::base_url() const {
    return "http://127.0.0.1:" + std::to_string(impl_->port);
}

int MockServer::port() const { return impl_->port; }

std::vector<LoggedRequest> MockServer::log() const {
    std::lock_guard lock(impl_->log_mu);
    return impl_->log;
}

std::unique_ptr<MockServer> serve_mock(MockOracle oracle, MockServerOptions opts) {
    return std::make_unique<MockServer>(std::move(oracle), opts);
}

}  // namespace umr::synth
