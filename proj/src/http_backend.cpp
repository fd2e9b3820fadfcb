#include "evolvr/http_backend.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <map>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "evolvr/errors.hpp"

namespace evolvr {

using json = nlohmann::json;

namespace {

std::string body_excerpt(const std::string& body) {
    constexpr std::size_t kMax = 200;
    if (body.size() <= kMax) return body;
    return body.substr(0, kMax) + "...";
}

}  // namespace

HttpBackendConfig http_config_from_env(HttpBackendConfig base) {
    if (const char* v = std::getenv("EVOLVR_API_BASE")) base.base_url = v;
    if (const char* v = std::getenv("EVOLVR_API_KEY")) base.api_key = v;
    if (const char* v = std::getenv("EVOLVR_MODEL")) base.model = v;
    return base;
}

HttpBackend::HttpBackend(HttpBackendConfig config)
    : config_(std::move(config)), in_flight_(std::max(1, config_.max_in_flight)) {
    std::string url = config_.base_url;
    if (url.find("://") == std::string::npos) url = "http://" + url;
    const auto authority_start = url.find("://") + 3;
    const auto path_start = url.find('/', authority_start);
    std::string path_prefix;
    if (path_start == std::string::npos) {
        client_base_ = url;
    } else {
        client_base_ = url.substr(0, path_start);
        path_prefix = url.substr(path_start);
    }
    while (!path_prefix.empty() && path_prefix.back() == '/') path_prefix.pop_back();
    // Accept both bare hosts and bases that already end in /v1.
    if (path_prefix.size() >= 3 && path_prefix.compare(path_prefix.size() - 3, 3, "/v1") == 0) {
        endpoint_path_ = path_prefix + "/chat/completions";
    } else {
        endpoint_path_ = path_prefix + "/v1/chat/completions";
    }
}

std::string HttpBackend::post_chat(const std::string& payload) {
    in_flight_.acquire();
    struct Release {
        std::counting_semaphore<>& sem;
        ~Release() { sem.release(); }
    } release{in_flight_};

    httplib::Headers headers;
    if (!config_.api_key.empty()) {
        headers.emplace("Authorization", "Bearer " + config_.api_key);
    }

    int last_status = 0;
    std::string last_body;
    bool last_rate_limited = false;
    long long next_sleep_ms = 0;

    for (int attempt = 0; attempt <= config_.retry.max_retries; ++attempt) {
        if (attempt > 0 && next_sleep_ms > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(next_sleep_ms));
        }
        // Backoff before the attempt after this one, unless Retry-After overrides.
        next_sleep_ms = static_cast<long long>(config_.retry.base_delay_ms *
                                               std::pow(config_.retry.factor, attempt));

        httplib::Client client(client_base_);
        client.set_connection_timeout(config_.timeout_s, 0);
        client.set_read_timeout(config_.timeout_s, 0);
        client.set_write_timeout(config_.timeout_s, 0);

        auto res = client.Post(endpoint_path_, headers, payload, "application/json");
        if (!res) {
            last_status = 0;
            last_body = "connection failed: " + httplib::to_string(res.error());
            last_rate_limited = false;
            continue;  // connection failures are retryable
        }

        if (res->status == 200) return res->body;

        last_status = res->status;
        last_body = res->body;
        last_rate_limited = res->status == 429;

        if (res->status == 429 || res->status >= 500) {
            if (last_rate_limited && res->has_header("Retry-After")) {
                int retry_after_s = std::atoi(res->get_header_value("Retry-After").c_str());
                if (retry_after_s > 0) next_sleep_ms = 1000ll * retry_after_s;
            }
            continue;
        }

        fail("backend.transport",
             "HTTP " + std::to_string(res->status) + " from " + endpoint_path_ + ": " +
                 body_excerpt(res->body));
    }

    if (last_rate_limited || last_status == 429) {
        fail("backend.rate_limited",
             "rate limited after " + std::to_string(config_.retry.max_retries) + " retries: " +
                 body_excerpt(last_body));
    }
    fail("backend.transport", "request failed after " +
                                  std::to_string(config_.retry.max_retries) + " retries (status " +
                                  std::to_string(last_status) + "): " + body_excerpt(last_body));
}

GenerationResponse HttpBackend::generate(const GenerationRequest& request) {
    json messages = json::array();
    if (!request.system_text.empty()) {
        messages.push_back({{"role", "system"}, {"content", request.system_text}});
    }
    messages.push_back({{"role", "user"}, {"content", request.user_text}});

    json payload{{"model", config_.model},
                 {"messages", std::move(messages)},
                 {"temperature", request.temperature},
                 {"max_tokens", request.max_tokens}};
    if (request.seed) payload["seed"] = *request.seed;

    json reply;
    try {
        reply = json::parse(post_chat(payload.dump()));
    } catch (const json::parse_error& e) {
        fail("backend.transport", std::string("unparseable completion payload: ") + e.what());
    }

    if (!reply.contains("choices") || !reply["choices"].is_array() || reply["choices"].empty()) {
        fail("backend.transport", "completion payload has no choices");
    }
    const json& choice = reply["choices"][0];

    GenerationResponse response;
    if (choice.contains("message") && choice["message"].contains("content") &&
        choice["message"]["content"].is_string()) {
        response.text = choice["message"]["content"].get<std::string>();
    }
    const std::string reason = choice.value("finish_reason", std::string("stop"));
    if (reason == "stop") {
        response.finish_reason = FinishReason::stop;
    } else if (reason == "length") {
        response.finish_reason = FinishReason::length;
    } else {
        response.finish_reason = FinishReason::error;
    }
    if (reply.contains("usage") && reply["usage"].is_object()) {
        TokenUsage usage;
        usage.prompt_tokens = reply["usage"].value("prompt_tokens", 0ll);
        usage.completion_tokens = reply["usage"].value("completion_tokens", 0ll);
        response.usage = usage;
    }
    if (response.finish_reason == FinishReason::stop && response.text.empty()) {
        response.finish_reason = FinishReason::error;
    }
    return response;
}

ScoreLogits HttpBackend::score_logits(const std::string& context_text) {
    if (!config_.expect_logprobs) {
        fail("backend.capability_unsupported",
             "backend is configured without logprob support; the confidence filter cannot run");
    }

    // Chat servers cannot continue raw text, so the context rides in a single
    // user message and we read the first completion token's top logprobs.
    json payload{{"model", config_.model},
                 {"messages", json::array({{{"role", "user"}, {"content", context_text}}})},
                 {"temperature", 0.0},
                 {"max_tokens", 1},
                 {"logprobs", true},
                 {"top_logprobs", config_.top_logprobs}};

    json reply;
    try {
        reply = json::parse(post_chat(payload.dump()));
    } catch (const json::parse_error& e) {
        fail("backend.transport", std::string("unparseable logprob payload: ") + e.what());
    }

    const json* top = nullptr;
    if (reply.contains("choices") && reply["choices"].is_array() && !reply["choices"].empty()) {
        const json& choice = reply["choices"][0];
        if (choice.contains("logprobs") && choice["logprobs"].is_object()) {
            const json& lp = choice["logprobs"];
            if (lp.contains("content") && lp["content"].is_array() && !lp["content"].empty()) {
                const json& first = lp["content"][0];
                if (first.contains("top_logprobs") && first["top_logprobs"].is_array()) {
                    top = &first["top_logprobs"];
                }
            }
        }
    }
    if (top == nullptr) {
        fail("backend.capability_unsupported",
             "server returned no top_logprobs; the confidence filter cannot run");
    }

    std::map<std::string, double> exposed;
    double global_min = 0.0;
    bool any = false;
    for (const auto& entry : *top) {
        if (!entry.contains("token") || !entry.contains("logprob")) continue;
        const std::string token = entry["token"].get<std::string>();
        const double logprob = entry["logprob"].get<double>();
        if (!std::isfinite(logprob)) continue;
        exposed.emplace(token, logprob);  // keep the first (highest-ranked) entry
        global_min = any ? std::min(global_min, logprob) : logprob;
        any = true;
    }

    double exposed_min = 0.0;
    bool any_score = false;
    for (int score = 1; score <= 5; ++score) {
        auto it = exposed.find(std::to_string(score));
        if (it == exposed.end()) continue;
        exposed_min = any_score ? std::min(exposed_min, it->second) : it->second;
        any_score = true;
    }

    // Unexposed score tokens fall to a floor 10 nats under the lowest exposed
    // one: finite, but effectively impossible.  When no score token is exposed
    // at all every score lands on the floor, which downstream filters treat as
    // an ambiguous (rejected) peak.
    const double floor = (any_score ? exposed_min : (any ? global_min : 0.0)) - 10.0;

    ScoreLogits logits{};
    for (int score = 1; score <= 5; ++score) {
        auto it = exposed.find(std::to_string(score));
        logits[static_cast<std::size_t>(score - 1)] = it != exposed.end() ? it->second : floor;
    }
    return logits;
}

}  // namespace evolvr
