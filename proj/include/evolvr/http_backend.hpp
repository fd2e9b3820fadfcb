#pragma once

#include <semaphore>
#include <string>

#include "evolvr/backend.hpp"

namespace evolvr {

struct HttpBackendConfig {
    // "http://host:port" or "http://host:port/v1"; EVOLVR_API_BASE overrides.
    std::string base_url = "http://127.0.0.1:8000";
    std::string api_key;  // sent as a bearer token when nonempty
    std::string model = "evolvr-default";
    RetryPolicy retry;
    int max_in_flight = 8;
    int top_logprobs = 20;
    // Set false for servers known to lack logprob support; score_logits then
    // reports the missing capability up front instead of per call.
    bool expect_logprobs = true;
    int timeout_s = 120;
};

// Applies EVOLVR_API_BASE, EVOLVR_API_KEY, and EVOLVR_MODEL on top of `base`.
HttpBackendConfig http_config_from_env(HttpBackendConfig base = {});

// Adapter for OpenAI-compatible chat/completions servers.  Each call is
// independent and uses its own connection; a counting semaphore bounds
// in-flight requests; 429 and 5xx responses are retried with exponential
// backoff (other 4xx are not).
class HttpBackend final : public Backend {
public:
    explicit HttpBackend(HttpBackendConfig config);

    GenerationResponse generate(const GenerationRequest& request) override;
    bool supports_logits() const override { return config_.expect_logprobs; }
    ScoreLogits score_logits(const std::string& context_text) override;

private:
    std::string post_chat(const std::string& payload);

    HttpBackendConfig config_;
    std::string client_base_;    // scheme://host:port
    std::string endpoint_path_;  // path of the chat/completions route
    std::counting_semaphore<> in_flight_;
};

}  // namespace evolvr
