#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>

namespace evolvr {

struct GenerationRequest {
    std::string system_text;
    std::string user_text;
    double temperature = 0.0;
    int max_tokens = 1024;
    std::optional<std::uint64_t> seed;
};

enum class FinishReason { stop, length, error };

struct TokenUsage {
    long long prompt_tokens = 0;
    long long completion_tokens = 0;
};

struct GenerationResponse {
    std::string text;
    FinishReason finish_reason = FinishReason::stop;
    std::optional<TokenUsage> usage;
};

// Next-token logits for the five score tokens "1".."5"; index 0 holds the
// logit for score 1.  All values must be finite.
using ScoreLogits = std::array<double, 5>;

// e^{L(target)} / sum_j e^{L(j)}, computed with max-subtraction so large
// logits cannot overflow.  target is a score in 1..5.
double softmax_confidence(const ScoreLogits& logits, int target);

// The score whose logit is the unique maximum, or nullopt when the maximum is
// shared.  Ties are deliberately not broken: downstream filters treat an
// ambiguous peak as a rejection.
std::optional<int> strict_argmax(const ScoreLogits& logits);

struct RetryPolicy {
    int max_retries = 3;
    int base_delay_ms = 1000;
    double factor = 2.0;
};

// LLM access used by every pipeline stage.  Implementations must be safe for
// concurrent calls.
class Backend {
public:
    virtual ~Backend() = default;

    virtual GenerationResponse generate(const GenerationRequest& request) = 0;

    // Whether score_logits can be served at all.  Callers that need the logit
    // capability check this once up front instead of failing mid-run.
    virtual bool supports_logits() const = 0;

    virtual ScoreLogits score_logits(const std::string& context_text) = 0;
};

}  // namespace evolvr
