#pragma once

#include <filesystem>
#include <unordered_map>

#include "evolvr/backend.hpp"

namespace evolvr {

// Scripted backend for tests and offline runs.  Responses are keyed by a
// digest of the exact prompt texts; an unknown prompt is an error, never a
// silent default.  The fixture table is read-only after construction, so
// generate() and score_logits() are lock-free and deterministic regardless of
// call order or concurrency.
//
// Fixture file: JSONL, one object per line, two record shapes.
//   generation: {"system": str, "user": str, "response": str,
//                "finish_reason": "stop"|"length"|"error" (optional, default "stop")}
//   logits:     {"context": str, "logits": {"1": num, "2": num, "3": num, "4": num, "5": num}}
// Either shape may replace its text fields with a precomputed {"digest": hex}
// (generation digests cover system + user; logit digests cover the context
// text alone).
class MockBackend final : public Backend {
public:
    MockBackend() = default;

    static MockBackend from_file(const std::filesystem::path& fixtures_path);

    void add_response(const std::string& system_text, const std::string& user_text,
                      const std::string& response_text, FinishReason reason = FinishReason::stop);
    void add_logits(const std::string& context_text, const ScoreLogits& logits);

    GenerationResponse generate(const GenerationRequest& request) override;
    bool supports_logits() const override { return !logits_.empty(); }
    ScoreLogits score_logits(const std::string& context_text) override;

    std::size_t response_count() const { return responses_.size(); }
    std::size_t logits_count() const { return logits_.size(); }

private:
    std::unordered_map<std::string, GenerationResponse> responses_;
    std::unordered_map<std::string, ScoreLogits> logits_;
};

}  // namespace evolvr
