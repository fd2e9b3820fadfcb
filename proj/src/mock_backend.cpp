#include "evolvr/mock_backend.hpp"

#include <cmath>

#include "evolvr/digest.hpp"
#include "evolvr/errors.hpp"
#include "evolvr/jsonl.hpp"

namespace evolvr {

namespace {

FinishReason finish_reason_from_string(const std::string& text) {
    if (text == "stop") return FinishReason::stop;
    if (text == "length") return FinishReason::length;
    if (text == "error") return FinishReason::error;
    fail("io.malformed_record", "unknown finish_reason '" + text + "' in fixture");
}

}  // namespace

MockBackend MockBackend::from_file(const std::filesystem::path& fixtures_path) {
    MockBackend mock;
    std::size_t line_no = 0;
    for (const auto& j : read_jsonl(fixtures_path)) {
        ++line_no;
        auto where = [&] { return fixtures_path.string() + " record " + std::to_string(line_no); };
        if (!j.is_object()) fail("io.malformed_record", where() + ": fixture must be an object");

        std::string key;
        if (j.contains("digest")) {
            key = j["digest"].get<std::string>();
        }

        if (j.contains("logits")) {
            if (key.empty()) {
                if (!j.contains("context")) {
                    fail("io.malformed_record", where() + ": logit fixture needs 'context' or 'digest'");
                }
                key = sha256_hex(j["context"].get<std::string>());
            }
            const auto& table = j["logits"];
            ScoreLogits logits{};
            for (int score = 1; score <= 5; ++score) {
                const std::string name = std::to_string(score);
                if (!table.contains(name) || !table[name].is_number()) {
                    fail("io.malformed_record",
                         where() + ": logit fixture must map \"1\"..\"5\" to numbers");
                }
                double v = table[name].get<double>();
                if (!std::isfinite(v)) {
                    fail("io.malformed_record", where() + ": logit for score " + name + " is not finite");
                }
                logits[static_cast<std::size_t>(score - 1)] = v;
            }
            mock.logits_[key] = logits;
            continue;
        }

        if (!j.contains("response") || !j["response"].is_string()) {
            fail("io.malformed_record", where() + ": generation fixture needs a string 'response'");
        }
        if (key.empty()) {
            if (!j.contains("system") || !j.contains("user")) {
                fail("io.malformed_record",
                     where() + ": generation fixture needs 'system'+'user' or 'digest'");
            }
            key = prompt_digest(j["system"].get<std::string>(), j["user"].get<std::string>());
        }
        GenerationResponse response;
        response.text = j["response"].get<std::string>();
        response.finish_reason =
            finish_reason_from_string(j.value("finish_reason", std::string("stop")));
        mock.responses_[key] = std::move(response);
    }
    return mock;
}

void MockBackend::add_response(const std::string& system_text, const std::string& user_text,
                               const std::string& response_text, FinishReason reason) {
    GenerationResponse response;
    response.text = response_text;
    response.finish_reason = reason;
    responses_[prompt_digest(system_text, user_text)] = std::move(response);
}

void MockBackend::add_logits(const std::string& context_text, const ScoreLogits& logits) {
    logits_[sha256_hex(context_text)] = logits;
}

GenerationResponse MockBackend::generate(const GenerationRequest& request) {
    const std::string key = prompt_digest(request.system_text, request.user_text);
    auto it = responses_.find(key);
    if (it == responses_.end()) {
        fail("backend.missing_fixture", "no generation fixture for prompt digest " + key);
    }
    return it->second;
}

ScoreLogits MockBackend::score_logits(const std::string& context_text) {
    const std::string key = sha256_hex(context_text);
    auto it = logits_.find(key);
    if (it == logits_.end()) {
        fail("backend.missing_fixture", "no logit fixture for context digest " + key);
    }
    return it->second;
}

}  // namespace evolvr
