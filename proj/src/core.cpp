#include "evolvr/core.hpp"

#include <cctype>
#include <cmath>

#include "evolvr/errors.hpp"

namespace evolvr {

int token_length(std::string_view text) {
    int count = 0;
    bool in_token = false;
    for (unsigned char c : text) {
        const bool ws = std::isspace(c) != 0;
        if (!ws && !in_token) ++count;
        in_token = !ws;
    }
    return count;
}

double round_half_up(double value, int decimals) {
    double scale = std::pow(10.0, decimals);
    return std::floor(value * scale + 0.5) / scale;
}

Story make_story(std::string id, std::string prompt_text, std::string body_text) {
    Story s;
    s.id = std::move(id);
    s.prompt_text = std::move(prompt_text);
    s.body_text = std::move(body_text);
    s.length_tokens = token_length(s.body_text);
    return s;
}

int ScoreVector::at(const AspectId& aspect) const {
    auto it = values.find(aspect);
    if (it == values.end()) {
        fail("score.missing_aspect", "no score for aspect '" + aspect + "'");
    }
    return it->second;
}

bool ScoreVector::same_aspects(const ScoreVector& other) const {
    if (values.size() != other.values.size()) return false;
    for (const auto& [aspect, _] : values) {
        if (other.values.find(aspect) == other.values.end()) return false;
    }
    return true;
}

void validate_score_vector(const ScoreVector& scores, const AspectSet& aspects,
                           const std::string& where) {
    for (const auto& aspect : aspects) {
        auto it = scores.values.find(aspect);
        if (it == scores.values.end()) {
            fail("score.missing_aspect", where + ": missing score for aspect '" + aspect + "'");
        }
        if (!score_in_range(it->second)) {
            fail("score.out_of_range",
                 where + ": score " + std::to_string(it->second) + " for aspect '" + aspect +
                     "' is outside 1..5");
        }
    }
    if (scores.values.size() != aspects.size()) {
        fail("score.unknown_aspect", where + ": scores carry aspects outside the declared set");
    }
}

std::string to_string(PairOrigin origin) {
    return origin == PairOrigin::sampled ? "sampled" : "swapped";
}

PairOrigin pair_origin_from_string(const std::string& text) {
    if (text == "sampled") return PairOrigin::sampled;
    if (text == "swapped") return PairOrigin::swapped;
    fail("io.malformed_record", "unknown pair origin '" + text + "'");
}

std::string pair_key(const StoryPair& pair) {
    return pair.a.id + "\x1f" + pair.b.id + "\x1f" + pair.aspect + "\x1f" + to_string(pair.origin);
}

std::string to_string(StageOutcome outcome) {
    switch (outcome) {
        case StageOutcome::passed: return "passed";
        case StageOutcome::failed: return "failed";
        case StageOutcome::rewritten: return "rewritten";
    }
    return "failed";
}

StageOutcome stage_outcome_from_string(const std::string& text) {
    if (text == "passed") return StageOutcome::passed;
    if (text == "failed") return StageOutcome::failed;
    if (text == "rewritten") return StageOutcome::rewritten;
    fail("io.malformed_record", "unknown stage outcome '" + text + "'");
}

}  // namespace evolvr
