#include "evolvr/parsing.hpp"

#include <regex>

#include "evolvr/core.hpp"
#include "evolvr/errors.hpp"

namespace evolvr {

namespace {

struct RawMatch {
    int digit_a = 0;
    int digit_b = 0;
    std::size_t begin = 0;
    std::size_t end = 0;
};

// Finds the last match of `pattern` in `text`.  `digits` is the number of
// capture groups holding single digits.
std::optional<RawMatch> last_match(const std::string& text, const std::regex& pattern, int digits) {
    std::optional<RawMatch> found;
    for (auto it = std::sregex_iterator(text.begin(), text.end(), pattern);
         it != std::sregex_iterator(); ++it) {
        const std::smatch& m = *it;
        RawMatch raw;
        raw.digit_a = m[1].str()[0] - '0';
        if (digits > 1) raw.digit_b = m[2].str()[0] - '0';
        raw.begin = static_cast<std::size_t>(m.position(0));
        raw.end = raw.begin + static_cast<std::size_t>(m.length(0));
        found = raw;
    }
    return found;
}

}  // namespace

ParsedScores parse_scores(const std::string& text) {
    static const std::regex pattern(
        R"(FINAL\s+SCORES\s*:\s*STORY\s+A\s*=\s*(\d)\s*,\s*STORY\s+B\s*=\s*(\d))",
        std::regex::icase);
    auto raw = last_match(text, pattern, 2);
    if (!raw) fail("parse.no_score_line", "no line matches 'FINAL SCORES: Story A = <d>, Story B = <d>'");
    if (!score_in_range(raw->digit_a) || !score_in_range(raw->digit_b)) {
        fail("parse.out_of_range_score",
             "declared scores (" + std::to_string(raw->digit_a) + "," + std::to_string(raw->digit_b) +
                 ") are outside 1..5");
    }
    return {raw->digit_a, raw->digit_b, raw->begin, raw->end};
}

std::optional<ParsedScores> try_parse_scores(const std::string& text) {
    try {
        return parse_scores(text);
    } catch (const Error&) {
        return std::nullopt;
    }
}

int parse_single_score(const std::string& text) {
    static const std::regex pattern(R"(FINAL\s+SCORE\s*:\s*(\d))", std::regex::icase);
    auto raw = last_match(text, pattern, 1);
    if (!raw) fail("parse.no_score_line", "no line matches 'FINAL SCORE: <d>'");
    if (!score_in_range(raw->digit_a)) {
        fail("parse.out_of_range_score",
             "declared score " + std::to_string(raw->digit_a) + " is outside 1..5");
    }
    return raw->digit_a;
}

Verdict parse_verdict(const std::string& text) {
    static const std::regex pattern(R"(VERDICT\s*:\s*(CONTRADICTION|CONSISTENT))", std::regex::icase);
    std::optional<Verdict> found;
    for (auto it = std::sregex_iterator(text.begin(), text.end(), pattern);
         it != std::sregex_iterator(); ++it) {
        // The alternation admits exactly two tokens; they differ in length.
        found = (*it)[1].length() == 13 ? Verdict::contradiction : Verdict::consistent;
    }
    if (!found) fail("parse.no_verdict", "no line matches 'VERDICT: CONTRADICTION|CONSISTENT'");
    return *found;
}

}  // namespace evolvr
