#pragma once

#include <cstddef>
#include <optional>
#include <string>

namespace evolvr {

// Result of scanning model output for the canonical score line
//   FINAL SCORES: Story A = <d>, Story B = <d>
// Matching is case-insensitive and whitespace-tolerant; when the text restates
// scores several times the LAST match is the conclusion and wins.
struct ParsedScores {
    int score_a = 0;
    int score_b = 0;
    std::size_t span_begin = 0;  // byte offsets of the winning match
    std::size_t span_end = 0;
};

// Throws parse.no_score_line when no line matches the grammar, and
// parse.out_of_range_score when the last match carries a digit outside 1..5.
// There is deliberately no fuzzy fallback: prose like "Story A deserves a
// four" does not parse.
ParsedScores parse_scores(const std::string& text);

// Non-throwing variant; nullopt on either failure mode.
std::optional<ParsedScores> try_parse_scores(const std::string& text);

// Grammar `FINAL SCORE: <d>`, last match wins, same error taxonomy.
int parse_single_score(const std::string& text);

enum class Verdict { contradiction, consistent };

// Grammar `VERDICT: CONTRADICTION` / `VERDICT: CONSISTENT`, case-insensitive,
// last match wins.  Throws parse.no_verdict when neither token appears.
Verdict parse_verdict(const std::string& text);

}  // namespace evolvr
