#include <doctest.h>

#include <random>

#include "evolvr/parsing.hpp"
#include "util.hpp"

using namespace evolvr;
using testutil::error_code_of;

TEST_CASE("parse_scores reads the final score line") {
    const ParsedScores p =
        parse_scores("some reasoning here\nFINAL SCORES: Story A = 4, Story B = 2");
    CHECK(p.score_a == 4);
    CHECK(p.score_b == 2);
}

TEST_CASE("parse_scores takes the last of several matches") {
    const std::string text =
        "FINAL SCORES: Story A = 4, Story B = 2\n"
        "on reflection...\n"
        "FINAL SCORES: Story A = 3, Story B = 3\n";
    const ParsedScores p = parse_scores(text);
    CHECK(p.score_a == 3);
    CHECK(p.score_b == 3);
    CHECK(text.substr(p.span_begin, p.span_end - p.span_begin).find("Story B = 3") !=
          std::string::npos);
}

TEST_CASE("parse_scores tolerates case and spacing") {
    const ParsedScores p = parse_scores("final scores:   story a =5 ,  STORY B   = 1");
    CHECK(p.score_a == 5);
    CHECK(p.score_b == 1);
}

TEST_CASE("parse_scores error taxonomy") {
    CHECK(error_code_of([] { parse_scores("no verdict here at all"); }) == "parse.no_score_line");
    CHECK(error_code_of([] { parse_scores("FINAL SCORES: Story A = 7, Story B = 2"); }) ==
          "parse.out_of_range_score");
    CHECK(error_code_of([] { parse_scores("FINAL SCORES: Story A = 4, Story B = 0"); }) ==
          "parse.out_of_range_score");
    // The range check applies to the LAST match, the stated conclusion.
    CHECK(error_code_of([] {
              parse_scores("FINAL SCORES: Story A = 4, Story B = 2\n"
                           "FINAL SCORES: Story A = 9, Story B = 9");
          }) == "parse.out_of_range_score");
    CHECK_FALSE(try_parse_scores("nothing to see").has_value());
    CHECK(try_parse_scores("FINAL SCORES: Story A = 1, Story B = 5").has_value());
}

TEST_CASE("parse_single_score grammar") {
    CHECK(parse_single_score("FINAL SCORE: 5") == 5);
    CHECK(parse_single_score("FINAL SCORE: 2\nwait\nFINAL SCORE: 4") == 4);
    CHECK(error_code_of([] { parse_single_score("I'd give it a four."); }) ==
          "parse.no_score_line");
    CHECK(error_code_of([] { parse_single_score("FINAL SCORE: 9"); }) ==
          "parse.out_of_range_score");
}

TEST_CASE("parse_verdict recognizes both verdict tokens") {
    CHECK(parse_verdict("analysis...\nVERDICT: CONTRADICTION") ==
          Verdict::contradiction);
    CHECK(parse_verdict("verdict: consistent") == Verdict::consistent);
    CHECK(parse_verdict("VERDICT: CONSISTENT\nah no:\nVERDICT: CONTRADICTION") ==
          Verdict::contradiction);
    CHECK(error_code_of([] { parse_verdict("I think it conflicts."); }) == "parse.no_verdict");
}

TEST_CASE("appending non-matching text never changes the parse") {
    const std::string base = "FINAL SCORES: Story A = 2, Story B = 4";
    const ParsedScores before = parse_scores(base);
    const ParsedScores after = parse_scores(base + "\nPS: thanks for reading, no more scores.");
    CHECK(before.score_a == after.score_a);
    CHECK(before.score_b == after.score_b);
    CHECK(before.span_begin == after.span_begin);
}

TEST_CASE("parsing is total over fuzzed input: value or classified error") {
    std::mt19937 rng(23);
    const std::string alphabet = "AB =:,1579FINALSCORESstory\n ";
    for (int trial = 0; trial < 500; ++trial) {
        std::string text;
        const int len = static_cast<int>(rng() % 80);
        for (int i = 0; i < len; ++i) text += alphabet[rng() % alphabet.size()];
        try {
            const ParsedScores p = parse_scores(text);
            CHECK(score_in_range(p.score_a));
            CHECK(score_in_range(p.score_b));
        } catch (const Error& e) {
            const bool classified =
                e.code() == "parse.no_score_line" || e.code() == "parse.out_of_range_score";
            CHECK(classified);
        }
        // Determinism on identical input.
        CHECK(error_code_of([&] { parse_scores(text); }) ==
              error_code_of([&] { parse_scores(text); }));
    }
}
