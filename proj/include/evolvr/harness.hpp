#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "evolvr/backend.hpp"
#include "evolvr/core.hpp"
#include "evolvr/metrics.hpp"
#include "evolvr/prompts.hpp"

namespace evolvr {

enum class OrderFlag { ab, ba };

std::string to_string(OrderFlag flag);

// One pairwise evaluation: the rationale plus a score per story, with scores
// always expressed in the caller's (a, b) identity and order_flag recording
// which presentation order actually produced them.
struct Judgment {
    std::string rationale_text;
    int score_a = 0;
    int score_b = 0;
    AspectId aspect;
    OrderFlag order_flag = OrderFlag::ab;
};

ojson judgment_to_json(const Judgment& judgment);

GenerationRequest build_eval_prompt(const PromptTemplates& templates, const Story& story_a,
                                    const Story& story_b, const AspectId& aspect);

// Temperature-0 evaluation of one ordered pair.  An unparseable reply becomes
// a judge.failure error carrying the raw text; a transport error is retried
// once before giving up.
Judgment judge_pair(const Story& story_a, const Story& story_b, const AspectId& aspect,
                    Backend& backend, const PromptTemplates& templates);

// Judges both presentation orders and re-maps the swapped leg's scores back to
// (a, b) identity.  Disagreement between the legs is returned as-is, never
// averaged away here.
std::pair<Judgment, Judgment> judge_pair_debiased(const Story& story_a, const Story& story_b,
                                                  const AspectId& aspect, Backend& backend,
                                                  const PromptTemplates& templates);

// 2N target-side scores: N seeded distinct partners (drawn exactly like the
// metrics ensemble protocol), each judged in both orders.  Order of the result
// is [partner0 ab, partner0 ba, partner1 ab, ...].
std::vector<int> score_story_ensemble(const Story& target, const std::vector<Story>& partner_pool,
                                      const AspectId& aspect, int n_pairs, std::uint64_t seed,
                                      Backend& backend, const PromptTemplates& templates);

// Adapts judge_pair to the metrics module's PairJudge signature.
PairJudge make_backend_judge(Backend& backend, const PromptTemplates& templates);

}  // namespace evolvr
