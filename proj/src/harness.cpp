#include "evolvr/harness.hpp"

#include "evolvr/errors.hpp"
#include "evolvr/parsing.hpp"

namespace evolvr {

std::string to_string(OrderFlag flag) { return flag == OrderFlag::ab ? "ab" : "ba"; }

ojson judgment_to_json(const Judgment& judgment) {
    ojson j;
    j["rationale"] = judgment.rationale_text;
    j["score_a"] = judgment.score_a;
    j["score_b"] = judgment.score_b;
    j["aspect"] = judgment.aspect;
    j["order"] = to_string(judgment.order_flag);
    return j;
}

GenerationRequest build_eval_prompt(const PromptTemplates& templates, const Story& story_a,
                                    const Story& story_b, const AspectId& aspect) {
    GenerationRequest request;
    request.system_text = templates.eval_system;
    request.user_text = substitute(templates.eval_user,
                                   {{"aspect", aspect},
                                    {"aspect_definition", aspect_definition(aspect)},
                                    {"story_a", story_a.body_text},
                                    {"story_b", story_b.body_text},
                                    {"score_line_instruction", kScoreLineInstruction}});
    request.temperature = 0.0;
    request.max_tokens = 1024;
    return request;
}

Judgment judge_pair(const Story& story_a, const Story& story_b, const AspectId& aspect,
                    Backend& backend, const PromptTemplates& templates) {
    const GenerationRequest request = build_eval_prompt(templates, story_a, story_b, aspect);

    GenerationResponse response;
    try {
        response = backend.generate(request);
    } catch (const Error& e) {
        if (e.code() != "backend.transport") throw;
        response = backend.generate(request);  // one retry on transport trouble
    }

    Judgment judgment;
    judgment.rationale_text = response.text;
    judgment.aspect = aspect;
    judgment.order_flag = OrderFlag::ab;
    try {
        const ParsedScores parsed = parse_scores(response.text);
        judgment.score_a = parsed.score_a;
        judgment.score_b = parsed.score_b;
    } catch (const Error& e) {
        constexpr std::size_t kExcerpt = 160;
        std::string excerpt = response.text.substr(0, kExcerpt);
        if (response.text.size() > kExcerpt) excerpt += "...";
        fail("judge.failure", std::string("evaluator reply did not parse (") + e.code() +
                                  "); raw text: " + excerpt);
    }
    return judgment;
}

std::pair<Judgment, Judgment> judge_pair_debiased(const Story& story_a, const Story& story_b,
                                                  const AspectId& aspect, Backend& backend,
                                                  const PromptTemplates& templates) {
    Judgment ab;
    try {
        ab = judge_pair(story_a, story_b, aspect, backend, templates);
    } catch (const Error& e) {
        throw Error(e.code(), std::string("ab leg: ") + e.what(), e.kind());
    }

    Judgment ba;
    try {
        ba = judge_pair(story_b, story_a, aspect, backend, templates);
    } catch (const Error& e) {
        throw Error(e.code(), std::string("ba leg: ") + e.what(), e.kind());
    }
    // Re-map the swapped leg back to (a, b) identity.
    std::swap(ba.score_a, ba.score_b);
    ba.order_flag = OrderFlag::ba;
    return {std::move(ab), std::move(ba)};
}

std::vector<int> score_story_ensemble(const Story& target, const std::vector<Story>& partner_pool,
                                      const AspectId& aspect, int n_pairs, std::uint64_t seed,
                                      Backend& backend, const PromptTemplates& templates) {
    const auto partners = sample_partners(partner_pool, target.id, n_pairs, seed);
    std::vector<int> scores;
    scores.reserve(2 * partners.size());
    for (const auto& partner : partners) {
        const auto [ab, ba] = judge_pair_debiased(target, partner, aspect, backend, templates);
        scores.push_back(ab.score_a);
        scores.push_back(ba.score_a);
    }
    return scores;
}

PairJudge make_backend_judge(Backend& backend, const PromptTemplates& templates) {
    return [&backend, templates](const Story& story_a, const Story& story_b,
                                 const AspectId& aspect) {
        const Judgment judgment = judge_pair(story_a, story_b, aspect, backend, templates);
        return std::make_pair(judgment.score_a, judgment.score_b);
    };
}

}  // namespace evolvr
