#include "evolvr/evolution.hpp"

#include <atomic>
#include <cstdio>
#include <sstream>

#include "evolvr/errors.hpp"
#include "evolvr/parallel.hpp"
#include "evolvr/parsing.hpp"

namespace evolvr {

const char* stage_name(StageKind kind) {
    switch (kind) {
        case StageKind::rulecheck: return "rulecheck";
        case StageKind::refine: return "refine";
        case StageKind::attack: return "attack";
        case StageKind::confidence: return "confidence";
    }
    return "unknown";
}

StageKind stage_kind_from_name(const std::string& name) {
    if (name == "rulecheck") return StageKind::rulecheck;
    if (name == "refine") return StageKind::refine;
    if (name == "attack") return StageKind::attack;
    if (name == "confidence") return StageKind::confidence;
    fail("config.invalid", "unknown stage '" + name + "'", ErrorKind::usage);
}

StageSpec StageSpec::defaults() {
    return {{StageKind::rulecheck, StageKind::refine, StageKind::rulecheck, StageKind::attack,
             StageKind::confidence}};
}

StageSpec StageSpec::from_names(const std::vector<std::string>& names) {
    StageSpec spec;
    for (const auto& name : names) spec.stages.push_back(stage_kind_from_name(name));
    spec.validate();
    return spec;
}

void StageSpec::validate() const {
    if (stages.empty()) {
        fail("config.invalid", "stage list must not be empty", ErrorKind::usage);
    }
    for (std::size_t i = 0; i < stages.size(); ++i) {
        if (stages[i] != StageKind::refine) continue;
        bool checked = false;
        for (std::size_t j = i + 1; j < stages.size() && !checked; ++j) {
            if (stages[j] == StageKind::rulecheck) checked = true;
            if (stages[j] == StageKind::attack || stages[j] == StageKind::confidence) break;
        }
        if (!checked) {
            fail("config.invalid",
                 "stage list places a refine with no rulecheck after it; rewrites would go unchecked",
                 ErrorKind::usage);
        }
    }
}

namespace {

double pct(long long part, long long whole) {
    if (whole <= 0) return 0.0;
    return round_half_up(100.0 * static_cast<double>(part) / static_cast<double>(whole), 2);
}

}  // namespace

ojson attrition_to_json(const AttritionReport& report) {
    ojson j;
    j["initial"] = report.initial;
    ojson rows = ojson::array();
    for (const auto& row : report.rows) {
        rows.push_back(ojson{{"stage", row.stage},
                             {"entered", row.entered},
                             {"survived", row.survived},
                             {"survival_rate_pct", row.survival_rate_pct},
                             {"cumulative_rate_pct", row.cumulative_rate_pct}});
    }
    j["rows"] = std::move(rows);
    return j;
}

std::string attrition_to_markdown(const AttritionReport& report) {
    std::ostringstream out;
    out << "| Stage | Agent | Remaining | Survival Rate |\n";
    out << "| --- | --- | --- | --- |\n";
    char rate[32];
    for (std::size_t i = 0; i < report.rows.size(); ++i) {
        const auto& row = report.rows[i];
        std::snprintf(rate, sizeof(rate), "%.2f%%", row.cumulative_rate_pct);
        out << "| " << i << " | " << row.stage << " | " << row.survived << " | " << rate << " |\n";
    }
    return out.str();
}

AttritionReport attrition_rates(const std::vector<std::pair<std::string, long long>>& remaining) {
    if (remaining.empty()) {
        fail("config.invalid", "attrition input needs at least the initial pool row",
             ErrorKind::usage);
    }
    AttritionReport report;
    report.initial = remaining.front().second;
    long long previous = report.initial;
    for (const auto& [stage, count] : remaining) {
        if (count < 0 || count > previous) {
            fail("pipeline.monotonicity",
                 "stage '" + stage + "' reports " + std::to_string(count) +
                     " remaining, more than the " + std::to_string(previous) + " entering it");
        }
        AttritionRow row;
        row.stage = stage;
        row.entered = previous;
        row.survived = count;
        row.survival_rate_pct = pct(count, previous);
        row.cumulative_rate_pct = pct(count, report.initial);
        report.rows.push_back(std::move(row));
        previous = count;
    }
    return report;
}

bool op_rulecheck(CandidateDerivation& candidate, int gt_a, int gt_b) {
    bool ok = false;
    if (auto parsed = try_parse_scores(candidate.rationale_text)) {
        candidate.declared_a = parsed->score_a;
        candidate.declared_b = parsed->score_b;
        ok = parsed->score_a == gt_a && parsed->score_b == gt_b;
    }
    candidate.history.push_back({"rulecheck", ok ? StageOutcome::passed : StageOutcome::failed});
    return ok;
}

GenerationRequest build_refine_prompt(const PromptTemplates& templates,
                                      const CandidateDerivation& candidate) {
    GenerationRequest request;
    request.system_text = templates.refine_system;
    request.user_text = substitute(templates.refine_user,
                                   {{"rationale_start", kRationaleStart},
                                    {"rationale", candidate.rationale_text},
                                    {"rationale_end", kRationaleEnd},
                                    {"score_line_instruction", kScoreLineInstruction}});
    request.temperature = 0.0;
    request.max_tokens = 1024;
    return request;
}

bool op_refine(CandidateDerivation& candidate, Backend& backend, const PromptTemplates& templates) {
    try {
        GenerationResponse response = backend.generate(build_refine_prompt(templates, candidate));
        if (response.finish_reason == FinishReason::error || response.text.empty()) {
            candidate.history.push_back({"refine", StageOutcome::failed});
            return false;
        }
        candidate.rationale_text = response.text;
        candidate.history.push_back({"refine", StageOutcome::rewritten});
        return true;
    } catch (const Error& e) {
        if (e.code().rfind("backend.", 0) != 0) throw;
        candidate.history.push_back({"refine", StageOutcome::failed});
        return false;
    }
}

std::pair<int, int> corrupt_scores(int gt_a, int gt_b) {
    if (gt_a != gt_b) return {gt_b, gt_a};
    if (gt_b + 2 <= 5) return {gt_a, gt_b + 2};
    return {gt_a, gt_b - 2};
}

std::string corrupted_derivation(const std::string& rationale_text, int gt_a, int gt_b) {
    const auto [corr_a, corr_b] = corrupt_scores(gt_a, gt_b);
    const std::string corrupted_line = score_line(corr_a, corr_b);
    if (auto parsed = try_parse_scores(rationale_text)) {
        return rationale_text.substr(0, parsed->span_begin) + corrupted_line +
               rationale_text.substr(parsed->span_end);
    }
    return rationale_text + "\n" + corrupted_line;
}

GenerationRequest build_attack_prompt(const PromptTemplates& templates,
                                      const std::string& corrupted_text) {
    GenerationRequest request;
    request.system_text = templates.attack_system;
    request.user_text = substitute(templates.attack_user,
                                   {{"rationale_start", kRationaleStart},
                                    {"corrupted", corrupted_text},
                                    {"rationale_end", kRationaleEnd},
                                    {"verdict_instruction", kVerdictInstruction}});
    request.temperature = 0.0;
    request.max_tokens = 256;
    return request;
}

bool op_attack(CandidateDerivation& candidate, int gt_a, int gt_b, Backend& backend,
               const PromptTemplates& templates) {
    bool ok = false;
    try {
        const std::string corrupted = corrupted_derivation(candidate.rationale_text, gt_a, gt_b);
        GenerationResponse response = backend.generate(build_attack_prompt(templates, corrupted));
        ok = parse_verdict(response.text) == Verdict::contradiction;
    } catch (const Error& e) {
        const bool conservative =
            e.code().rfind("backend.", 0) == 0 || e.code() == "parse.no_verdict";
        if (!conservative) throw;
        ok = false;
    }
    candidate.history.push_back({"attack", ok ? StageOutcome::passed : StageOutcome::failed});
    return ok;
}

std::string build_confidence_context(const PromptTemplates& templates, const StoryPair& pair,
                                     const std::string& rationale_text, PairSide side) {
    const std::string instruction_system = templates.eval_system;
    const std::string instruction_user =
        substitute(templates.eval_user, {{"aspect", pair.aspect},
                                         {"aspect_definition", aspect_definition(pair.aspect)},
                                         {"story_a", pair.a.body_text},
                                         {"story_b", pair.b.body_text},
                                         {"score_line_instruction", kScoreLineInstruction}});

    // The declared-score line is stripped so the rationale's reasoning, not
    // its stated conclusion, has to put the probability mass on the answer.
    std::string body = rationale_text;
    if (auto parsed = try_parse_scores(body)) {
        body = body.substr(0, parsed->span_begin) + body.substr(parsed->span_end);
        while (!body.empty() && (body.back() == '\n' || body.back() == ' ')) body.pop_back();
    }

    std::string context = instruction_system + "\n\n" + instruction_user + "\n\nRationale:\n" +
                          body + "\n\nFINAL SCORES: Story A = ";
    if (side == PairSide::b) {
        context += std::to_string(pair.gt_a) + ", Story B = ";
    }
    return context;
}

bool op_confidence(CandidateDerivation& candidate, int gt_a, int gt_b, Backend& backend,
                   const PromptTemplates& templates) {
    if (!backend.supports_logits()) {
        fail("backend.capability_unsupported",
             "the confidence stage needs a backend with logit support", ErrorKind::usage);
    }
    bool ok = false;
    try {
        const std::string context_a =
            build_confidence_context(templates, candidate.pair, candidate.rationale_text, PairSide::a);
        auto peak_a = strict_argmax(backend.score_logits(context_a));
        if (peak_a && *peak_a == gt_a) {
            const std::string context_b = build_confidence_context(
                templates, candidate.pair, candidate.rationale_text, PairSide::b);
            auto peak_b = strict_argmax(backend.score_logits(context_b));
            ok = peak_b && *peak_b == gt_b;
        }
    } catch (const Error& e) {
        if (e.code() == "backend.capability_unsupported" || e.code().rfind("backend.", 0) != 0) {
            throw;
        }
        ok = false;
    }
    candidate.history.push_back({"confidence", ok ? StageOutcome::passed : StageOutcome::failed});
    return ok;
}

PipelineResult run_pipeline(const std::vector<CandidateDerivation>& pool, const StageSpec& stages,
                            Backend& backend, const PromptTemplates& templates,
                            const PipelineOptions& options) {
    if (pool.empty()) {
        fail("pipeline.empty_pool", "the candidate pool is empty", ErrorKind::usage);
    }
    stages.validate();
    for (StageKind kind : stages.stages) {
        if (kind == StageKind::confidence && !backend.supports_logits()) {
            fail("backend.capability_unsupported",
                 "the stage list includes the confidence filter but the backend has no logit support",
                 ErrorKind::usage);
        }
    }

    const std::size_t n_stages = stages.stages.size();
    std::vector<std::atomic<long long>> entered(n_stages);
    std::vector<std::atomic<long long>> survived(n_stages);
    std::vector<std::optional<CandidateDerivation>> slots(pool.size());

    parallel_for(pool.size(), options.parallelism, [&](std::size_t index) {
        CandidateDerivation candidate = pool[index];
        const int gt_a = candidate.pair.gt_a;
        const int gt_b = candidate.pair.gt_b;
        bool alive = true;
        for (std::size_t s = 0; s < n_stages && alive; ++s) {
            entered[s].fetch_add(1, std::memory_order_relaxed);
            switch (stages.stages[s]) {
                case StageKind::rulecheck:
                    alive = op_rulecheck(candidate, gt_a, gt_b);
                    break;
                case StageKind::refine:
                    alive = op_refine(candidate, backend, templates);
                    break;
                case StageKind::attack:
                    alive = op_attack(candidate, gt_a, gt_b, backend, templates);
                    break;
                case StageKind::confidence:
                    alive = op_confidence(candidate, gt_a, gt_b, backend, templates);
                    break;
            }
            if (alive) survived[s].fetch_add(1, std::memory_order_relaxed);
        }
        if (alive) slots[index] = std::move(candidate);
    });

    PipelineResult result;
    result.report.initial = static_cast<long long>(pool.size());
    AttritionRow initial_row;
    initial_row.stage = "initial";
    initial_row.entered = result.report.initial;
    initial_row.survived = result.report.initial;
    initial_row.survival_rate_pct = 100.0;
    initial_row.cumulative_rate_pct = 100.0;
    result.report.rows.push_back(std::move(initial_row));
    for (std::size_t s = 0; s < n_stages; ++s) {
        AttritionRow row;
        row.stage = stage_name(stages.stages[s]);
        row.entered = entered[s].load();
        row.survived = survived[s].load();
        row.survival_rate_pct = pct(row.survived, row.entered);
        row.cumulative_rate_pct = pct(row.survived, result.report.initial);
        result.report.rows.push_back(std::move(row));
    }
    for (auto& slot : slots) {
        if (slot) result.survivors.push_back(std::move(*slot));
    }
    return result;
}

}  // namespace evolvr
