#pragma once

#include <string>
#include <utility>
#include <vector>

#include "evolvr/backend.hpp"
#include "evolvr/core.hpp"
#include "evolvr/jsonl.hpp"
#include "evolvr/prompts.hpp"

namespace evolvr {

enum class StageKind { rulecheck, refine, attack, confidence };

const char* stage_name(StageKind kind);
StageKind stage_kind_from_name(const std::string& name);

// Ordered stage list.  The default mirrors the evolution pipeline's
// rule -> refine -> rule -> counter -> confidence ordering; a refine must
// always be followed by a later rulecheck so that rewrites cannot reach the
// adversarial stages unchecked.
struct StageSpec {
    std::vector<StageKind> stages;

    static StageSpec defaults();
    static StageSpec from_names(const std::vector<std::string>& names);
    void validate() const;
};

struct AttritionRow {
    std::string stage;
    long long entered = 0;
    long long survived = 0;
    double survival_rate_pct = 0.0;    // vs this stage's entrants
    double cumulative_rate_pct = 0.0;  // vs the initial pool
};

// Row 0 is always the initial pool at 100%.  Rates are rounded half-up to two
// decimals.
struct AttritionReport {
    long long initial = 0;
    std::vector<AttritionRow> rows;
};

ojson attrition_to_json(const AttritionReport& report);
std::string attrition_to_markdown(const AttritionReport& report);

// Builds a report from (stage label, remaining count) rows; the first row is
// the initial pool.  Counts must be monotone nonincreasing.
AttritionReport attrition_rates(const std::vector<std::pair<std::string, long long>>& remaining);

// --- The four operators -----------------------------------------------------
// Each appends its outcome to the candidate's history and returns whether the
// candidate survives the stage.

// Declared scores must parse and equal the ground truth exactly; parse
// failures reject rather than repair.
bool op_rulecheck(CandidateDerivation& candidate, int gt_a, int gt_b);

// Rewrites rationale_text via the refinement prompt.  Score preservation is
// not assumed here; the stage list guarantees a later rulecheck enforces it.
bool op_refine(CandidateDerivation& candidate, Backend& backend, const PromptTemplates& templates);

// Preference inversion for unequal scores; a tie is broken into a false
// preference two steps away (clamped into range from above).
std::pair<int, int> corrupt_scores(int gt_a, int gt_b);

// Swaps the candidate's final score line for the corrupted one and asks a
// judge whether the scores now contradict the reasoning.  Survives only on an
// explicit contradiction verdict; silence or backend trouble rejects.
bool op_attack(CandidateDerivation& candidate, int gt_a, int gt_b, Backend& backend,
               const PromptTemplates& templates);

// Elicits next-token score logits for each story in turn; survives only when
// the ground-truth score token is the strict argmax for both stories.
bool op_confidence(CandidateDerivation& candidate, int gt_a, int gt_b, Backend& backend,
                   const PromptTemplates& templates);

// --- Prompt/context builders (exposed for fixture construction) -------------

GenerationRequest build_refine_prompt(const PromptTemplates& templates,
                                      const CandidateDerivation& candidate);

// The candidate's rationale with its final score line replaced by the
// corrupted line (appended if the text somehow lacks one).
std::string corrupted_derivation(const std::string& rationale_text, int gt_a, int gt_b);

GenerationRequest build_attack_prompt(const PromptTemplates& templates,
                                      const std::string& corrupted_text);

enum class PairSide { a, b };

// Score-elicitation context: the evaluation instruction (no gold scores), the
// rationale with its final score line stripped, and a partial score line
// ending right where the target story's score token must appear.  Side b's
// cue reveals side a's ground truth, never its own.
std::string build_confidence_context(const PromptTemplates& templates, const StoryPair& pair,
                                     const std::string& rationale_text, PairSide side);

// --- Driver ------------------------------------------------------------------

struct PipelineOptions {
    int parallelism = 1;
};

struct PipelineResult {
    std::vector<CandidateDerivation> survivors;
    AttritionReport report;
};

// One pass of the stage list over every candidate, with early exit on the
// first failed stage.  Candidates are independent, so execution may fan out;
// counts are accumulated commutatively and survivors keep input order, making
// the result identical across any parallelism.
PipelineResult run_pipeline(const std::vector<CandidateDerivation>& pool, const StageSpec& stages,
                            Backend& backend, const PromptTemplates& templates,
                            const PipelineOptions& options = {});

}  // namespace evolvr
