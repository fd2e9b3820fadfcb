#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "evolvr/core.hpp"

namespace evolvr {

// Markers that bracket an embedded rationale inside refine/attack prompts.
// Scripted backends key on them to recover the payload.
inline constexpr const char* kRationaleStart = "--- RATIONALE START ---";
inline constexpr const char* kRationaleEnd = "--- RATIONALE END ---";

// The closing-grammar instructions quoted verbatim in every prompt that must
// end in a parseable line.  The parsing module's grammars are normative; these
// strings are the other half of that contract.
inline constexpr const char* kScoreLineInstruction =
    "End your answer with exactly one line in this form:\n"
    "FINAL SCORES: Story A = <1-5>, Story B = <1-5>";
inline constexpr const char* kVerdictInstruction =
    "End your answer with exactly one line: VERDICT: CONTRADICTION if the final scores contradict "
    "the reasoning above them, or VERDICT: CONSISTENT if they follow from it.";

struct FewShotExample {
    AspectId aspect;
    std::string story_a;
    std::string story_b;
    int gt_a = 0;
    int gt_b = 0;
    std::string rationale;
};

// All prompt text templates in one place.  Placeholders use {name} syntax;
// substitution is single-pass, so braces inside story texts are inert.
struct PromptTemplates {
    std::string synthesis_system;
    std::string synthesis_user;
    std::string refine_system;
    std::string refine_user;
    std::string attack_system;
    std::string attack_user;
    std::string eval_system;
    std::string eval_user;
    std::vector<FewShotExample> few_shot;

    static PromptTemplates defaults();
};

// Overrides defaults with any of synthesis_system.txt, synthesis_user.txt,
// refine_system.txt, refine_user.txt, attack_system.txt, attack_user.txt,
// eval_system.txt, eval_user.txt found in `templates_dir`, and with few-shot
// exemplars from `few_shot_path` (JSONL: aspect, story_a, story_b, gt_a, gt_b,
// rationale).
PromptTemplates load_templates(const std::optional<std::filesystem::path>& templates_dir,
                               const std::optional<std::filesystem::path>& few_shot_path);

// Replaces each {key} present in `values`; unknown {tokens} are left alone and
// substituted text is never rescanned.
std::string substitute(const std::string& text, const std::map<std::string, std::string>& values);

// One-sentence definition of an evaluation aspect; built-in for the common
// benchmark dimensions, generic wording otherwise.
std::string aspect_definition(const AspectId& aspect);

std::string render_few_shot(const std::vector<FewShotExample>& examples);

std::string score_line(int score_a, int score_b);

}  // namespace evolvr
