#include "evolvr/prompts.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "evolvr/errors.hpp"
#include "evolvr/jsonl.hpp"

namespace evolvr {

PromptTemplates PromptTemplates::defaults() {
    PromptTemplates t;

    t.synthesis_system =
        "You are {persona_name}. {persona_style} {persona_focus} "
        "You think aloud in your own voice and then commit to scores.";

    t.synthesis_user =
        "Two short stories follow. Judge them on one aspect: {aspect}.\n"
        "Definition of {aspect}: {aspect_definition}\n"
        "\n"
        "The correct scores for this pair are fixed: Story A = {gt_a}, Story B = {gt_b} "
        "(integer scale 1-5).\n"
        "Write the reasoning, in your own voice, that leads to exactly these scores. Ground every "
        "claim in concrete evidence from the stories, and do not mention that the scores were "
        "given to you.\n"
        "\n"
        "{few_shot}"
        "Story A:\n"
        "{story_a}\n"
        "\n"
        "Story B:\n"
        "{story_b}\n"
        "\n"
        "{score_line_instruction}";

    t.refine_system = "You are a careful editor of evaluation rationales.";

    t.refine_user =
        "Rewrite the rationale below so the logic flows cleanly and the prose reads well. Keep the "
        "original voice, the cited evidence, and the conclusion; do not change which story is "
        "preferred or the final scores.\n"
        "\n"
        "{rationale_start}\n"
        "{rationale}\n"
        "{rationale_end}\n"
        "\n"
        "Return only the rewritten rationale.\n"
        "{score_line_instruction}";

    t.attack_system = "You are a meticulous consistency judge for story evaluations.";

    t.attack_user =
        "Below is an evaluation rationale for two stories, ending in a line of final scores. "
        "Decide whether those final scores contradict the reasoning that precedes them.\n"
        "\n"
        "{rationale_start}\n"
        "{corrupted}\n"
        "{rationale_end}\n"
        "\n"
        "{verdict_instruction}";

    t.eval_system =
        "You are an expert story evaluator. Judge strictly and commit to integer scores.";

    t.eval_user =
        "Two short stories follow. Judge them on one aspect: {aspect}.\n"
        "Definition of {aspect}: {aspect_definition}\n"
        "\n"
        "Score each story on a 1-5 integer scale for {aspect} only. Reason step by step, compare "
        "the stories directly, then commit.\n"
        "\n"
        "Story A:\n"
        "{story_a}\n"
        "\n"
        "Story B:\n"
        "{story_b}\n"
        "\n"
        "{score_line_instruction}";

    t.few_shot = {
        {"coherence",
         "The lighthouse keeper counted ships until the day the sea went still. He waited, lamp "
         "lit, and the stillness answered with a single returning sail.",
         "The dragon ate breakfast. Meanwhile taxes are due in April. Purple is the best color, "
         "and then everyone clapped.",
         5, 1,
         "Story A holds one thread from first line to last: the keeper, the stillness, the sail "
         "that answers his waiting. Every sentence earns the next. Story B is a pile of unrelated "
         "statements; nothing follows from anything, so there is no throughline to evaluate, only "
         "fragments.\nFINAL SCORES: Story A = 5, Story B = 1"},
        {"engagement",
         "There was a cat. The cat sat. The cat continued to sit. Nothing else occurred.",
         "Mara found the door in the orchard on the day her brother stopped speaking, and the "
         "apples that fell near it rolled uphill.",
         2, 4,
         "Story A refuses every hook it could offer; repetition without tension leaves nothing to "
         "pull a reader forward. Story B plants two immediate questions, the door and the silent "
         "brother, and the uphill apples promise the rules here are worth learning.\nFINAL "
         "SCORES: Story A = 2, Story B = 4"},
    };

    return t;
}

std::string substitute(const std::string& text, const std::map<std::string, std::string>& values) {
    std::string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        if (text[i] != '{') {
            out.push_back(text[i++]);
            continue;
        }
        const std::size_t close = text.find('}', i + 1);
        if (close == std::string::npos) {
            out.append(text, i, std::string::npos);
            break;
        }
        const std::string key = text.substr(i + 1, close - i - 1);
        auto it = values.find(key);
        if (it == values.end()) {
            out.append(text, i, close - i + 1);
        } else {
            out.append(it->second);
        }
        i = close + 1;
    }
    return out;
}

std::string aspect_definition(const AspectId& aspect) {
    std::string key = aspect;
    std::transform(key.begin(), key.end(), key.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    static const std::map<std::string, std::string> known = {
        {"relevance", "how well the story matches its prompt and stays on task."},
        {"coherence", "how well the story makes sense as a whole, with each part following from "
                      "what came before."},
        {"empathy", "how well the reader comes to understand and share the characters' emotions."},
        {"surprise", "how effectively the story builds toward an ending the reader did not "
                     "expect but accepts."},
        {"engagement", "how strongly the story holds the reader's interest from start to finish."},
        {"complexity", "how elaborate and layered the story's characters, events, and details are."},
        {"ending", "how satisfying and fitting the story's ending is."},
        {"style", "how polished, controlled, and distinctive the prose is."},
        {"character development", "how believably the characters are drawn and how much they "
                                  "grow or reveal themselves."},
        {"character_development", "how believably the characters are drawn and how much they "
                                  "grow or reveal themselves."},
    };
    auto it = known.find(key);
    if (it != known.end()) return it->second;
    return "the overall quality of the stories with respect to " + aspect + ".";
}

std::string render_few_shot(const std::vector<FewShotExample>& examples) {
    if (examples.empty()) return "";
    std::ostringstream out;
    out << "Worked examples of the expected form:\n\n";
    for (const auto& example : examples) {
        out << "Aspect: " << example.aspect << "\n"
            << "Story A:\n" << example.story_a << "\n\n"
            << "Story B:\n" << example.story_b << "\n\n"
            << example.rationale << "\n\n";
    }
    out << "Now the pair to judge.\n\n";
    return out.str();
}

std::string score_line(int score_a, int score_b) {
    return "FINAL SCORES: Story A = " + std::to_string(score_a) +
           ", Story B = " + std::to_string(score_b);
}

namespace {

void maybe_load(const std::filesystem::path& dir, const char* name, std::string& slot) {
    const auto path = dir / (std::string(name) + ".txt");
    if (!std::filesystem::exists(path)) return;
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("io.failure", "cannot open template: " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    slot = buffer.str();
}

}  // namespace

PromptTemplates load_templates(const std::optional<std::filesystem::path>& templates_dir,
                               const std::optional<std::filesystem::path>& few_shot_path) {
    PromptTemplates t = PromptTemplates::defaults();
    if (templates_dir) {
        if (!std::filesystem::is_directory(*templates_dir)) {
            fail("io.not_found", "template directory not found: " + templates_dir->string(),
                 ErrorKind::usage);
        }
        maybe_load(*templates_dir, "synthesis_system", t.synthesis_system);
        maybe_load(*templates_dir, "synthesis_user", t.synthesis_user);
        maybe_load(*templates_dir, "refine_system", t.refine_system);
        maybe_load(*templates_dir, "refine_user", t.refine_user);
        maybe_load(*templates_dir, "attack_system", t.attack_system);
        maybe_load(*templates_dir, "attack_user", t.attack_user);
        maybe_load(*templates_dir, "eval_system", t.eval_system);
        maybe_load(*templates_dir, "eval_user", t.eval_user);
    }
    if (few_shot_path) {
        t.few_shot.clear();
        for (const auto& j : read_jsonl(*few_shot_path)) {
            FewShotExample example;
            example.aspect = j.value("aspect", std::string{});
            example.story_a = j.value("story_a", std::string{});
            example.story_b = j.value("story_b", std::string{});
            example.gt_a = j.value("gt_a", 0);
            example.gt_b = j.value("gt_b", 0);
            example.rationale = j.value("rationale", std::string{});
            if (example.rationale.empty() || !score_in_range(example.gt_a) ||
                !score_in_range(example.gt_b)) {
                fail("io.malformed_record",
                     few_shot_path->string() + ": few-shot exemplars need a rationale and scores in 1..5");
            }
            t.few_shot.push_back(std::move(example));
        }
    }
    return t;
}

}  // namespace evolvr
