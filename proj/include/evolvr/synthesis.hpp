#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "evolvr/backend.hpp"
#include "evolvr/core.hpp"
#include "evolvr/jsonl.hpp"
#include "evolvr/prompts.hpp"

namespace evolvr {

struct Persona {
    std::string id;
    std::string display_name;
    std::string style_directive;
    std::string focus_directive;
};

// The built-in registry of five evaluator voices.
std::vector<Persona> default_personas();

// JSON array of {id, display_name, style, focus}; ids must be unique.
std::vector<Persona> load_personas(const std::filesystem::path& path);

// The 15 unordered ground-truth score combinations {(i,j): 1 <= i <= j <= 5},
// in canonical order.  Order within a pair is supplied later by swap_augment,
// so ordered cells would double-count.
std::vector<std::pair<int, int>> score_cells();

struct SamplingPlan {
    int per_cell = 1;
    AspectId aspect;
    std::uint64_t seed = 0;
};

struct SampledPairs {
    std::vector<StoryPair> pairs;
    std::vector<std::string> warnings;  // cells that could not fill their quota
};

// Draws up to per_cell distinct pairs per score cell, without replacement,
// from a deterministic per-cell RNG stream.  Cells with too few distinct pairs
// contribute everything they have plus a warning.
SampledPairs stratified_sample_pairs(const std::vector<ScoredStory>& scored,
                                     const SamplingPlan& plan);

// Appends, for each input pair, its mirror with stories and gt scores
// exchanged and origin = swapped.  Output size is exactly 2x input size.
std::vector<StoryPair> swap_augment(const std::vector<StoryPair>& pairs);

// Score-aligned synthesis prompt: the persona speaks in the system text, the
// user text carries the aspect definition, both stories, the fixed gold
// scores, the few-shot block, and the closing-grammar instruction.
GenerationRequest build_synthesis_prompt(const PromptTemplates& templates, const StoryPair& pair,
                                         const Persona& persona);

struct SynthesisOptions {
    double temperature = 0.7;
    int max_tokens = 1024;
    std::uint64_t master_seed = 0;
    int parallelism = 1;
};

// One candidate per (pair x persona), in that deterministic order regardless
// of completion order.  Per-item backend failures become candidates with an
// empty rationale and a failed stage entry; they are never dropped silently.
std::vector<CandidateDerivation> synthesize_pool(const std::vector<StoryPair>& pairs,
                                                 const std::vector<Persona>& personas,
                                                 Backend& backend,
                                                 const PromptTemplates& templates,
                                                 const SynthesisOptions& options);

}  // namespace evolvr
