#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace evolvr {

using AspectId = std::string;
using AspectSet = std::vector<AspectId>;  // declared order is preserved

// Whitespace-delimited token count; the unit for all length bookkeeping.
int token_length(std::string_view text);

// Half-up decimal rounding (0.005 -> 0.01), used wherever percentages or
// fractional scores are reduced to a fixed number of decimals.
double round_half_up(double value, int decimals);

struct Story {
    std::string id;
    std::string prompt_text;
    std::string body_text;
    int length_tokens = 0;
};

Story make_story(std::string id, std::string prompt_text, std::string body_text);

// Per-aspect integer scores on the 1..5 scale.
struct ScoreVector {
    std::map<AspectId, int> values;

    int at(const AspectId& aspect) const;
    bool same_aspects(const ScoreVector& other) const;
};

// Checks that every declared aspect is present exactly once with a value in
// 1..5.  `where` seasons the error message ("story s017", "candidate 3", ...).
void validate_score_vector(const ScoreVector& scores, const AspectSet& aspects,
                           const std::string& where);

inline bool score_in_range(int v) { return v >= 1 && v <= 5; }

enum class PairOrigin { sampled, swapped };

std::string to_string(PairOrigin origin);
PairOrigin pair_origin_from_string(const std::string& text);

// An ordered story pair with ground-truth scores for one aspect.  `swapped`
// marks the position-augmented copy of a sampled pair.
struct StoryPair {
    Story a;
    Story b;
    AspectId aspect;
    int gt_a = 0;
    int gt_b = 0;
    PairOrigin origin = PairOrigin::sampled;
};

// Canonical identity string for a pair (story ids, aspect, origin); used for
// per-candidate seed derivation and anywhere a stable pair label is needed.
std::string pair_key(const StoryPair& pair);

enum class StageOutcome { passed, failed, rewritten };

std::string to_string(StageOutcome outcome);
StageOutcome stage_outcome_from_string(const std::string& text);

struct StageEntry {
    std::string stage;
    StageOutcome outcome = StageOutcome::passed;
};

// One synthesized reasoning trace and everything needed to audit it.
struct CandidateDerivation {
    std::string id;
    StoryPair pair;
    std::string persona_id;
    std::string rationale_text;
    std::optional<int> declared_a;
    std::optional<int> declared_b;
    std::vector<StageEntry> history;  // append-only
};

struct StageTally {
    long long entered = 0;
    long long survived = 0;
};

// Recorded next to every run's outputs so a run can be reproduced and audited.
struct RunManifest {
    std::string run_id;
    std::uint64_t master_seed = 0;
    std::string config_digest;
    std::vector<std::pair<std::string, StageTally>> stage_counts;
    std::vector<std::string> warnings;
};

}  // namespace evolvr
