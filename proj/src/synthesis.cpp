#include "evolvr/synthesis.hpp"

#include <array>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "evolvr/digest.hpp"
#include "evolvr/errors.hpp"
#include "evolvr/parallel.hpp"
#include "evolvr/parsing.hpp"
#include "evolvr/rng.hpp"

namespace evolvr {

std::vector<Persona> default_personas() {
    return {
        {"academic", "the Academic",
         "You write like a literature scholar: measured, precise, fond of structural analysis.",
         "You care most about craft: construction, technique, and whether the text rewards close "
         "reading."},
        {"artist", "the Artist",
         "You write like a practicing writer: impressionistic, attentive to image and rhythm.",
         "You care most about voice and feeling, whether the prose is alive."},
        {"pragmatist", "the Pragmatist",
         "You write plainly and directly, with no jargon and no hedging.",
         "You care most about whether the story works: does it deliver what it sets out to do."},
        {"sharp_tongue", "the Sharp-Tongued Reader",
         "You are blunt, witty, and impatient with mediocrity; you say exactly what is weak.",
         "You care most about flaws: cliches, lazy logic, unearned emotion."},
        {"netizen", "the Casual Netizen",
         "You write like an enthusiastic forum commenter: informal, first-person, reaction-driven.",
         "You care most about the immediate reading experience, whether you would keep scrolling."},
    };
}

std::vector<Persona> load_personas(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) {
        fail("io.not_found", "persona file not found: " + path.string(), ErrorKind::usage);
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("io.failure", "cannot open persona file: " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    ojson j;
    try {
        j = ojson::parse(buffer.str());
    } catch (const nlohmann::json::parse_error& e) {
        fail("io.malformed_record", path.string() + ": " + e.what());
    }
    if (!j.is_array() || j.empty()) {
        fail("io.malformed_record", path.string() + ": persona file must be a nonempty JSON array");
    }
    std::vector<Persona> personas;
    std::set<std::string> ids;
    for (const auto& entry : j) {
        Persona p;
        p.id = entry.value("id", std::string{});
        p.display_name = entry.value("display_name", p.id);
        p.style_directive = entry.value("style", std::string{});
        p.focus_directive = entry.value("focus", std::string{});
        if (p.id.empty()) fail("io.malformed_record", path.string() + ": persona without an id");
        if (!ids.insert(p.id).second) {
            fail("io.duplicate_id", path.string() + ": duplicate persona id '" + p.id + "'");
        }
        personas.push_back(std::move(p));
    }
    return personas;
}

std::vector<std::pair<int, int>> score_cells() {
    std::vector<std::pair<int, int>> cells;
    for (int i = 1; i <= 5; ++i) {
        for (int j = i; j <= 5; ++j) cells.emplace_back(i, j);
    }
    return cells;
}

namespace {

StoryPair make_pair(const ScoredStory& a, const ScoredStory& b, const AspectId& aspect) {
    StoryPair pair;
    pair.a = a.story;
    pair.b = b.story;
    pair.aspect = aspect;
    pair.gt_a = a.scores.at(aspect);
    pair.gt_b = b.scores.at(aspect);
    pair.origin = PairOrigin::sampled;
    return pair;
}

}  // namespace

SampledPairs stratified_sample_pairs(const std::vector<ScoredStory>& scored,
                                     const SamplingPlan& plan) {
    if (scored.empty()) {
        fail("sampling.empty_cell_set", "cannot sample pairs from an empty dataset",
             ErrorKind::usage);
    }
    if (plan.per_cell < 1) {
        fail("config.invalid", "per_cell must be >= 1", ErrorKind::usage);
    }

    // Buckets keep dataset file order, which the draw order below inherits.
    std::array<std::vector<const ScoredStory*>, 6> buckets{};
    for (const auto& record : scored) {
        buckets[static_cast<std::size_t>(record.scores.at(plan.aspect))].push_back(&record);
    }

    SampledPairs result;
    const auto cells = score_cells();
    const std::size_t quota = static_cast<std::size_t>(plan.per_cell);

    for (std::size_t cell_index = 0; cell_index < cells.size(); ++cell_index) {
        const auto [lo, hi] = cells[cell_index];
        const auto& lo_bucket = buckets[static_cast<std::size_t>(lo)];
        const auto& hi_bucket = buckets[static_cast<std::size_t>(hi)];
        const bool same = lo == hi;

        const std::size_t n_lo = lo_bucket.size();
        const std::size_t n_hi = hi_bucket.size();
        const std::size_t feasible = same ? (n_lo < 2 ? 0 : n_lo * (n_lo - 1) / 2) : n_lo * n_hi;

        const std::string cell_label =
            "(" + std::to_string(lo) + "," + std::to_string(hi) + ")";
        if (feasible < quota) {
            result.warnings.push_back("aspect '" + plan.aspect + "' cell " + cell_label + ": only " +
                                      std::to_string(feasible) + " distinct pairs available, " +
                                      std::to_string(quota) + " requested");
        }
        if (feasible == 0) continue;

        Rng rng(mix_seed(plan.seed, "cell", std::to_string(cell_index)));
        const std::size_t want = std::min(quota, feasible);

        // Small spaces are enumerated and drawn by index; large ones are
        // rejection-sampled.  Both paths draw without replacement from the
        // same per-cell stream.
        if (feasible <= std::max<std::size_t>(1024, 4 * quota)) {
            for (std::size_t flat : rng.pick_distinct(feasible, want)) {
                if (same) {
                    // flat indexes the x < y combinations in lexicographic order
                    std::size_t x = 0;
                    std::size_t remaining = flat;
                    std::size_t row = n_lo - 1;
                    while (remaining >= row) {
                        remaining -= row;
                        ++x;
                        --row;
                    }
                    const std::size_t y = x + 1 + remaining;
                    result.pairs.push_back(make_pair(*lo_bucket[x], *lo_bucket[y], plan.aspect));
                } else {
                    result.pairs.push_back(make_pair(*lo_bucket[flat / n_hi],
                                                     *hi_bucket[flat % n_hi], plan.aspect));
                }
            }
        } else {
            std::set<std::pair<std::size_t, std::size_t>> seen;
            while (seen.size() < want) {
                std::size_t x = static_cast<std::size_t>(rng.bounded(n_lo));
                std::size_t y = static_cast<std::size_t>(rng.bounded(n_hi));
                if (same) {
                    if (x == y) continue;
                    if (x > y) std::swap(x, y);
                }
                if (!seen.insert({x, y}).second) continue;
                result.pairs.push_back(same
                                           ? make_pair(*lo_bucket[x], *lo_bucket[y], plan.aspect)
                                           : make_pair(*lo_bucket[x], *hi_bucket[y], plan.aspect));
            }
        }
    }

    if (result.pairs.empty()) {
        fail("sampling.empty_cell_set",
             "no score cell for aspect '" + plan.aspect + "' can produce a pair", ErrorKind::usage);
    }
    return result;
}

std::vector<StoryPair> swap_augment(const std::vector<StoryPair>& pairs) {
    std::vector<StoryPair> out;
    out.reserve(pairs.size() * 2);
    out = pairs;
    for (const auto& pair : pairs) {
        StoryPair mirrored;
        mirrored.a = pair.b;
        mirrored.b = pair.a;
        mirrored.aspect = pair.aspect;
        mirrored.gt_a = pair.gt_b;
        mirrored.gt_b = pair.gt_a;
        mirrored.origin = PairOrigin::swapped;
        out.push_back(std::move(mirrored));
    }
    return out;
}

GenerationRequest build_synthesis_prompt(const PromptTemplates& templates, const StoryPair& pair,
                                         const Persona& persona) {
    // Exemplars for the pair's aspect when available, the full set otherwise.
    std::vector<FewShotExample> examples;
    for (const auto& example : templates.few_shot) {
        if (example.aspect == pair.aspect) examples.push_back(example);
    }
    if (examples.empty()) examples = templates.few_shot;

    GenerationRequest request;
    request.system_text = substitute(templates.synthesis_system,
                                     {{"persona_name", persona.display_name},
                                      {"persona_style", persona.style_directive},
                                      {"persona_focus", persona.focus_directive}});
    request.user_text = substitute(templates.synthesis_user,
                                   {{"aspect", pair.aspect},
                                    {"aspect_definition", aspect_definition(pair.aspect)},
                                    {"gt_a", std::to_string(pair.gt_a)},
                                    {"gt_b", std::to_string(pair.gt_b)},
                                    {"few_shot", render_few_shot(examples)},
                                    {"story_a", pair.a.body_text},
                                    {"story_b", pair.b.body_text},
                                    {"score_line_instruction", kScoreLineInstruction}});
    request.temperature = 0.7;
    request.max_tokens = 1024;
    return request;
}

std::vector<CandidateDerivation> synthesize_pool(const std::vector<StoryPair>& pairs,
                                                 const std::vector<Persona>& personas,
                                                 Backend& backend,
                                                 const PromptTemplates& templates,
                                                 const SynthesisOptions& options) {
    if (personas.empty()) fail("config.invalid", "persona registry is empty", ErrorKind::usage);
    std::set<std::string> ids;
    for (const auto& persona : personas) {
        if (!ids.insert(persona.id).second) {
            fail("config.invalid", "duplicate persona id '" + persona.id + "'", ErrorKind::usage);
        }
    }

    const std::size_t per_pair = personas.size();
    std::vector<CandidateDerivation> pool(pairs.size() * per_pair);

    parallel_for(pool.size(), options.parallelism, [&](std::size_t task) {
        const std::size_t pair_index = task / per_pair;
        const Persona& persona = personas[task % per_pair];
        const StoryPair& pair = pairs[pair_index];

        CandidateDerivation candidate;
        char id_buf[16];
        std::snprintf(id_buf, sizeof(id_buf), "c%06zu_", pair_index);
        candidate.id = std::string(id_buf) + persona.id;
        candidate.pair = pair;
        candidate.persona_id = persona.id;

        GenerationRequest request = build_synthesis_prompt(templates, pair, persona);
        request.temperature = options.temperature;
        request.max_tokens = options.max_tokens;
        request.seed = mix_seed(options.master_seed, pair_key(pair), persona.id);

        try {
            GenerationResponse response = backend.generate(request);
            if (response.finish_reason == FinishReason::error) {
                candidate.history.push_back({"synthesis", StageOutcome::failed});
            } else {
                candidate.rationale_text = response.text;
                if (auto parsed = try_parse_scores(candidate.rationale_text)) {
                    candidate.declared_a = parsed->score_a;
                    candidate.declared_b = parsed->score_b;
                }
                candidate.history.push_back({"synthesis", StageOutcome::passed});
            }
        } catch (const Error& e) {
            // Per-item backend trouble is recorded, never dropped; anything
            // else is a configuration problem and aborts the run.
            const std::string& code = e.code();
            if (code.rfind("backend.", 0) != 0) throw;
            candidate.history.push_back({"synthesis", StageOutcome::failed});
        }
        pool[task] = std::move(candidate);
    });

    return pool;
}

}  // namespace evolvr
