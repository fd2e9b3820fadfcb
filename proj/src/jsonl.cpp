#include "evolvr/jsonl.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "evolvr/errors.hpp"

namespace evolvr {

namespace {

std::ifstream open_for_read(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) {
        fail("io.not_found", "file not found: " + path.string(), ErrorKind::usage);
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail("io.failure", "cannot open for reading: " + path.string());
    }
    return in;
}

[[noreturn]] void malformed(const std::filesystem::path& path, std::size_t line_no,
                            const std::string& what) {
    fail("io.malformed_record", path.string() + ":" + std::to_string(line_no) + ": " + what);
}

const ojson& require(const ojson& j, const char* key, const std::filesystem::path& path,
                     std::size_t line_no) {
    auto it = j.find(key);
    if (it == j.end()) malformed(path, line_no, std::string("missing field '") + key + "'");
    return *it;
}

}  // namespace

LoadResult load_scored_stories(const std::filesystem::path& path, const AspectSet& aspects) {
    auto in = open_for_read(path);
    LoadResult result;
    std::set<std::string> seen_ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        ojson j;
        try {
            j = ojson::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            malformed(path, line_no, e.what());
        }
        if (!j.is_object()) malformed(path, line_no, "line is not a JSON object");

        const auto& id_field = require(j, "id", path, line_no);
        if (!id_field.is_string()) malformed(path, line_no, "'id' must be a string");
        std::string id = id_field.get<std::string>();
        if (!seen_ids.insert(id).second) {
            fail("io.duplicate_id", path.string() + ":" + std::to_string(line_no) +
                                        ": duplicate story id '" + id + "'");
        }

        const auto& prompt_field = require(j, "prompt", path, line_no);
        const auto& text_field = require(j, "text", path, line_no);
        if (!prompt_field.is_string() || !text_field.is_string()) {
            malformed(path, line_no, "'prompt' and 'text' must be strings");
        }

        const auto& scores_field = require(j, "scores", path, line_no);
        if (!scores_field.is_object()) malformed(path, line_no, "'scores' must be an object");

        ScoreVector scores;
        std::string rounded_note;
        for (auto it = scores_field.begin(); it != scores_field.end(); ++it) {
            const ojson& v = it.value();
            int score = 0;
            if (v.is_number_integer()) {
                score = v.get<int>();
            } else if (v.is_number_float()) {
                score = static_cast<int>(round_half_up(v.get<double>(), 0));
                if (!rounded_note.empty()) rounded_note += ", ";
                rounded_note += it.key() + " " + v.dump() + " -> " + std::to_string(score);
            } else {
                malformed(path, line_no, "score for aspect '" + it.key() + "' must be a number");
            }
            if (!score_in_range(score)) {
                fail("io.out_of_range_score", path.string() + ":" + std::to_string(line_no) +
                                                  ": story '" + id + "' aspect '" + it.key() +
                                                  "' score " + std::to_string(score) +
                                                  " is outside 1..5");
            }
            scores.values[it.key()] = score;
        }
        if (!rounded_note.empty()) {
            result.warnings.push_back("story '" + id + "': fractional scores rounded half-up: " +
                                      rounded_note);
        }
        try {
            validate_score_vector(scores, aspects, "story '" + id + "'");
        } catch (const Error& e) {
            malformed(path, line_no, e.what());
        }

        result.records.push_back(
            {make_story(std::move(id), prompt_field.get<std::string>(), text_field.get<std::string>()),
             std::move(scores)});
    }
    return result;
}

StoryIndex build_story_index(const std::vector<ScoredStory>& records) {
    StoryIndex index;
    for (const auto& record : records) index[record.story.id] = record.story;
    return index;
}

void write_jsonl(const std::vector<ojson>& records, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail("io.failure", "cannot open for writing: " + path.string());
    for (const auto& record : records) {
        out << record.dump() << '\n';
    }
    out.flush();
    if (!out) fail("io.failure", "write failed: " + path.string());
}

std::vector<ojson> read_jsonl(const std::filesystem::path& path) {
    auto in = open_for_read(path);
    std::vector<ojson> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            records.push_back(ojson::parse(line));
        } catch (const nlohmann::json::parse_error& e) {
            malformed(path, line_no, e.what());
        }
    }
    return records;
}

ojson story_pair_to_json(const StoryPair& pair) {
    ojson j;
    j["a"] = pair.a.id;
    j["b"] = pair.b.id;
    j["aspect"] = pair.aspect;
    j["gt_a"] = pair.gt_a;
    j["gt_b"] = pair.gt_b;
    j["origin"] = to_string(pair.origin);
    return j;
}

namespace {

const Story& resolve_story(const StoryIndex& index, const std::string& id) {
    auto it = index.find(id);
    if (it == index.end()) {
        fail("io.unknown_story", "story id '" + id + "' is not in the source dataset");
    }
    return it->second;
}

int read_gt(const ojson& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_number_integer()) {
        fail("io.malformed_record", std::string("pair field '") + key + "' must be an integer");
    }
    int v = it->get<int>();
    if (!score_in_range(v)) {
        fail("io.out_of_range_score",
             std::string("pair field '") + key + "' = " + std::to_string(v) + " is outside 1..5");
    }
    return v;
}

}  // namespace

StoryPair story_pair_from_json(const ojson& j, const StoryIndex& index) {
    if (!j.is_object()) fail("io.malformed_record", "pair must be a JSON object");
    for (const char* key : {"a", "b", "aspect", "origin"}) {
        auto it = j.find(key);
        if (it == j.end() || !it->is_string()) {
            fail("io.malformed_record", std::string("pair field '") + key + "' must be a string");
        }
    }
    StoryPair pair;
    pair.a = resolve_story(index, j["a"].get<std::string>());
    pair.b = resolve_story(index, j["b"].get<std::string>());
    pair.aspect = j["aspect"].get<std::string>();
    pair.gt_a = read_gt(j, "gt_a");
    pair.gt_b = read_gt(j, "gt_b");
    pair.origin = pair_origin_from_string(j["origin"].get<std::string>());
    if (pair.a.id == pair.b.id) {
        fail("io.malformed_record", "pair references the same story twice: '" + pair.a.id + "'");
    }
    return pair;
}

ojson candidate_to_json(const CandidateDerivation& candidate) {
    ojson j;
    j["id"] = candidate.id;
    j["pair"] = story_pair_to_json(candidate.pair);
    j["persona"] = candidate.persona_id;
    j["rationale"] = candidate.rationale_text;
    j["declared_a"] = candidate.declared_a ? ojson(*candidate.declared_a) : ojson(nullptr);
    j["declared_b"] = candidate.declared_b ? ojson(*candidate.declared_b) : ojson(nullptr);
    ojson history = ojson::array();
    for (const auto& entry : candidate.history) {
        history.push_back(ojson::array({entry.stage, to_string(entry.outcome)}));
    }
    j["history"] = std::move(history);
    return j;
}

CandidateDerivation candidate_from_json(const ojson& j, const StoryIndex& index) {
    if (!j.is_object()) fail("io.malformed_record", "candidate must be a JSON object");
    CandidateDerivation c;
    for (const char* key : {"id", "persona", "rationale"}) {
        auto it = j.find(key);
        if (it == j.end() || !it->is_string()) {
            fail("io.malformed_record", std::string("candidate field '") + key + "' must be a string");
        }
    }
    c.id = j["id"].get<std::string>();
    auto pair_it = j.find("pair");
    if (pair_it == j.end()) fail("io.malformed_record", "candidate missing 'pair'");
    c.pair = story_pair_from_json(*pair_it, index);
    c.persona_id = j["persona"].get<std::string>();
    c.rationale_text = j["rationale"].get<std::string>();
    auto read_declared = [&](const char* key) -> std::optional<int> {
        auto it = j.find(key);
        if (it == j.end() || (!it->is_null() && !it->is_number_integer())) {
            fail("io.malformed_record",
                 std::string("candidate field '") + key + "' must be an integer or null");
        }
        if (it->is_null()) return std::nullopt;
        int v = it->get<int>();
        if (!score_in_range(v)) {
            fail("io.out_of_range_score", "candidate '" + c.id + "' declared score " +
                                              std::to_string(v) + " is outside 1..5");
        }
        return v;
    };
    c.declared_a = read_declared("declared_a");
    c.declared_b = read_declared("declared_b");
    auto hist_it = j.find("history");
    if (hist_it == j.end() || !hist_it->is_array()) {
        fail("io.malformed_record", "candidate field 'history' must be an array");
    }
    for (const auto& entry : *hist_it) {
        if (!entry.is_array() || entry.size() != 2 || !entry[0].is_string() || !entry[1].is_string()) {
            fail("io.malformed_record", "history entries must be [stage, outcome] string pairs");
        }
        c.history.push_back({entry[0].get<std::string>(),
                             stage_outcome_from_string(entry[1].get<std::string>())});
    }
    return c;
}

void write_pairs(const std::vector<StoryPair>& pairs, const std::filesystem::path& path) {
    std::vector<ojson> records;
    records.reserve(pairs.size());
    for (const auto& pair : pairs) records.push_back(story_pair_to_json(pair));
    write_jsonl(records, path);
}

std::vector<StoryPair> load_pairs(const std::filesystem::path& path, const StoryIndex& index) {
    std::vector<StoryPair> pairs;
    for (const auto& j : read_jsonl(path)) pairs.push_back(story_pair_from_json(j, index));
    return pairs;
}

void write_candidates(const std::vector<CandidateDerivation>& candidates,
                      const std::filesystem::path& path) {
    std::vector<ojson> records;
    records.reserve(candidates.size());
    for (const auto& candidate : candidates) records.push_back(candidate_to_json(candidate));
    write_jsonl(records, path);
}

std::vector<CandidateDerivation> load_candidates(const std::filesystem::path& path,
                                                 const StoryIndex& index) {
    std::vector<CandidateDerivation> candidates;
    for (const auto& j : read_jsonl(path)) candidates.push_back(candidate_from_json(j, index));
    return candidates;
}

ojson scored_story_to_json(const ScoredStory& record) {
    ojson j;
    j["id"] = record.story.id;
    j["prompt"] = record.story.prompt_text;
    j["text"] = record.story.body_text;
    ojson scores = ojson::object();
    for (const auto& [aspect, score] : record.scores.values) scores[aspect] = score;
    j["scores"] = std::move(scores);
    return j;
}

ojson manifest_to_json(const RunManifest& manifest) {
    ojson j;
    j["run_id"] = manifest.run_id;
    j["master_seed"] = manifest.master_seed;
    j["config_digest"] = manifest.config_digest;
    ojson counts = ojson::object();
    for (const auto& [stage, tally] : manifest.stage_counts) {
        counts[stage] = ojson{{"entered", tally.entered}, {"survived", tally.survived}};
    }
    j["stage_counts"] = std::move(counts);
    j["warnings"] = manifest.warnings;
    return j;
}

void write_manifest(const RunManifest& manifest, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail("io.failure", "cannot open for writing: " + path.string());
    out << manifest_to_json(manifest).dump(2) << '\n';
    out.flush();
    if (!out) fail("io.failure", "write failed: " + path.string());
}

RunManifest load_manifest(const std::filesystem::path& path) {
    auto in = open_for_read(path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    ojson j;
    try {
        j = ojson::parse(buffer.str());
    } catch (const nlohmann::json::parse_error& e) {
        fail("io.malformed_record", path.string() + ": " + e.what());
    }
    RunManifest manifest;
    manifest.run_id = j.value("run_id", "");
    manifest.master_seed = j.value("master_seed", std::uint64_t{0});
    manifest.config_digest = j.value("config_digest", "");
    if (j.contains("stage_counts")) {
        for (auto it = j["stage_counts"].begin(); it != j["stage_counts"].end(); ++it) {
            StageTally tally;
            tally.entered = it.value().value("entered", 0ll);
            tally.survived = it.value().value("survived", 0ll);
            manifest.stage_counts.emplace_back(it.key(), tally);
        }
    }
    if (j.contains("warnings")) {
        for (const auto& w : j["warnings"]) manifest.warnings.push_back(w.get<std::string>());
    }
    return manifest;
}

}  // namespace evolvr
