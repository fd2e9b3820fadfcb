#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "evolvr/core.hpp"

namespace evolvr {

// Serialized field order is fixed, so identical inputs always produce
// byte-identical files.
using ojson = nlohmann::ordered_json;

struct ScoredStory {
    Story story;
    ScoreVector scores;
};

struct LoadResult {
    std::vector<ScoredStory> records;
    std::vector<std::string> warnings;
};

// Reads one scored story per line, in file order.  Fractional gold scores
// (averaged annotators) are rounded half-up onto the 1..5 grid, with a warning
// per affected record.
LoadResult load_scored_stories(const std::filesystem::path& path, const AspectSet& aspects);

using StoryIndex = std::map<std::string, Story>;

StoryIndex build_story_index(const std::vector<ScoredStory>& records);

// One JSON object per line, UTF-8, LF line endings.
void write_jsonl(const std::vector<ojson>& records, const std::filesystem::path& path);
std::vector<ojson> read_jsonl(const std::filesystem::path& path);

ojson story_pair_to_json(const StoryPair& pair);
// Story bodies are not inlined in pair/candidate lines; they are resolved
// through the index built from the source dataset.
StoryPair story_pair_from_json(const ojson& j, const StoryIndex& index);

ojson candidate_to_json(const CandidateDerivation& candidate);
CandidateDerivation candidate_from_json(const ojson& j, const StoryIndex& index);

void write_pairs(const std::vector<StoryPair>& pairs, const std::filesystem::path& path);
std::vector<StoryPair> load_pairs(const std::filesystem::path& path, const StoryIndex& index);

void write_candidates(const std::vector<CandidateDerivation>& candidates,
                      const std::filesystem::path& path);
std::vector<CandidateDerivation> load_candidates(const std::filesystem::path& path,
                                                 const StoryIndex& index);

ojson scored_story_to_json(const ScoredStory& record);

ojson manifest_to_json(const RunManifest& manifest);
void write_manifest(const RunManifest& manifest, const std::filesystem::path& path);
RunManifest load_manifest(const std::filesystem::path& path);

}  // namespace evolvr
