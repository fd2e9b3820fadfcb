#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "evolvr/core.hpp"
#include "evolvr/errors.hpp"
#include "evolvr/jsonl.hpp"

namespace testutil {

struct TempDir {
    std::filesystem::path path;

    TempDir() {
        static std::atomic<int> counter{0};
        path = std::filesystem::temp_directory_path() /
               ("evolvr_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::filesystem::path file(const std::string& name) const { return path / name; }
};

inline std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

inline void spit(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
}

// Runs fn and returns the Error code it threw, or "" when it did not throw.
template <typename Fn>
std::string error_code_of(Fn&& fn) {
    try {
        fn();
    } catch (const evolvr::Error& e) {
        return e.code();
    }
    return "";
}

inline evolvr::Story story(const std::string& id, const std::string& body,
                           const std::string& prompt = "Write a story.") {
    return evolvr::make_story(id, prompt, body);
}

inline evolvr::ScoredStory scored(const std::string& id, const evolvr::AspectSet& aspects,
                                  int score, const std::string& body = "") {
    evolvr::ScoredStory record;
    record.story = story(id, body.empty() ? "story body for " + id : body);
    for (const auto& aspect : aspects) record.scores.values[aspect] = score;
    return record;
}

inline evolvr::StoryPair pair_of(const evolvr::Story& a, const evolvr::Story& b,
                                 const evolvr::AspectId& aspect, int gt_a, int gt_b,
                                 evolvr::PairOrigin origin = evolvr::PairOrigin::sampled) {
    evolvr::StoryPair pair;
    pair.a = a;
    pair.b = b;
    pair.aspect = aspect;
    pair.gt_a = gt_a;
    pair.gt_b = gt_b;
    pair.origin = origin;
    return pair;
}

}  // namespace testutil
