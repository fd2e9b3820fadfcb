#pragma once

#include <memory>
#include <string>

#include "evolvr/backend.hpp"
#include "evolvr/config.hpp"
#include "evolvr/jsonl.hpp"
#include "evolvr/prompts.hpp"

namespace evolvr {

// Stateless HTTP facade over the reward math and the pairwise judge.
//
//   POST /v1/reward   {"candidates":[{"scores":{...},"length":n},...],
//                      "reference":{"scores":{...}}}
//                     -> {"schema_version":1,"rewards":[...],"advantages":[...]}
//   POST /v1/score    {"story_a":"...","story_b":"...","aspect":"..."}
//                     -> {"schema_version":1,"ab":{...},"ba":{...}}
//   GET  /healthz     -> 200 "ok"
//
// Schema violations come back as 400 with a stable error code, judge backend
// outages as 503 "backend.unreachable", everything else as 500.
class RewardService {
public:
    // The backend may be null when only /v1/reward is needed; /v1/score then
    // answers 503.
    RewardService(GlobalConfig config, Backend* backend, PromptTemplates templates);
    ~RewardService();

    RewardService(const RewardService&) = delete;
    RewardService& operator=(const RewardService&) = delete;

    // Binds (port 0 picks a free port), serves on a background thread, and
    // returns the bound port once the server accepts connections.
    int start(const std::string& host, int port);
    void wait();  // blocks until stop()
    void stop();

    // JSON request -> JSON response, same logic the HTTP handlers run.
    ojson reward_response(const ojson& request) const;
    ojson score_response(const ojson& request) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace evolvr
