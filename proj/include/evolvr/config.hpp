#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "evolvr/backend.hpp"
#include "evolvr/core.hpp"
#include "evolvr/jsonl.hpp"
#include "evolvr/metrics.hpp"
#include "evolvr/reward.hpp"

namespace evolvr {

struct BackendBlock {
    std::string mode = "mock";  // "mock" or "http"
    std::string base_url = "http://127.0.0.1:8000";
    std::string model = "evolvr-default";
    std::string api_key_env = "EVOLVR_API_KEY";
    std::string fixtures;  // mock mode: JSONL fixture file
    int max_in_flight = 8;
    RetryPolicy retry;
    bool expect_logits = true;
};

struct IoBlock {
    std::string dataset;  // scored-story JSONL
    std::vector<AspectId> aspects;
    std::string personas;       // optional persona registry JSON
    std::string few_shot;       // optional few-shot exemplar JSONL
    std::string templates_dir;  // optional prompt template overrides
};

struct SynthesisBlock {
    int per_cell = 1;
    double temperature = 0.7;
    int max_tokens = 1024;
    std::vector<AspectId> aspects;  // subset to synthesize for; empty = io.aspects
};

// Which story stands in as the comparison baseline on the reward path: a fixed
// human-written reference or a fresh base-model draft supplied per request.
enum class ReferenceMode { static_reference, dynamic_reference };

std::string to_string(ReferenceMode mode);
ReferenceMode reference_mode_from_string(const std::string& text);

struct GlobalConfig {
    int schema_version = 1;
    std::uint64_t master_seed = 1;
    BackendBlock backend;
    IoBlock io;
    SynthesisBlock synthesis;
    std::vector<std::string> stages;
    EnsembleConfig ensemble;
    RewardConfig reward;
    ReferenceMode reference_mode = ReferenceMode::static_reference;

    // Load bookkeeping: whether the file pinned ensemble.seed / reward.alpha
    // explicitly, or they were derived (master_seed / uniform over io.aspects).
    bool ensemble_seed_explicit = false;
    bool alpha_explicit = false;

    static GlobalConfig defaults();
    void validate() const;

    // --seed: moves master_seed and every seed that was derived from it.
    void override_seed(std::uint64_t seed);

    ojson to_json() const;
    std::string digest() const;  // hash of the effective (fully resolved) config
};

// Strict parse: unknown keys anywhere are a hard error, missing keys fall back
// to defaults, and the result is validated before it is returned.
GlobalConfig config_from_json(const ojson& j);
GlobalConfig load_config(const std::string& path);

}  // namespace evolvr
