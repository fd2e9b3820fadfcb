#include "evolvr/config.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

#include "evolvr/digest.hpp"
#include "evolvr/errors.hpp"
#include "evolvr/evolution.hpp"

namespace evolvr {
namespace {

[[noreturn]] void bad(const std::string& where, const std::string& what) {
    fail("config.invalid", where + ": " + what, ErrorKind::usage);
}

void check_keys(const ojson& j, const std::string& where,
                std::initializer_list<const char*> allowed) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* key : allowed) {
            if (it.key() == key) {
                known = true;
                break;
            }
        }
        if (!known) {
            fail("config.unknown_key", where + ": unknown key \"" + it.key() + "\"",
                 ErrorKind::usage);
        }
    }
}

const ojson* find(const ojson& j, const char* key) {
    const auto it = j.find(key);
    return it == j.end() ? nullptr : &*it;
}

const ojson* require_object(const ojson& j, const char* key, const std::string& where) {
    const ojson* v = find(j, key);
    if (!v) return nullptr;
    if (!v->is_object()) bad(where, std::string(key) + " must be an object");
    return v;
}

std::string get_string(const ojson& j, const char* key, std::string fallback,
                       const std::string& where) {
    const ojson* v = find(j, key);
    if (!v) return fallback;
    if (!v->is_string()) bad(where, std::string(key) + " must be a string");
    return v->get<std::string>();
}

long long get_int(const ojson& j, const char* key, long long fallback, const std::string& where) {
    const ojson* v = find(j, key);
    if (!v) return fallback;
    if (!v->is_number_integer()) bad(where, std::string(key) + " must be an integer");
    return v->get<long long>();
}

std::uint64_t get_seed(const ojson& j, const char* key, std::uint64_t fallback,
                       const std::string& where) {
    const ojson* v = find(j, key);
    if (!v) return fallback;
    if (v->is_number_unsigned()) return v->get<std::uint64_t>();
    if (v->is_number_integer() && v->get<long long>() >= 0)
        return static_cast<std::uint64_t>(v->get<long long>());
    bad(where, std::string(key) + " must be a non-negative integer");
}

double get_double(const ojson& j, const char* key, double fallback, const std::string& where) {
    const ojson* v = find(j, key);
    if (!v) return fallback;
    if (!v->is_number()) bad(where, std::string(key) + " must be a number");
    return v->get<double>();
}

bool get_bool(const ojson& j, const char* key, bool fallback, const std::string& where) {
    const ojson* v = find(j, key);
    if (!v) return fallback;
    if (!v->is_boolean()) bad(where, std::string(key) + " must be a boolean");
    return v->get<bool>();
}

std::vector<std::string> get_string_array(const ojson& j, const char* key,
                                          std::vector<std::string> fallback,
                                          const std::string& where) {
    const ojson* v = find(j, key);
    if (!v) return fallback;
    if (!v->is_array()) bad(where, std::string(key) + " must be an array of strings");
    std::vector<std::string> out;
    for (const auto& item : *v) {
        if (!item.is_string()) bad(where, std::string(key) + " must contain only strings");
        out.push_back(item.get<std::string>());
    }
    return out;
}

std::string aggregation_name(Aggregation a) {
    return a == Aggregation::pooled ? "pooled" : "per_story_mean";
}

Aggregation aggregation_from_name(const std::string& text, const std::string& where) {
    if (text == "pooled") return Aggregation::pooled;
    if (text == "per_story_mean") return Aggregation::per_story_mean;
    bad(where, "aggregation must be \"pooled\" or \"per_story_mean\", got \"" + text + "\"");
}

std::string f1_variant_name(F1Variant v) { return v == F1Variant::macro ? "macro" : "weighted"; }

F1Variant f1_variant_from_name(const std::string& text, const std::string& where) {
    if (text == "macro") return F1Variant::macro;
    if (text == "weighted") return F1Variant::weighted;
    bad(where, "f1_variant must be \"macro\" or \"weighted\", got \"" + text + "\"");
}

void parse_backend(const ojson& j, BackendBlock& out) {
    const std::string where = "backend";
    check_keys(j, where,
               {"mode", "base_url", "model", "api_key_env", "fixtures", "max_in_flight", "retry",
                "expect_logits"});
    out.mode = get_string(j, "mode", out.mode, where);
    out.base_url = get_string(j, "base_url", out.base_url, where);
    out.model = get_string(j, "model", out.model, where);
    out.api_key_env = get_string(j, "api_key_env", out.api_key_env, where);
    out.fixtures = get_string(j, "fixtures", out.fixtures, where);
    out.max_in_flight = static_cast<int>(get_int(j, "max_in_flight", out.max_in_flight, where));
    out.expect_logits = get_bool(j, "expect_logits", out.expect_logits, where);
    if (const ojson* retry = require_object(j, "retry", where)) {
        check_keys(*retry, "backend.retry", {"max_retries", "base_delay_ms", "factor"});
        out.retry.max_retries = static_cast<int>(
            get_int(*retry, "max_retries", out.retry.max_retries, "backend.retry"));
        out.retry.base_delay_ms = static_cast<int>(
            get_int(*retry, "base_delay_ms", out.retry.base_delay_ms, "backend.retry"));
        out.retry.factor = get_double(*retry, "factor", out.retry.factor, "backend.retry");
    }
}

void parse_io(const ojson& j, IoBlock& out) {
    const std::string where = "io";
    check_keys(j, where, {"dataset", "aspects", "personas", "few_shot", "templates_dir"});
    out.dataset = get_string(j, "dataset", out.dataset, where);
    out.aspects = get_string_array(j, "aspects", out.aspects, where);
    out.personas = get_string(j, "personas", out.personas, where);
    out.few_shot = get_string(j, "few_shot", out.few_shot, where);
    out.templates_dir = get_string(j, "templates_dir", out.templates_dir, where);
}

void parse_synthesis(const ojson& j, SynthesisBlock& out) {
    const std::string where = "synthesis";
    check_keys(j, where, {"per_cell", "temperature", "max_tokens", "aspects"});
    out.per_cell = static_cast<int>(get_int(j, "per_cell", out.per_cell, where));
    out.temperature = get_double(j, "temperature", out.temperature, where);
    out.max_tokens = static_cast<int>(get_int(j, "max_tokens", out.max_tokens, where));
    out.aspects = get_string_array(j, "aspects", out.aspects, where);
}

void parse_ensemble(const ojson& j, GlobalConfig& cfg) {
    const std::string where = "ensemble";
    check_keys(j, where, {"n_pairs", "seed", "aggregation", "f1_variant"});
    cfg.ensemble.n_pairs = static_cast<int>(get_int(j, "n_pairs", cfg.ensemble.n_pairs, where));
    if (find(j, "seed")) {
        cfg.ensemble.seed = get_seed(j, "seed", cfg.ensemble.seed, where);
        cfg.ensemble_seed_explicit = true;
    }
    if (find(j, "aggregation"))
        cfg.ensemble.aggregation =
            aggregation_from_name(get_string(j, "aggregation", "", where), where);
    if (find(j, "f1_variant"))
        cfg.ensemble.f1_variant = f1_variant_from_name(get_string(j, "f1_variant", "", where), where);
}

void parse_reward(const ojson& j, GlobalConfig& cfg) {
    const std::string where = "reward";
    check_keys(j, where,
               {"w1", "w2", "w3", "alpha", "lambda", "len_min", "len_max", "len_ramp"});
    RewardConfig& out = cfg.reward;
    out.w1 = get_double(j, "w1", out.w1, where);
    out.w2 = get_double(j, "w2", out.w2, where);
    out.w3 = get_double(j, "w3", out.w3, where);
    out.lambda = get_double(j, "lambda", out.lambda, where);
    out.len_min = static_cast<int>(get_int(j, "len_min", out.len_min, where));
    out.len_max = static_cast<int>(get_int(j, "len_max", out.len_max, where));
    out.len_ramp = static_cast<int>(get_int(j, "len_ramp", out.len_ramp, where));
    if (const ojson* alpha = require_object(j, "alpha", where)) {
        out.alpha.clear();
        for (auto it = alpha->begin(); it != alpha->end(); ++it) {
            if (!it.value().is_number()) bad("reward.alpha", "weights must be numbers");
            out.alpha[it.key()] = it.value().get<double>();
        }
        cfg.alpha_explicit = true;
    }
}

}  // namespace

std::string to_string(ReferenceMode mode) {
    return mode == ReferenceMode::static_reference ? "static" : "dynamic";
}

ReferenceMode reference_mode_from_string(const std::string& text) {
    if (text == "static") return ReferenceMode::static_reference;
    if (text == "dynamic") return ReferenceMode::dynamic_reference;
    bad("reference_mode", "must be \"static\" or \"dynamic\", got \"" + text + "\"");
}

GlobalConfig GlobalConfig::defaults() {
    GlobalConfig cfg;
    cfg.io.aspects = {"relevance", "coherence", "empathy", "surprise", "engagement", "complexity"};
    for (StageKind kind : StageSpec::defaults().stages) cfg.stages.push_back(stage_name(kind));
    cfg.ensemble.seed = cfg.master_seed;
    cfg.reward = RewardConfig::defaults_for(cfg.io.aspects);
    return cfg;
}

void GlobalConfig::validate() const {
    if (schema_version != 1) bad("config", "unsupported schema_version");
    if (backend.mode != "mock" && backend.mode != "http")
        bad("backend", "mode must be \"mock\" or \"http\", got \"" + backend.mode + "\"");
    if (backend.max_in_flight < 1) bad("backend", "max_in_flight must be >= 1");
    if (backend.retry.max_retries < 0) bad("backend.retry", "max_retries must be >= 0");
    if (backend.retry.base_delay_ms < 0) bad("backend.retry", "base_delay_ms must be >= 0");
    if (!std::isfinite(backend.retry.factor) || backend.retry.factor < 1.0)
        bad("backend.retry", "factor must be >= 1");

    if (io.aspects.empty()) bad("io", "aspects must not be empty");
    std::set<AspectId> seen;
    for (const auto& aspect : io.aspects) {
        if (aspect.empty()) bad("io", "aspects must not contain empty names");
        if (!seen.insert(aspect).second) bad("io", "duplicate aspect \"" + aspect + "\"");
    }

    if (synthesis.per_cell < 1) bad("synthesis", "per_cell must be >= 1");
    if (!std::isfinite(synthesis.temperature) || synthesis.temperature < 0.0)
        bad("synthesis", "temperature must be >= 0");
    if (synthesis.max_tokens < 1) bad("synthesis", "max_tokens must be >= 1");
    std::set<AspectId> synth_seen;
    for (const auto& aspect : synthesis.aspects) {
        if (!seen.count(aspect))
            bad("synthesis", "aspect \"" + aspect + "\" is not declared in io.aspects");
        if (!synth_seen.insert(aspect).second)
            bad("synthesis", "duplicate aspect \"" + aspect + "\"");
    }

    StageSpec::from_names(stages).validate();

    if (ensemble.n_pairs < 1) bad("ensemble", "n_pairs must be >= 1");

    reward.validate();
    if (reward.alpha.size() != io.aspects.size()) bad("reward", "alpha must cover io.aspects");
    for (const auto& aspect : io.aspects)
        if (!reward.alpha.count(aspect))
            bad("reward", "alpha is missing aspect \"" + aspect + "\"");
}

void GlobalConfig::override_seed(std::uint64_t seed) {
    master_seed = seed;
    if (!ensemble_seed_explicit) ensemble.seed = seed;
}

ojson GlobalConfig::to_json() const {
    ojson j;
    j["schema_version"] = schema_version;
    j["master_seed"] = master_seed;
    ojson b;
    b["mode"] = backend.mode;
    b["base_url"] = backend.base_url;
    b["model"] = backend.model;
    b["api_key_env"] = backend.api_key_env;
    b["fixtures"] = backend.fixtures;
    b["max_in_flight"] = backend.max_in_flight;
    b["retry"] = ojson{{"max_retries", backend.retry.max_retries},
                       {"base_delay_ms", backend.retry.base_delay_ms},
                       {"factor", backend.retry.factor}};
    b["expect_logits"] = backend.expect_logits;
    j["backend"] = std::move(b);
    ojson io_j;
    io_j["dataset"] = io.dataset;
    io_j["aspects"] = io.aspects;
    io_j["personas"] = io.personas;
    io_j["few_shot"] = io.few_shot;
    io_j["templates_dir"] = io.templates_dir;
    j["io"] = std::move(io_j);
    ojson s;
    s["per_cell"] = synthesis.per_cell;
    s["temperature"] = synthesis.temperature;
    s["max_tokens"] = synthesis.max_tokens;
    s["aspects"] = synthesis.aspects;
    j["synthesis"] = std::move(s);
    j["stages"] = stages;
    ojson e;
    e["n_pairs"] = ensemble.n_pairs;
    e["seed"] = ensemble.seed;
    e["aggregation"] = aggregation_name(ensemble.aggregation);
    e["f1_variant"] = f1_variant_name(ensemble.f1_variant);
    j["ensemble"] = std::move(e);
    ojson r;
    r["w1"] = reward.w1;
    r["w2"] = reward.w2;
    r["w3"] = reward.w3;
    ojson alpha;
    for (const auto& [aspect, weight] : reward.alpha) alpha[aspect] = weight;
    r["alpha"] = std::move(alpha);
    r["lambda"] = reward.lambda;
    r["len_min"] = reward.len_min;
    r["len_max"] = reward.len_max;
    r["len_ramp"] = reward.len_ramp;
    j["reward"] = std::move(r);
    j["reference_mode"] = to_string(reference_mode);
    return j;
}

std::string GlobalConfig::digest() const { return sha256_hex(to_json().dump()); }

GlobalConfig config_from_json(const ojson& j) {
    if (!j.is_object()) bad("config", "top level must be a JSON object");
    check_keys(j, "config",
               {"schema_version", "master_seed", "backend", "io", "synthesis", "stages",
                "ensemble", "reward", "reference_mode"});

    GlobalConfig cfg = GlobalConfig::defaults();
    cfg.schema_version = static_cast<int>(get_int(j, "schema_version", cfg.schema_version,
                                                  "config"));
    cfg.master_seed = get_seed(j, "master_seed", cfg.master_seed, "config");
    cfg.ensemble.seed = cfg.master_seed;

    if (const ojson* b = require_object(j, "backend", "config")) parse_backend(*b, cfg.backend);
    if (const ojson* io_j = require_object(j, "io", "config")) parse_io(*io_j, cfg.io);
    if (const ojson* s = require_object(j, "synthesis", "config")) parse_synthesis(*s, cfg.synthesis);
    cfg.stages = get_string_array(j, "stages", cfg.stages, "config");
    if (const ojson* e = require_object(j, "ensemble", "config")) parse_ensemble(*e, cfg);
    if (const ojson* r = require_object(j, "reward", "config")) parse_reward(*r, cfg);
    if (!cfg.alpha_explicit) cfg.reward.alpha = RewardConfig::defaults_for(cfg.io.aspects).alpha;
    cfg.reference_mode =
        reference_mode_from_string(get_string(j, "reference_mode", "static", "config"));

    cfg.validate();
    return cfg;
}

GlobalConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("io.not_found", "cannot open config file: " + path, ErrorKind::usage);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    ojson j;
    try {
        j = ojson::parse(buffer.str());
    } catch (const ojson::parse_error& e) {
        fail("config.invalid", path + ": " + e.what(), ErrorKind::usage);
    }
    return config_from_json(j);
}

}  // namespace evolvr
