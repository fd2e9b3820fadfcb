#include "evolvr/commands.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <utility>

#include "evolvr/core.hpp"
#include "evolvr/digest.hpp"
#include "evolvr/errors.hpp"
#include "evolvr/evolution.hpp"
#include "evolvr/harness.hpp"
#include "evolvr/http_backend.hpp"
#include "evolvr/jsonl.hpp"
#include "evolvr/metrics.hpp"
#include "evolvr/mock_backend.hpp"
#include "evolvr/service.hpp"

namespace evolvr {
namespace fs = std::filesystem;

namespace {

void ensure_parent(const fs::path& path) {
    const fs::path parent = path.parent_path();
    if (!parent.empty()) fs::create_directories(parent);
}

void write_json_file(const ojson& j, const fs::path& path) {
    ensure_parent(path);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail("io.failure", "cannot write " + path.string());
    out << j.dump(2) << '\n';
    out.flush();
    if (!out) fail("io.failure", "short write to " + path.string());
}

void write_text_file(const std::string& text, const fs::path& path) {
    ensure_parent(path);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail("io.failure", "cannot write " + path.string());
    out << text;
    out.flush();
    if (!out) fail("io.failure", "short write to " + path.string());
}

RunManifest base_manifest(const std::string& command, const GlobalConfig& config) {
    RunManifest manifest;
    manifest.run_id = make_run_id(command, config);
    manifest.master_seed = config.master_seed;
    manifest.config_digest = config.digest();
    return manifest;
}

std::optional<fs::path> optional_path(const std::string& text) {
    if (text.empty()) return std::nullopt;
    return fs::path(text);
}

int clamp_jobs(int parallelism) { return parallelism < 1 ? 1 : parallelism; }

}  // namespace

std::unique_ptr<Backend> make_backend(const GlobalConfig& config) {
    if (config.backend.mode == "mock") {
        if (config.backend.fixtures.empty()) return std::make_unique<MockBackend>();
        return std::make_unique<MockBackend>(MockBackend::from_file(config.backend.fixtures));
    }
    HttpBackendConfig http;
    http.base_url = config.backend.base_url;
    http.model = config.backend.model;
    http.retry = config.backend.retry;
    http.max_in_flight = config.backend.max_in_flight;
    http.expect_logprobs = config.backend.expect_logits;
    if (const char* key = std::getenv(config.backend.api_key_env.c_str())) http.api_key = key;
    return std::make_unique<HttpBackend>(http_config_from_env(std::move(http)));
}

PromptTemplates templates_for(const GlobalConfig& config) {
    return load_templates(optional_path(config.io.templates_dir),
                          optional_path(config.io.few_shot));
}

std::vector<Persona> personas_for(const GlobalConfig& config) {
    if (config.io.personas.empty()) return default_personas();
    return load_personas(config.io.personas);
}

std::string make_run_id(const std::string& command, const GlobalConfig& config) {
    return command + "-" + sha256_hex(command + "\x1f" + config.digest()).substr(0, 12);
}

void cmd_synthesize(const GlobalConfig& config, const std::string& dataset_path,
                    const std::string& out_path, int parallelism) {
    const LoadResult loaded = load_scored_stories(dataset_path, config.io.aspects);
    const std::vector<Persona> personas = personas_for(config);
    const PromptTemplates templates = templates_for(config);
    const std::unique_ptr<Backend> backend = make_backend(config);

    RunManifest manifest = base_manifest("synthesize", config);
    manifest.warnings = loaded.warnings;

    const AspectSet aspects =
        config.synthesis.aspects.empty() ? config.io.aspects : config.synthesis.aspects;
    std::vector<StoryPair> pool;
    for (const AspectId& aspect : aspects) {
        SamplingPlan plan;
        plan.per_cell = config.synthesis.per_cell;
        plan.aspect = aspect;
        plan.seed = mix_seed(config.master_seed, "sample", aspect);
        SampledPairs sampled = stratified_sample_pairs(loaded.records, plan);
        for (const std::string& warning : sampled.warnings)
            manifest.warnings.push_back("aspect " + aspect + ": " + warning);
        const std::vector<StoryPair> augmented = swap_augment(sampled.pairs);
        pool.insert(pool.end(), augmented.begin(), augmented.end());
    }

    SynthesisOptions options;
    options.temperature = config.synthesis.temperature;
    options.max_tokens = config.synthesis.max_tokens;
    options.master_seed = config.master_seed;
    options.parallelism = clamp_jobs(parallelism);
    const std::vector<CandidateDerivation> candidates =
        synthesize_pool(pool, personas, *backend, templates, options);

    long long produced = 0;
    for (const auto& candidate : candidates)
        if (!candidate.history.empty() &&
            candidate.history.back().outcome == StageOutcome::passed)
            ++produced;
    manifest.stage_counts.push_back(
        {"synthesis", StageTally{static_cast<long long>(candidates.size()), produced}});

    ensure_parent(out_path);
    write_candidates(candidates, out_path);
    write_manifest(manifest, out_path + ".manifest.json");
}

void cmd_evolve(const GlobalConfig& config, const std::string& candidates_path,
                const std::string& out_path, int parallelism) {
    const LoadResult loaded = load_scored_stories(config.io.dataset, config.io.aspects);
    const StoryIndex index = build_story_index(loaded.records);
    const std::vector<CandidateDerivation> pool = load_candidates(candidates_path, index);
    const StageSpec stages = StageSpec::from_names(config.stages);
    const PromptTemplates templates = templates_for(config);
    const std::unique_ptr<Backend> backend = make_backend(config);

    PipelineOptions options;
    options.parallelism = clamp_jobs(parallelism);
    const PipelineResult result = run_pipeline(pool, stages, *backend, templates, options);

    RunManifest manifest = base_manifest("evolve", config);
    manifest.warnings = loaded.warnings;
    for (std::size_t i = 0; i < result.report.rows.size(); ++i) {
        const AttritionRow& row = result.report.rows[i];
        const std::string key = i == 0 ? row.stage : std::to_string(i) + "." + row.stage;
        manifest.stage_counts.push_back({key, StageTally{row.entered, row.survived}});
    }

    ensure_parent(out_path);
    write_candidates(result.survivors, out_path);
    write_json_file(attrition_to_json(result.report), out_path + ".attrition.json");
    write_text_file(attrition_to_markdown(result.report), out_path + ".attrition.md");
    write_manifest(manifest, out_path + ".manifest.json");
}

void cmd_evaluate(const GlobalConfig& config, const std::string& test_set_path,
                  const std::string& out_path, const std::vector<int>& n_sweep, int parallelism) {
    const LoadResult loaded = load_scored_stories(test_set_path, config.io.aspects);
    std::vector<Story> pool;
    pool.reserve(loaded.records.size());
    for (const auto& record : loaded.records) pool.push_back(record.story);

    const PromptTemplates templates = templates_for(config);
    const std::unique_ptr<Backend> backend = make_backend(config);
    const PairJudge judge = make_backend_judge(*backend, templates);

    std::vector<int> sweep = n_sweep;
    if (sweep.empty()) sweep.push_back(config.ensemble.n_pairs);

    std::vector<ojson> predictions;
    ojson runs = ojson::array();
    for (const int n : sweep) {
        if (n < 1) fail("config.invalid", "ensemble size must be >= 1", ErrorKind::usage);
        EnsembleConfig ensemble = config.ensemble;
        ensemble.n_pairs = n;

        ojson by_aspect;
        for (const AspectId& aspect : config.io.aspects) {
            const EnsembleResult result = ensemble_evaluate(loaded.records, pool, aspect, judge,
                                                            ensemble, clamp_jobs(parallelism));
            for (const TargetScores& target : result.per_target) {
                ojson p;
                p["n_pairs"] = n;
                p["aspect"] = aspect;
                p["story"] = target.story_id;
                p["gold"] = target.gold;
                p["ab"] = target.ab;
                p["ba"] = target.ba;
                predictions.push_back(std::move(p));
            }
            ojson bundle = bundle_to_json(result.bundle);
            bundle["position_bias"] = position_bias(result);
            by_aspect[aspect] = std::move(bundle);
            write_text_file(confusion_to_csv(result.confusion),
                            out_path + ".confusion.n" + std::to_string(n) + "." + aspect + ".csv");
        }
        ojson run;
        run["n_pairs"] = n;
        run["aspects"] = std::move(by_aspect);
        runs.push_back(std::move(run));
    }

    ojson metrics;
    metrics["schema_version"] = 1;
    metrics["runs"] = std::move(runs);

    RunManifest manifest = base_manifest("evaluate", config);
    manifest.warnings = loaded.warnings;

    ensure_parent(out_path);
    write_jsonl(predictions, out_path);
    write_json_file(metrics, out_path + ".metrics.json");
    write_manifest(manifest, out_path + ".manifest.json");
}

namespace {

std::vector<AnnotatorScores> load_annotations(const fs::path& path, const AspectSet& aspects,
                                              std::vector<std::string>& warnings) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("io.not_found", "cannot open annotations file: " + path.string(),
                  ErrorKind::usage);

    std::vector<AnnotatorScores> annotators;
    std::map<std::string, std::size_t> by_id;
    std::set<std::pair<std::string, std::string>> seen;

    std::string line;
    long long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string where = path.string() + ":" + std::to_string(line_no);

        ojson j;
        try {
            j = ojson::parse(line);
        } catch (const ojson::parse_error& e) {
            fail("io.malformed_record", where + ": " + e.what());
        }
        if (!j.is_object() || !j.contains("annotator") || !j.contains("story") ||
            !j.contains("scores"))
            fail("io.malformed_record", where + ": expected annotator, story, scores fields");
        if (!j["annotator"].is_string() || !j["story"].is_string() || !j["scores"].is_object())
            fail("io.malformed_record", where + ": wrong field types");

        const std::string annotator = j["annotator"].get<std::string>();
        const std::string story = j["story"].get<std::string>();
        if (annotator.empty() || story.empty())
            fail("io.malformed_record", where + ": empty annotator or story id");
        if (!seen.insert({annotator, story}).second)
            fail("io.duplicate_id",
                 where + ": duplicate annotation for " + annotator + "/" + story);

        ScoreVector scores;
        for (auto it = j["scores"].begin(); it != j["scores"].end(); ++it) {
            if (it.value().is_number_integer()) {
                scores.values[it.key()] = static_cast<int>(it.value().get<long long>());
            } else if (it.value().is_number()) {
                const int rounded =
                    static_cast<int>(round_half_up(it.value().get<double>(), 0));
                scores.values[it.key()] = rounded;
                warnings.push_back(where + ": fractional score for " + it.key() +
                                   " rounded to " + std::to_string(rounded));
            } else {
                fail("io.malformed_record", where + ": scores must be numbers");
            }
        }
        try {
            validate_score_vector(scores, aspects, where);
        } catch (const Error& e) {
            fail("io.malformed_record", e.what());
        }

        auto [it, inserted] = by_id.try_emplace(annotator, annotators.size());
        if (inserted) annotators.push_back(AnnotatorScores{annotator, {}});
        annotators[it->second].by_story[story] = std::move(scores);
    }
    if (in.bad()) fail("io.failure", "read error on " + path.string());
    return annotators;
}

}  // namespace

void cmd_agreement(const GlobalConfig& config, const std::string& annotations_path,
                   const std::string& out_path) {
    RunManifest manifest = base_manifest("agreement", config);
    const std::vector<AnnotatorScores> annotators =
        load_annotations(annotations_path, config.io.aspects, manifest.warnings);
    const std::vector<AgreementRow> rows =
        agreement_analysis(annotators, config.io.aspects, config.master_seed);

    ensure_parent(out_path);
    write_json_file(agreement_to_json(rows), out_path);
    write_text_file(agreement_to_markdown(rows), out_path + ".md");
    write_manifest(manifest, out_path + ".manifest.json");
}

void cmd_serve(const GlobalConfig& config, const std::string& bind_addr,
               const std::string& out_path) {
    const auto colon = bind_addr.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == bind_addr.size())
        fail("config.invalid", "bind address must look like host:port, got \"" + bind_addr + "\"",
             ErrorKind::usage);
    const std::string host = bind_addr.substr(0, colon);
    int port = 0;
    try {
        std::size_t used = 0;
        port = std::stoi(bind_addr.substr(colon + 1), &used);
        if (used != bind_addr.size() - colon - 1) throw std::invalid_argument("trailing junk");
    } catch (const std::exception&) {
        fail("config.invalid", "invalid port in \"" + bind_addr + "\"", ErrorKind::usage);
    }
    if (port < 0 || port > 65535)
        fail("config.invalid", "port out of range in \"" + bind_addr + "\"", ErrorKind::usage);

    const PromptTemplates templates = templates_for(config);
    const std::unique_ptr<Backend> backend = make_backend(config);
    RewardService service(config, backend.get(), templates);
    const int bound = service.start(host, port);

    const RunManifest manifest = base_manifest("serve", config);
    if (out_path.empty()) {
        std::cout << manifest_to_json(manifest).dump(2) << '\n';
    } else {
        write_manifest(manifest, out_path);
    }
    std::cout << "listening on http://" << host << ":" << bound << std::endl;
    service.wait();
}

void cmd_config(const GlobalConfig& config, const std::string& out_path) {
    const ojson j = config.to_json();
    std::cout << j.dump(2) << '\n';
    if (!out_path.empty()) {
        write_json_file(j, out_path);
        write_manifest(base_manifest("config", config), out_path + ".manifest.json");
    }
}

}  // namespace evolvr
