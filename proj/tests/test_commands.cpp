#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>

#include "evolvr/commands.hpp"
#include "evolvr/digest.hpp"
#include "evolvr/evolution.hpp"
#include "evolvr/harness.hpp"
#include "evolvr/jsonl.hpp"
#include "evolvr/metrics.hpp"
#include "evolvr/rng.hpp"
#include "util.hpp"

using namespace evolvr;
using testutil::TempDir;

namespace {

std::string dataset_line(const std::string& id, int coherence) {
    ojson j;
    j["id"] = id;
    j["prompt"] = "write about " + id;
    j["text"] = "story body for " + id + " with a handful of words";
    j["scores"] = ojson{{"coherence", coherence}};
    return j.dump() + "\n";
}

// Three stories per score class on the single "coherence" aspect.
std::filesystem::path write_dataset(TempDir& tmp, const std::string& name = "dataset.jsonl") {
    std::string content;
    for (int score = 1; score <= 5; ++score) {
        for (int i = 0; i < 3; ++i) {
            content += dataset_line("s" + std::to_string(score) + std::to_string(i), score);
        }
    }
    const auto path = tmp.file(name);
    testutil::spit(path, content);
    return path;
}

std::filesystem::path write_personas(TempDir& tmp) {
    const auto path = tmp.file("personas.json");
    testutil::spit(path, R"([
        {"id": "plain", "display_name": "the Plain Reader", "style": "plain", "focus": "clarity"},
        {"id": "stern", "display_name": "the Stern Reader", "style": "stern", "focus": "flaws"}
    ])");
    return path;
}

GlobalConfig synth_config(const std::filesystem::path& dataset,
                          const std::filesystem::path& personas,
                          const std::filesystem::path& fixtures) {
    ojson j;
    j["master_seed"] = 5;
    j["backend"] = ojson{{"mode", "mock"}, {"fixtures", fixtures.string()}};
    j["io"] = ojson{{"dataset", dataset.string()},
                    {"aspects", ojson::array({"coherence"})},
                    {"personas", personas.string()}};
    j["synthesis"] = ojson{{"per_cell", 1}};
    return config_from_json(j);
}

// Recreates the command's sampling to enumerate every prompt it will issue,
// then scripts a fixture for each.
void write_synthesis_fixtures(const GlobalConfig& config, const std::filesystem::path& dataset,
                              const std::filesystem::path& fixtures) {
    const LoadResult loaded = load_scored_stories(dataset, config.io.aspects);
    SamplingPlan plan;
    plan.per_cell = config.synthesis.per_cell;
    plan.aspect = "coherence";
    plan.seed = mix_seed(config.master_seed, "sample", "coherence");
    const std::vector<StoryPair> pairs =
        swap_augment(stratified_sample_pairs(loaded.records, plan).pairs);

    const PromptTemplates templates = templates_for(config);
    const std::vector<Persona> personas = personas_for(config);
    std::vector<ojson> lines;
    for (const StoryPair& pair : pairs) {
        for (const Persona& persona : personas) {
            const GenerationRequest request = build_synthesis_prompt(templates, pair, persona);
            ojson record;
            record["system"] = request.system_text;
            record["user"] = request.user_text;
            record["response"] = persona.id + " on " + pair_key(pair) + "\n" +
                                 score_line(pair.gt_a, pair.gt_b);
            lines.push_back(std::move(record));
        }
    }
    write_jsonl(lines, fixtures);
}

}  // namespace

TEST_CASE("synthesize writes a candidate pool and a manifest") {
    TempDir tmp;
    const auto dataset = write_dataset(tmp);
    const auto personas = write_personas(tmp);
    const auto fixtures = tmp.file("fixtures.jsonl");
    const GlobalConfig config = synth_config(dataset, personas, fixtures);
    write_synthesis_fixtures(config, dataset, fixtures);

    const auto out = tmp.file("candidates.jsonl");
    cmd_synthesize(config, dataset.string(), out.string());

    // 15 cells, swap-augmented, two personas.
    const StoryIndex index = build_story_index(load_scored_stories(dataset, {"coherence"}).records);
    const auto candidates = load_candidates(out, index);
    CHECK(candidates.size() == 60);
    for (const auto& candidate : candidates) {
        REQUIRE(candidate.history.size() == 1);
        CHECK(candidate.history[0].outcome == StageOutcome::passed);
        CHECK(*candidate.declared_a == candidate.pair.gt_a);
    }

    const RunManifest manifest = load_manifest(out.string() + ".manifest.json");
    CHECK(manifest.run_id == make_run_id("synthesize", config));
    CHECK(manifest.master_seed == 5);
    CHECK(manifest.config_digest == config.digest());
    REQUIRE(manifest.stage_counts.size() == 1);
    CHECK(manifest.stage_counts[0].first == "synthesis");
    CHECK(manifest.stage_counts[0].second.entered == 60);
    CHECK(manifest.stage_counts[0].second.survived == 60);
}

TEST_CASE("synthesize output is byte-identical across runs and worker counts") {
    TempDir tmp;
    const auto dataset = write_dataset(tmp);
    const auto personas = write_personas(tmp);
    const auto fixtures = tmp.file("fixtures.jsonl");
    const GlobalConfig config = synth_config(dataset, personas, fixtures);
    write_synthesis_fixtures(config, dataset, fixtures);

    const auto out_a = tmp.file("run_a/candidates.jsonl");
    const auto out_b = tmp.file("run_b/candidates.jsonl");
    cmd_synthesize(config, dataset.string(), out_a.string(), 1);
    cmd_synthesize(config, dataset.string(), out_b.string(), 8);

    CHECK(testutil::slurp(out_a) == testutil::slurp(out_b));
    CHECK(testutil::slurp(out_a.string() + ".manifest.json") ==
          testutil::slurp(out_b.string() + ".manifest.json"));
}

TEST_CASE("evolve filters a candidate file and reports attrition") {
    TempDir tmp;
    const auto dataset = write_dataset(tmp);
    const auto personas = write_personas(tmp);
    ojson cfg_json;
    cfg_json["master_seed"] = 5;
    cfg_json["backend"] = ojson{{"mode", "mock"}};
    cfg_json["io"] = ojson{{"dataset", dataset.string()},
                           {"aspects", ojson::array({"coherence"})},
                           {"personas", personas.string()}};
    cfg_json["stages"] = ojson::array({"rulecheck"});
    const GlobalConfig config = config_from_json(cfg_json);

    const StoryIndex index = build_story_index(load_scored_stories(dataset, {"coherence"}).records);
    const StoryPair pair = testutil::pair_of(index.at("s41"), index.at("s20"), "coherence", 4, 2);

    std::vector<CandidateDerivation> pool;
    auto push = [&](const std::string& id, const std::string& rationale) {
        CandidateDerivation c;
        c.id = id;
        c.pair = pair;
        c.persona_id = "plain";
        c.rationale_text = rationale;
        c.history.push_back({"synthesis", StageOutcome::passed});
        pool.push_back(std::move(c));
    };
    push("good_1", "fine.\nFINAL SCORES: Story A = 4, Story B = 2");
    push("bad_1", "flipped.\nFINAL SCORES: Story A = 2, Story B = 4");
    push("good_2", "also fine.\nFINAL SCORES: Story A = 4, Story B = 2");
    push("bad_2", "silent.");

    const auto candidates_path = tmp.file("pool.jsonl");
    write_candidates(pool, candidates_path);

    const auto out = tmp.file("survivors.jsonl");
    cmd_evolve(config, candidates_path.string(), out.string());

    const auto survivors = load_candidates(out, index);
    REQUIRE(survivors.size() == 2);
    CHECK(survivors[0].id == "good_1");
    CHECK(survivors[1].id == "good_2");

    const ojson attrition = ojson::parse(testutil::slurp(out.string() + ".attrition.json"));
    CHECK(attrition["initial"] == 4);
    REQUIRE(attrition["rows"].size() == 2);
    CHECK(attrition["rows"][0]["stage"] == "initial");
    CHECK(attrition["rows"][1]["stage"] == "rulecheck");
    CHECK(attrition["rows"][1]["survived"] == 2);
    CHECK(attrition["rows"][1]["cumulative_rate_pct"].get<double>() == doctest::Approx(50.0));

    const std::string markdown = testutil::slurp(out.string() + ".attrition.md");
    CHECK(markdown.find("50.00%") != std::string::npos);

    const RunManifest manifest = load_manifest(out.string() + ".manifest.json");
    REQUIRE(manifest.stage_counts.size() == 2);
    CHECK(manifest.stage_counts[0].first == "initial");
    CHECK(manifest.stage_counts[1].first == "1.rulecheck");
    CHECK(manifest.stage_counts[1].second.survived == 2);
}

namespace {

std::filesystem::path write_eval_fixtures(const GlobalConfig& config,
                                          const std::vector<ScoredStory>& records, TempDir& tmp) {
    const PromptTemplates templates = templates_for(config);
    std::vector<ojson> lines;
    for (const auto& first : records) {
        for (const auto& second : records) {
            if (first.story.id == second.story.id) continue;
            const GenerationRequest request =
                build_eval_prompt(templates, first.story, second.story, "coherence");
            ojson record;
            record["system"] = request.system_text;
            record["user"] = request.user_text;
            record["response"] = "judged.\nFINAL SCORES: Story A = " +
                                 std::to_string(first.scores.at("coherence")) + ", Story B = " +
                                 std::to_string(second.scores.at("coherence"));
            lines.push_back(std::move(record));
        }
    }
    const auto path = tmp.file("eval_fixtures.jsonl");
    write_jsonl(lines, path);
    return path;
}

}  // namespace

TEST_CASE("evaluate sweeps ensemble sizes with per-aspect metrics and confusion files") {
    TempDir tmp;
    std::string content;
    for (int score = 1; score <= 5; ++score) {
        content += dataset_line("e" + std::to_string(score), score);
    }
    const auto test_set = tmp.file("test_set.jsonl");
    testutil::spit(test_set, content);

    ojson cfg_json;
    cfg_json["master_seed"] = 9;
    cfg_json["io"] = ojson{{"aspects", ojson::array({"coherence"})}};
    cfg_json["backend"] = ojson{{"mode", "mock"}};
    GlobalConfig config = config_from_json(cfg_json);
    const LoadResult loaded = load_scored_stories(test_set, config.io.aspects);
    const auto fixtures = write_eval_fixtures(config, loaded.records, tmp);

    cfg_json["backend"] = ojson{{"mode", "mock"}, {"fixtures", fixtures.string()}};
    config = config_from_json(cfg_json);

    const auto out = tmp.file("predictions.jsonl");
    cmd_evaluate(config, test_set.string(), out.string(), {1, 2});

    const auto predictions = read_jsonl(out);
    CHECK(predictions.size() == 10);  // 5 targets x 2 sweep points
    for (const auto& p : predictions) {
        const int n = p["n_pairs"].get<int>();
        CHECK(p["ab"].size() == static_cast<std::size_t>(n));
        CHECK(p["ba"].size() == static_cast<std::size_t>(n));
        for (const auto& s : p["ab"]) CHECK(s.get<int>() == p["gold"].get<int>());
    }

    const ojson metrics = ojson::parse(testutil::slurp(out.string() + ".metrics.json"));
    CHECK(metrics["schema_version"] == 1);
    REQUIRE(metrics["runs"].size() == 2);
    CHECK(metrics["runs"][0]["n_pairs"] == 1);
    CHECK(metrics["runs"][1]["n_pairs"] == 2);
    const ojson& bundle = metrics["runs"][1]["aspects"]["coherence"];
    CHECK(bundle["pearson"].get<double>() == 1.0);
    CHECK(bundle["mse"].get<double>() == 0.0);
    CHECK(bundle["f1"].get<double>() == 1.0);
    CHECK(bundle["position_bias"].get<double>() == 0.0);

    for (const char* name : {".confusion.n1.coherence.csv", ".confusion.n2.coherence.csv"}) {
        const std::string csv = testutil::slurp(out.string() + name);
        CHECK(csv.rfind("gold\\pred,", 0) == 0);
    }
}

TEST_CASE("agreement analyzes an annotation file end to end") {
    TempDir tmp;
    std::string lines;
    auto add = [&](const std::string& annotator, const std::string& story, double score) {
        ojson j;
        j["annotator"] = annotator;
        j["story"] = story;
        j["scores"] = ojson{{"coherence", score}};
        lines += j.dump() + "\n";
    };
    for (int i = 1; i <= 4; ++i) {
        add("u", "s" + std::to_string(i), i);
        add("v", "s" + std::to_string(i), i);
    }

    const auto annotations = tmp.file("annotations.jsonl");
    testutil::spit(annotations, lines);

    ojson cfg_json;
    cfg_json["io"] = ojson{{"aspects", ojson::array({"coherence"})}};
    const GlobalConfig config = config_from_json(cfg_json);

    const auto out = tmp.file("agreement.json");
    cmd_agreement(config, annotations.string(), out.string());

    const ojson rows = ojson::parse(testutil::slurp(out));
    REQUIRE(rows.size() == 1);
    CHECK(rows[0]["dimension"] == "coherence");
    CHECK(rows[0]["pointwise_r"].get<double>() == doctest::Approx(1.0));
    CHECK(rows[0]["pairwise_r"].get<double>() == doctest::Approx(1.0));

    const std::string markdown = testutil::slurp(out.string() + ".md");
    CHECK(markdown.find("| coherence |") != std::string::npos);
    CHECK(std::filesystem::exists(out.string() + ".manifest.json"));
}

TEST_CASE("agreement input validation through the command layer") {
    TempDir tmp;
    ojson cfg_json;
    cfg_json["io"] = ojson{{"aspects", ojson::array({"coherence"})}};
    const GlobalConfig config = config_from_json(cfg_json);

    SUBCASE("single annotator") {
        testutil::spit(tmp.file("one.jsonl"),
                       R"({"annotator":"u","story":"s1","scores":{"coherence":3}})"
                       "\n"
                       R"({"annotator":"u","story":"s2","scores":{"coherence":4}})"
                       "\n");
        CHECK(testutil::error_code_of([&] {
                  cmd_agreement(config, tmp.file("one.jsonl").string(),
                                tmp.file("out.json").string());
              }) == "agreement.insufficient");
    }
    SUBCASE("duplicate annotation") {
        testutil::spit(tmp.file("dup.jsonl"),
                       R"({"annotator":"u","story":"s1","scores":{"coherence":3}})"
                       "\n"
                       R"({"annotator":"u","story":"s1","scores":{"coherence":4}})"
                       "\n");
        CHECK(testutil::error_code_of([&] {
                  cmd_agreement(config, tmp.file("dup.jsonl").string(),
                                tmp.file("out.json").string());
              }) == "io.duplicate_id");
    }
    SUBCASE("missing file") {
        CHECK(testutil::error_code_of([&] {
                  cmd_agreement(config, tmp.file("nope.jsonl").string(),
                                tmp.file("out.json").string());
              }) == "io.not_found");
    }
    SUBCASE("malformed line is reported with its line number") {
        testutil::spit(tmp.file("bad.jsonl"),
                       R"({"annotator":"u","story":"s1","scores":{"coherence":3}})"
                       "\n{broken\n");
        try {
            cmd_agreement(config, tmp.file("bad.jsonl").string(), tmp.file("out.json").string());
            FAIL("expected io.malformed_record");
        } catch (const Error& e) {
            CHECK(e.code() == "io.malformed_record");
            CHECK(std::string(e.what()).find(":2") != std::string::npos);
        }
    }
    SUBCASE("fractional scores are rounded with a warning") {
        testutil::spit(tmp.file("frac.jsonl"),
                       R"({"annotator":"u","story":"s1","scores":{"coherence":3.5}})"
                       "\n"
                       R"({"annotator":"u","story":"s2","scores":{"coherence":1}})"
                       "\n"
                       R"({"annotator":"u","story":"s3","scores":{"coherence":2}})"
                       "\n"
                       R"({"annotator":"v","story":"s1","scores":{"coherence":4}})"
                       "\n"
                       R"({"annotator":"v","story":"s2","scores":{"coherence":1}})"
                       "\n"
                       R"({"annotator":"v","story":"s3","scores":{"coherence":2}})"
                       "\n");
        const auto out = tmp.file("out.json");
        cmd_agreement(config, tmp.file("frac.jsonl").string(), out.string());
        const RunManifest manifest = load_manifest(out.string() + ".manifest.json");
        REQUIRE(manifest.warnings.size() == 1);
        CHECK(manifest.warnings[0].find("rounded to 4") != std::string::npos);
    }
}

TEST_CASE("the config command writes the effective configuration") {
    TempDir tmp;
    GlobalConfig config = GlobalConfig::defaults();
    config.master_seed = 31;
    config.ensemble.seed = 31;

    const auto out = tmp.file("effective.json");
    cmd_config(config, out.string());
    const ojson written = ojson::parse(testutil::slurp(out));
    CHECK(written == config.to_json());
    CHECK(written["master_seed"] == 31);
    CHECK(std::filesystem::exists(out.string() + ".manifest.json"));
}

TEST_CASE("run ids depend on the command and config, nothing else") {
    const GlobalConfig config = GlobalConfig::defaults();
    CHECK(make_run_id("synthesize", config) == make_run_id("synthesize", config));
    CHECK(make_run_id("synthesize", config) != make_run_id("evolve", config));
    GlobalConfig reseeded = config;
    reseeded.master_seed = 2;
    CHECK(make_run_id("synthesize", config) != make_run_id("synthesize", reseeded));
    CHECK(make_run_id("synthesize", config).rfind("synthesize-", 0) == 0);
}

namespace {

struct CliResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

CliResult run_cli(const std::string& args, TempDir& tmp) {
    const char* cli = std::getenv("EVOLVR_CLI");
    REQUIRE_MESSAGE(cli != nullptr, "EVOLVR_CLI must point at the built binary (set by ctest)");
    static int invocation = 0;
    const auto out_path = tmp.file("cli_out_" + std::to_string(invocation));
    const auto err_path = tmp.file("cli_err_" + std::to_string(invocation));
    ++invocation;
    const std::string command = std::string(cli) + " " + args + " >" + out_path.string() + " 2>" +
                                err_path.string();
    const int status = std::system(command.c_str());
    CliResult result;
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    result.out = testutil::slurp(out_path);
    result.err = testutil::slurp(err_path);
    return result;
}

}  // namespace

TEST_CASE("the command line front end maps errors to exit codes and coded stderr") {
    TempDir tmp;
    const auto dataset = write_dataset(tmp);
    const auto config_path = tmp.file("config.json");
    testutil::spit(config_path, R"({
        "master_seed": 5,
        "io": {"dataset": ")" + dataset.string() +
                                    R"(", "aspects": ["coherence"]}
    })");

    SUBCASE("config command prints the effective config") {
        const CliResult result = run_cli("config --config " + config_path.string(), tmp);
        CHECK(result.exit_code == 0);
        const ojson printed = ojson::parse(result.out);
        CHECK(printed["master_seed"] == 5);
        CHECK(printed["io"]["aspects"][0] == "coherence");
    }

    SUBCASE("a seed flag overrides the file") {
        const CliResult result =
            run_cli("config --config " + config_path.string() + " --seed 77", tmp);
        CHECK(result.exit_code == 0);
        CHECK(ojson::parse(result.out)["master_seed"] == 77);
    }

    SUBCASE("a missing input file exits 2 with a coded error") {
        const CliResult result = run_cli("synthesize --config " + config_path.string() +
                                             " --dataset /no/such/file.jsonl --out " +
                                             tmp.file("out.jsonl").string(),
                                         tmp);
        CHECK(result.exit_code == 2);
        const ojson error = ojson::parse(result.err);
        CHECK(error["error"]["code"] == "io.not_found");
    }

    SUBCASE("an unknown config key exits 2") {
        const auto bad_config = tmp.file("bad.json");
        testutil::spit(bad_config, R"({"master_sneed": 5})");
        const CliResult result = run_cli("config --config " + bad_config.string(), tmp);
        CHECK(result.exit_code == 2);
        CHECK(ojson::parse(result.err)["error"]["code"] == "config.unknown_key");
    }

    SUBCASE("an empty candidate pool exits 2") {
        const auto empty = tmp.file("empty.jsonl");
        testutil::spit(empty, "");
        const CliResult result = run_cli("evolve --config " + config_path.string() +
                                             " --candidates " + empty.string() + " --out " +
                                             tmp.file("out.jsonl").string(),
                                         tmp);
        CHECK(result.exit_code == 2);
        CHECK(ojson::parse(result.err)["error"]["code"] == "pipeline.empty_pool");
    }

    SUBCASE("missing subcommand exits 2") {
        const CliResult result = run_cli("", tmp);
        CHECK(result.exit_code == 2);
    }

    SUBCASE("help exits 0") {
        const CliResult result = run_cli("--help", tmp);
        CHECK(result.exit_code == 0);
        CHECK(result.out.find("synthesize") != std::string::npos);
    }
}
