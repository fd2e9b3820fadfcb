#include <doctest.h>

#include "evolvr/config.hpp"
#include "util.hpp"

using namespace evolvr;

TEST_CASE("the default configuration is complete and valid") {
    const GlobalConfig config = GlobalConfig::defaults();
    CHECK_NOTHROW(config.validate());
    CHECK(config.schema_version == 1);
    CHECK(config.master_seed == 1);
    CHECK(config.backend.mode == "mock");
    CHECK(config.io.aspects.size() == 6);
    CHECK(config.stages == std::vector<std::string>{"rulecheck", "refine", "rulecheck", "attack",
                                                    "confidence"});
    CHECK(config.ensemble.seed == config.master_seed);
    CHECK(config.reward.alpha.size() == config.io.aspects.size());
    CHECK(config.reference_mode == ReferenceMode::static_reference);
}

TEST_CASE("an empty object parses to the defaults") {
    const GlobalConfig parsed = config_from_json(ojson::object());
    const GlobalConfig defaults = GlobalConfig::defaults();
    CHECK(parsed.to_json() == defaults.to_json());
    CHECK(parsed.digest() == defaults.digest());
}

TEST_CASE("unknown keys are rejected at every nesting level") {
    CHECK(testutil::error_code_of([] {
              config_from_json(ojson::parse(R"({"master_sed": 3})"));
          }) == "config.unknown_key");
    CHECK(testutil::error_code_of([] {
              config_from_json(ojson::parse(R"({"backend": {"modee": "mock"}})"));
          }) == "config.unknown_key");
    CHECK(testutil::error_code_of([] {
              config_from_json(ojson::parse(R"({"io": {"datset": "x"}})"));
          }) == "config.unknown_key");
    CHECK(testutil::error_code_of([] {
              config_from_json(ojson::parse(R"({"synthesis": {"percell": 2}})"));
          }) == "config.unknown_key");
    CHECK(testutil::error_code_of([] {
              config_from_json(ojson::parse(R"({"ensemble": {"npairs": 2}})"));
          }) == "config.unknown_key");
    CHECK(testutil::error_code_of([] {
              config_from_json(ojson::parse(R"({"reward": {"w4": 1.0}})"));
          }) == "config.unknown_key");
}

TEST_CASE("type and range errors carry the config.invalid code") {
    CHECK(testutil::error_code_of([] {
              config_from_json(ojson::parse(R"({"schema_version": 2})"));
          }) == "config.invalid");
    CHECK(testutil::error_code_of([] {
              config_from_json(ojson::parse(R"({"master_seed": "seven"})"));
          }) == "config.invalid");
    CHECK(testutil::error_code_of([] {
              config_from_json(ojson::parse(R"({"backend": {"mode": "carrier-pigeon"}})"));
          }) == "config.invalid");
    CHECK(testutil::error_code_of([] {
              config_from_json(ojson::parse(R"({"backend": {"max_in_flight": 0}})"));
          }) == "config.invalid");
    CHECK(testutil::error_code_of([] {
              config_from_json(ojson::parse(R"({"io": {"aspects": []}})"));
          }) == "config.invalid");
    CHECK(testutil::error_code_of([] {
              config_from_json(ojson::parse(R"({"io": {"aspects": ["a", "a"]}})"));
          }) == "config.invalid");
    CHECK(testutil::error_code_of([] {
              config_from_json(ojson::parse(R"({"stages": ["refine"]})"));
          }) == "config.invalid");
    CHECK(testutil::error_code_of([] {
              config_from_json(ojson::parse(R"({"ensemble": {"n_pairs": 0}})"));
          }) == "config.invalid");
    CHECK(testutil::error_code_of([] {
              config_from_json(ojson::parse(R"({"reference_mode": "telepathic"})"));
          }) == "config.invalid");
    // Synthesis aspects must be a subset of the declared aspect set.
    CHECK(testutil::error_code_of([] {
              config_from_json(ojson::parse(R"({"synthesis": {"aspects": ["tension"]}})"));
          }) == "config.invalid");
}

TEST_CASE("explicit alpha weights must cover the io aspect set exactly") {
    ojson j = ojson::parse(R"({
        "io": {"aspects": ["coherence", "empathy"]},
        "reward": {"alpha": {"coherence": 0.5, "empathy": 0.5}}
    })");
    const GlobalConfig config = config_from_json(j);
    CHECK(config.reward.alpha.at("coherence") == doctest::Approx(0.5));

    ojson missing = ojson::parse(R"({
        "io": {"aspects": ["coherence", "empathy"]},
        "reward": {"alpha": {"coherence": 1.0}}
    })");
    CHECK(testutil::error_code_of([&] { config_from_json(missing); }) == "config.invalid");

    // Without an explicit alpha the weights follow the declared aspects.
    ojson narrowed = ojson::parse(R"({"io": {"aspects": ["coherence", "empathy"]}})");
    const GlobalConfig derived = config_from_json(narrowed);
    CHECK(derived.reward.alpha.size() == 2);
    CHECK(derived.reward.alpha.at("empathy") == doctest::Approx(0.5));
}

TEST_CASE("the ensemble seed follows the master seed unless pinned") {
    const GlobalConfig derived = config_from_json(ojson::parse(R"({"master_seed": 99})"));
    CHECK(derived.master_seed == 99);
    CHECK(derived.ensemble.seed == 99);

    const GlobalConfig pinned =
        config_from_json(ojson::parse(R"({"master_seed": 99, "ensemble": {"seed": 7}})"));
    CHECK(pinned.ensemble.seed == 7);
}

TEST_CASE("a seed override moves derived seeds and leaves pinned ones alone") {
    GlobalConfig derived = config_from_json(ojson::parse(R"({"master_seed": 99})"));
    derived.override_seed(123);
    CHECK(derived.master_seed == 123);
    CHECK(derived.ensemble.seed == 123);

    GlobalConfig pinned =
        config_from_json(ojson::parse(R"({"master_seed": 99, "ensemble": {"seed": 7}})"));
    pinned.override_seed(123);
    CHECK(pinned.master_seed == 123);
    CHECK(pinned.ensemble.seed == 7);
}

TEST_CASE("the config digest is stable and sensitive") {
    const GlobalConfig a = GlobalConfig::defaults();
    const GlobalConfig b = GlobalConfig::defaults();
    CHECK(a.digest() == b.digest());
    CHECK(a.digest().size() == 64);

    GlobalConfig changed = GlobalConfig::defaults();
    changed.master_seed = 2;
    CHECK(changed.digest() != a.digest());

    GlobalConfig reweighted = GlobalConfig::defaults();
    reweighted.reward.w3 = 0.25;
    CHECK(reweighted.digest() != a.digest());
}

TEST_CASE("serialization round-trips through the strict parser") {
    GlobalConfig config = GlobalConfig::defaults();
    config.master_seed = 41;
    config.backend.mode = "http";
    config.backend.base_url = "http://10.0.0.2:9000";
    config.synthesis.per_cell = 3;
    config.ensemble.n_pairs = 8;
    config.ensemble.aggregation = Aggregation::per_story_mean;
    config.reward.lambda = 0.75;
    config.reference_mode = ReferenceMode::dynamic_reference;

    const GlobalConfig reparsed = config_from_json(config.to_json());
    CHECK(reparsed.to_json() == config.to_json());
    CHECK(reparsed.digest() == config.digest());
    CHECK(reparsed.ensemble.aggregation == Aggregation::per_story_mean);
    CHECK(reparsed.reference_mode == ReferenceMode::dynamic_reference);
}

TEST_CASE("reference mode names round trip") {
    CHECK(to_string(ReferenceMode::static_reference) == "static");
    CHECK(to_string(ReferenceMode::dynamic_reference) == "dynamic");
    CHECK(reference_mode_from_string("static") == ReferenceMode::static_reference);
    CHECK(reference_mode_from_string("dynamic") == ReferenceMode::dynamic_reference);
    CHECK(testutil::error_code_of([] { reference_mode_from_string("other"); }) ==
          "config.invalid");
}

TEST_CASE("loading configs from disk") {
    testutil::TempDir tmp;
    SUBCASE("a valid file loads") {
        testutil::spit(tmp.file("config.json"), R"({"master_seed": 5})");
        const GlobalConfig config = load_config(tmp.file("config.json").string());
        CHECK(config.master_seed == 5);
    }
    SUBCASE("a missing file is a usage error") {
        CHECK(testutil::error_code_of([&] { load_config(tmp.file("gone.json").string()); }) ==
              "io.not_found");
    }
    SUBCASE("malformed JSON is reported as invalid config") {
        testutil::spit(tmp.file("config.json"), "{not json");
        CHECK(testutil::error_code_of([&] { load_config(tmp.file("config.json").string()); }) ==
              "config.invalid");
    }
}

TEST_CASE("retry policy fields parse and validate") {
    const GlobalConfig config = config_from_json(ojson::parse(R"({
        "backend": {"retry": {"max_retries": 5, "base_delay_ms": 100, "factor": 3.0}}
    })"));
    CHECK(config.backend.retry.max_retries == 5);
    CHECK(config.backend.retry.base_delay_ms == 100);
    CHECK(config.backend.retry.factor == doctest::Approx(3.0));

    CHECK(testutil::error_code_of([] {
              config_from_json(ojson::parse(R"({"backend": {"retry": {"max_retries": -1}}})"));
          }) == "config.invalid");
    CHECK(testutil::error_code_of([] {
              config_from_json(ojson::parse(R"({"backend": {"retry": {"factor": 0.5}}})"));
          }) == "config.invalid");
}
