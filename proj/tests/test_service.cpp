#include <doctest.h>

#include <httplib.h>

#include "evolvr/config.hpp"
#include "evolvr/harness.hpp"
#include "evolvr/mock_backend.hpp"
#include "evolvr/service.hpp"
#include "util.hpp"

using namespace evolvr;

namespace {

ojson score_object(const AspectSet& aspects, int value) {
    ojson j = ojson::object();
    for (const auto& aspect : aspects) j[aspect] = value;
    return j;
}

ojson reward_request(const AspectSet& aspects, const std::vector<std::pair<int, int>>& candidates,
                     int reference_score = 3) {
    ojson request;
    request["schema_version"] = 1;
    request["reference"] = ojson{{"scores", score_object(aspects, reference_score)}};
    ojson list = ojson::array();
    for (const auto& [score, length] : candidates) {
        list.push_back(ojson{{"scores", score_object(aspects, score)}, {"length", length}});
    }
    request["candidates"] = std::move(list);
    return request;
}

}  // namespace

TEST_CASE("the reward endpoint reproduces the composite worked example") {
    const GlobalConfig config = GlobalConfig::defaults();
    RewardService service(config, nullptr, PromptTemplates::defaults());

    const ojson response =
        service.reward_response(reward_request(config.io.aspects, {{4, 500}}));
    CHECK(response["schema_version"] == 1);
    REQUIRE(response["rewards"].size() == 1);
    CHECK(response["rewards"][0].get<double>() == doctest::Approx(3.2));
    CHECK(response["advantages"][0].get<double>() == doctest::Approx(0.0));
}

TEST_CASE("grouped candidates get centered advantages") {
    const GlobalConfig config = GlobalConfig::defaults();
    RewardService service(config, nullptr, PromptTemplates::defaults());

    const ojson response = service.reward_response(
        reward_request(config.io.aspects, {{4, 500}, {3, 500}, {2, 500}}));
    REQUIRE(response["rewards"].size() == 3);
    CHECK(response["rewards"][0].get<double>() == doctest::Approx(3.2));
    CHECK(response["rewards"][1].get<double>() == doctest::Approx(1.7));
    CHECK(response["rewards"][2].get<double>() == doctest::Approx(0.2));
    CHECK(response["advantages"][0].get<double>() == doctest::Approx(1.5));
    CHECK(response["advantages"][1].get<double>() == doctest::Approx(0.0));
    CHECK(response["advantages"][2].get<double>() == doctest::Approx(-1.5));
    double sum = 0.0;
    for (const auto& a : response["advantages"]) sum += a.get<double>();
    CHECK(sum == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("reward request validation codes") {
    const GlobalConfig config = GlobalConfig::defaults();
    RewardService service(config, nullptr, PromptTemplates::defaults());

    CHECK(testutil::error_code_of([&] {
              service.reward_response(ojson::parse(R"({"candidates": []})"));
          }) == "schema.invalid");

    ojson no_candidates = reward_request(config.io.aspects, {{4, 500}});
    no_candidates["candidates"] = ojson::array();
    CHECK(testutil::error_code_of([&] { service.reward_response(no_candidates); }) ==
          "schema.invalid");

    ojson bad_version = reward_request(config.io.aspects, {{4, 500}});
    bad_version["schema_version"] = 2;
    CHECK(testutil::error_code_of([&] { service.reward_response(bad_version); }) ==
          "schema.invalid");

    ojson out_of_range = reward_request(config.io.aspects, {{4, 500}});
    out_of_range["candidates"][0]["scores"]["coherence"] = 6;
    CHECK(testutil::error_code_of([&] { service.reward_response(out_of_range); }) ==
          "schema.out_of_range");

    ojson negative_length = reward_request(config.io.aspects, {{4, 500}});
    negative_length["candidates"][0]["length"] = -1;
    CHECK(testutil::error_code_of([&] { service.reward_response(negative_length); }) ==
          "schema.invalid");

    ojson mismatched = reward_request(config.io.aspects, {{4, 500}});
    mismatched["candidates"][0]["scores"].erase("coherence");
    CHECK(testutil::error_code_of([&] { service.reward_response(mismatched); }) ==
          "reward.aspect_mismatch");
}

TEST_CASE("the score endpoint returns both presentation legs") {
    GlobalConfig config = GlobalConfig::defaults();
    const PromptTemplates templates = PromptTemplates::defaults();
    MockBackend backend;

    const Story a = make_story("story_a", "", "first submitted text");
    const Story b = make_story("story_b", "", "second submitted text");
    const GenerationRequest ab_probe = build_eval_prompt(templates, a, b, "coherence");
    const GenerationRequest ba_probe = build_eval_prompt(templates, b, a, "coherence");
    backend.add_response(ab_probe.system_text, ab_probe.user_text,
                         "ab view.\nFINAL SCORES: Story A = 4, Story B = 2");
    backend.add_response(ba_probe.system_text, ba_probe.user_text,
                         "ba view.\nFINAL SCORES: Story A = 2, Story B = 4");

    RewardService service(config, &backend, templates);
    ojson request;
    request["story_a"] = "first submitted text";
    request["story_b"] = "second submitted text";
    request["aspect"] = "coherence";

    const ojson response = service.score_response(request);
    CHECK(response["schema_version"] == 1);
    CHECK(response["ab"]["score_a"] == 4);
    CHECK(response["ab"]["score_b"] == 2);
    CHECK(response["ab"]["order"] == "ab");
    // The ba leg is remapped to (a, b) identity before serialization.
    CHECK(response["ba"]["score_a"] == 4);
    CHECK(response["ba"]["score_b"] == 2);
    CHECK(response["ba"]["order"] == "ba");
}

TEST_CASE("score requests are validated before the backend is touched") {
    RewardService service(GlobalConfig::defaults(), nullptr, PromptTemplates::defaults());
    CHECK(testutil::error_code_of([&] {
              service.score_response(ojson::parse(R"({"story_a": "x", "story_b": "y"})"));
          }) == "schema.invalid");
    CHECK(testutil::error_code_of([&] {
              service.score_response(
                  ojson::parse(R"({"story_a": "", "story_b": "y", "aspect": "coherence"})"));
          }) == "schema.invalid");
    // Valid request shape but no backend behind the endpoint.
    CHECK(testutil::error_code_of([&] {
              service.score_response(
                  ojson::parse(R"({"story_a": "x", "story_b": "y", "aspect": "coherence"})"));
          }) == "backend.transport");
}

TEST_CASE("the service answers over real HTTP") {
    const GlobalConfig config = GlobalConfig::defaults();
    RewardService service(config, nullptr, PromptTemplates::defaults());
    const int port = service.start("127.0.0.1", 0);
    REQUIRE(port > 0);

    httplib::Client client("127.0.0.1", port);

    SUBCASE("health probe") {
        const auto res = client.Get("/healthz");
        REQUIRE(res);
        CHECK(res->status == 200);
        CHECK(res->body == "ok\n");
    }

    SUBCASE("reward round trip with identical repeat responses") {
        const std::string body = reward_request(config.io.aspects, {{4, 500}, {2, 500}}).dump();
        const auto first = client.Post("/v1/reward", body, "application/json");
        REQUIRE(first);
        CHECK(first->status == 200);
        const ojson parsed = ojson::parse(first->body);
        CHECK(parsed["rewards"][0].get<double>() == doctest::Approx(3.2));

        for (int i = 0; i < 5; ++i) {
            const auto repeat = client.Post("/v1/reward", body, "application/json");
            REQUIRE(repeat);
            CHECK(repeat->body == first->body);
        }
    }

    SUBCASE("schema violations map to 400 with a coded body") {
        const auto res = client.Post("/v1/reward", "{}", "application/json");
        REQUIRE(res);
        CHECK(res->status == 400);
        CHECK(ojson::parse(res->body)["error"]["code"] == "schema.invalid");

        const auto junk = client.Post("/v1/reward", "not json", "application/json");
        REQUIRE(junk);
        CHECK(junk->status == 400);
        CHECK(ojson::parse(junk->body)["error"]["code"] == "schema.invalid");

        ojson out_of_range = reward_request(config.io.aspects, {{4, 500}});
        out_of_range["candidates"][0]["scores"]["empathy"] = 9;
        const auto oob = client.Post("/v1/reward", out_of_range.dump(), "application/json");
        REQUIRE(oob);
        CHECK(oob->status == 400);
        CHECK(ojson::parse(oob->body)["error"]["code"] == "schema.out_of_range");
    }

    SUBCASE("score endpoint without a backend is 503 backend.unreachable") {
        const auto res = client.Post(
            "/v1/score", R"({"story_a": "x", "story_b": "y", "aspect": "coherence"})",
            "application/json");
        REQUIRE(res);
        CHECK(res->status == 503);
        CHECK(ojson::parse(res->body)["error"]["code"] == "backend.unreachable");
    }

    service.stop();
}

TEST_CASE("a scripted judge answers the score endpoint over HTTP") {
    const PromptTemplates templates = PromptTemplates::defaults();
    MockBackend backend;
    const Story a = make_story("story_a", "", "tale one");
    const Story b = make_story("story_b", "", "tale two");
    const GenerationRequest ab_probe = build_eval_prompt(templates, a, b, "empathy");
    const GenerationRequest ba_probe = build_eval_prompt(templates, b, a, "empathy");
    backend.add_response(ab_probe.system_text, ab_probe.user_text,
                         "warmth wins.\nFINAL SCORES: Story A = 5, Story B = 3");
    backend.add_response(ba_probe.system_text, ba_probe.user_text,
                         "warmth wins.\nFINAL SCORES: Story A = 3, Story B = 5");

    RewardService service(GlobalConfig::defaults(), &backend, templates);
    const int port = service.start("127.0.0.1", 0);
    httplib::Client client("127.0.0.1", port);

    ojson request;
    request["story_a"] = "tale one";
    request["story_b"] = "tale two";
    request["aspect"] = "empathy";
    const auto res = client.Post("/v1/score", request.dump(), "application/json");
    REQUIRE(res);
    CHECK(res->status == 200);
    const ojson parsed = ojson::parse(res->body);
    CHECK(parsed["ab"]["score_a"] == 5);
    CHECK(parsed["ba"]["score_a"] == 5);

    // A pair the judge has no basis for: internal judge trouble, not 503.
    ojson unknown = request;
    unknown["story_a"] = "never fixtured";
    const auto failed = client.Post("/v1/score", unknown.dump(), "application/json");
    REQUIRE(failed);
    CHECK(failed->status == 500);
    CHECK(ojson::parse(failed->body)["error"]["code"] == "backend.missing_fixture");

    service.stop();
}
