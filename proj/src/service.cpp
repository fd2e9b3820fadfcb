#include "evolvr/service.hpp"

#include <thread>
#include <utility>

#include <httplib.h>

#include "evolvr/errors.hpp"
#include "evolvr/harness.hpp"
#include "evolvr/reward.hpp"

namespace evolvr {
namespace {

[[noreturn]] void reject(const std::string& what) {
    fail("schema.invalid", what, ErrorKind::usage);
}

const ojson& member(const ojson& j, const char* key) {
    const auto it = j.find(key);
    if (it == j.end()) reject(std::string("missing field \"") + key + "\"");
    return *it;
}

int score_value(const ojson& j, const std::string& where) {
    if (!j.is_number_integer())
        reject(where + ": scores must be integers");
    const long long v = j.get<long long>();
    if (v < 1 || v > 5)
        fail("schema.out_of_range", where + ": score " + std::to_string(v) + " outside 1..5",
             ErrorKind::usage);
    return static_cast<int>(v);
}

ScoreVector parse_score_map(const ojson& j, const std::string& where) {
    if (!j.is_object() || j.empty()) reject(where + ": \"scores\" must be a non-empty object");
    ScoreVector scores;
    for (auto it = j.begin(); it != j.end(); ++it)
        scores.values[it.key()] = score_value(it.value(), where + "." + it.key());
    return scores;
}

std::string text_field(const ojson& j, const char* key) {
    const ojson& v = member(j, key);
    if (!v.is_string() || v.get<std::string>().empty())
        reject(std::string("\"") + key + "\" must be a non-empty string");
    return v.get<std::string>();
}

void check_schema_version(const ojson& j) {
    const auto it = j.find("schema_version");
    if (it == j.end()) return;
    if (!it->is_number_integer() || it->get<long long>() != 1)
        reject("unsupported schema_version");
}

ojson error_body(const std::string& code, const std::string& message) {
    ojson j;
    j["error"] = ojson{{"code", code}, {"message", message}};
    return j;
}

}  // namespace

struct RewardService::Impl {
    GlobalConfig config;
    Backend* backend = nullptr;
    PromptTemplates templates;
    httplib::Server server;
    std::thread runner;
    int port = 0;
};

RewardService::RewardService(GlobalConfig config, Backend* backend, PromptTemplates templates)
    : impl_(std::make_unique<Impl>()) {
    impl_->config = std::move(config);
    impl_->backend = backend;
    impl_->templates = std::move(templates);

    auto answer = [this](const httplib::Request& req, httplib::Response& res,
                         ojson (RewardService::*handler)(const ojson&) const) {
        ojson request;
        try {
            request = ojson::parse(req.body);
        } catch (const ojson::parse_error& e) {
            res.status = 400;
            res.set_content(error_body("schema.invalid", e.what()).dump() + "\n",
                            "application/json");
            return;
        }
        try {
            res.set_content((this->*handler)(request).dump() + "\n", "application/json");
        } catch (const Error& e) {
            if (e.code() == "backend.transport" || e.code() == "backend.rate_limited") {
                res.status = 503;
                res.set_content(error_body("backend.unreachable", e.what()).dump() + "\n",
                                "application/json");
            } else if (e.kind() == ErrorKind::usage) {
                res.status = 400;
                res.set_content(error_body(e.code(), e.what()).dump() + "\n", "application/json");
            } else {
                res.status = 500;
                res.set_content(error_body(e.code(), e.what()).dump() + "\n", "application/json");
            }
        } catch (const std::exception& e) {
            res.status = 500;
            res.set_content(error_body("internal", e.what()).dump() + "\n", "application/json");
        }
    };

    impl_->server.Post("/v1/reward", [this, answer](const httplib::Request& req,
                                                    httplib::Response& res) {
        answer(req, res, &RewardService::reward_response);
    });
    impl_->server.Post("/v1/score", [this, answer](const httplib::Request& req,
                                                   httplib::Response& res) {
        answer(req, res, &RewardService::score_response);
    });
    impl_->server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
        res.set_content("ok\n", "text/plain");
    });
}

RewardService::~RewardService() { stop(); }

int RewardService::start(const std::string& host, int port) {
    if (port == 0) {
        impl_->port = impl_->server.bind_to_any_port(host);
        if (impl_->port < 0) fail("service.bind", "cannot bind to " + host);
    } else {
        if (!impl_->server.bind_to_port(host, port))
            fail("service.bind", "cannot bind to " + host + ":" + std::to_string(port));
        impl_->port = port;
    }
    impl_->runner = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return impl_->port;
}

void RewardService::wait() {
    if (impl_->runner.joinable()) impl_->runner.join();
}

void RewardService::stop() {
    if (impl_->server.is_running()) impl_->server.stop();
    wait();
}

ojson RewardService::reward_response(const ojson& request) const {
    if (!request.is_object()) reject("request body must be a JSON object");
    check_schema_version(request);

    const ojson& reference_j = member(request, "reference");
    if (!reference_j.is_object()) reject("\"reference\" must be an object");
    const ScoreVector reference = parse_score_map(member(reference_j, "scores"), "reference");

    const ojson& candidates_j = member(request, "candidates");
    if (!candidates_j.is_array() || candidates_j.empty())
        reject("\"candidates\" must be a non-empty array");

    std::vector<double> rewards;
    rewards.reserve(candidates_j.size());
    std::size_t index = 0;
    for (const auto& candidate_j : candidates_j) {
        const std::string where = "candidates[" + std::to_string(index++) + "]";
        if (!candidate_j.is_object()) reject(where + " must be an object");
        const ScoreVector scores = parse_score_map(member(candidate_j, "scores"), where);
        const ojson& length_j = member(candidate_j, "length");
        if (!length_j.is_number_integer() || length_j.get<long long>() < 0)
            reject(where + ": \"length\" must be a non-negative integer");
        rewards.push_back(composite_reward(scores, reference,
                                           static_cast<int>(length_j.get<long long>()),
                                           impl_->config.reward));
    }

    ojson response;
    response["schema_version"] = 1;
    response["rewards"] = rewards;
    response["advantages"] = group_advantages(rewards);
    return response;
}

ojson RewardService::score_response(const ojson& request) const {
    if (!request.is_object()) reject("request body must be a JSON object");
    check_schema_version(request);

    const std::string story_a = text_field(request, "story_a");
    const std::string story_b = text_field(request, "story_b");
    const std::string aspect = text_field(request, "aspect");

    if (!impl_->backend)
        fail("backend.transport", "no judge backend configured for /v1/score");

    const Story a = make_story("story_a", "", story_a);
    const Story b = make_story("story_b", "", story_b);
    const auto [ab, ba] = judge_pair_debiased(a, b, aspect, *impl_->backend, impl_->templates);

    ojson response;
    response["schema_version"] = 1;
    response["ab"] = judgment_to_json(ab);
    response["ba"] = judgment_to_json(ba);
    return response;
}

}  // namespace evolvr
