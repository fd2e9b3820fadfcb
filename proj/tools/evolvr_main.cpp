#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "evolvr/commands.hpp"
#include "evolvr/config.hpp"
#include "evolvr/errors.hpp"
#include "evolvr/jsonl.hpp"

namespace {

void print_error(const std::string& code, const std::string& message) {
    evolvr::ojson j;
    j["error"] = evolvr::ojson{{"code", code}, {"message", message}};
    std::cerr << j.dump() << '\n';
}

int exit_code(evolvr::ErrorKind kind) { return kind == evolvr::ErrorKind::usage ? 2 : 3; }

std::string resolve(const std::string& flag_value, const std::string& config_value,
                    const char* what) {
    if (!flag_value.empty()) return flag_value;
    if (!config_value.empty()) return config_value;
    evolvr::fail("config.invalid", std::string("no ") + what + " path given",
                 evolvr::ErrorKind::usage);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Score-aligned rationale synthesis, evolutionary filtering, pairwise "
                 "evaluation, and a reward service for RL training loops"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::uint64_t seed_flag = 0;
    int jobs = 4;
    app.add_option("--config", config_path, "Path to a JSON config file");
    CLI::Option* seed_opt =
        app.add_option("--seed", seed_flag, "Override the configured master seed");
    app.add_option("--jobs", jobs, "Worker threads for parallel stages")->check(CLI::Range(1, 256));

    auto* synthesize = app.add_subcommand("synthesize", "Sample story pairs and generate "
                                                        "score-aligned rationale candidates");
    std::string dataset_flag, synth_out;
    synthesize->add_option("--dataset", dataset_flag, "Scored-story JSONL (default: io.dataset)");
    synthesize->add_option("--out", synth_out, "Candidates JSONL to write")->required();

    auto* evolve = app.add_subcommand("evolve", "Run the four-operator filter pipeline over "
                                                "synthesized candidates");
    std::string candidates_path, evolve_out;
    evolve->add_option("--candidates", candidates_path, "Candidates JSONL from synthesize")
        ->required();
    evolve->add_option("--out", evolve_out, "Survivors JSONL to write")->required();

    auto* evaluate = app.add_subcommand("evaluate", "Score a test set with the ensemble judge "
                                                    "and report correlation metrics");
    std::string test_set_flag, eval_out;
    std::vector<int> ensemble_sizes;
    evaluate->add_option("--test-set", test_set_flag, "Scored-story JSONL (default: io.dataset)");
    evaluate->add_option("--out", eval_out, "Predictions JSONL to write")->required();
    evaluate->add_option("--ensemble-sizes", ensemble_sizes,
                         "Sweep of partner counts (default: ensemble.n_pairs)");

    auto* agreement = app.add_subcommand("agreement", "Compare pointwise and pairwise "
                                                      "inter-annotator agreement");
    std::string annotations_path, agreement_out;
    agreement->add_option("--annotations", annotations_path, "Annotation JSONL")->required();
    agreement->add_option("--out", agreement_out, "Agreement report JSON to write")->required();

    auto* serve = app.add_subcommand("serve", "Serve the reward and pairwise-score HTTP API");
    std::string bind_addr = "127.0.0.1:8080";
    std::string serve_out;
    serve->add_option("--bind", bind_addr, "host:port to listen on");
    serve->add_option("--out", serve_out, "Manifest path (default: print to stdout)");

    auto* config_cmd = app.add_subcommand("config", "Print the effective configuration");
    std::string config_out;
    config_cmd->add_option("--out", config_out, "Also write the config JSON here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        print_error("cli.usage", e.what());
        return 2;
    }

    try {
        evolvr::GlobalConfig config = config_path.empty() ? evolvr::GlobalConfig::defaults()
                                                          : evolvr::load_config(config_path);
        if (seed_opt->count() > 0) config.override_seed(seed_flag);

        if (app.got_subcommand(synthesize)) {
            evolvr::cmd_synthesize(config, resolve(dataset_flag, config.io.dataset, "dataset"),
                                   synth_out, jobs);
        } else if (app.got_subcommand(evolve)) {
            evolvr::cmd_evolve(config, candidates_path, evolve_out, jobs);
        } else if (app.got_subcommand(evaluate)) {
            evolvr::cmd_evaluate(config, resolve(test_set_flag, config.io.dataset, "test set"),
                                 eval_out, ensemble_sizes, jobs);
        } else if (app.got_subcommand(agreement)) {
            evolvr::cmd_agreement(config, annotations_path, agreement_out);
        } else if (app.got_subcommand(serve)) {
            evolvr::cmd_serve(config, bind_addr, serve_out);
        } else if (app.got_subcommand(config_cmd)) {
            evolvr::cmd_config(config, config_out);
        }
        return 0;
    } catch (const evolvr::Error& e) {
        print_error(e.code(), e.what());
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        print_error("internal", e.what());
        return 3;
    }
}
