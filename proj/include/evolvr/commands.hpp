#pragma once

#include <memory>
#include <string>
#include <vector>

#include "evolvr/backend.hpp"
#include "evolvr/config.hpp"
#include "evolvr/prompts.hpp"
#include "evolvr/synthesis.hpp"

namespace evolvr {

// Resolved collaborators for a run: the configured backend (mock fixtures or
// HTTP), prompt templates with any file overrides applied, and the persona
// registry.
std::unique_ptr<Backend> make_backend(const GlobalConfig& config);
PromptTemplates templates_for(const GlobalConfig& config);
std::vector<Persona> personas_for(const GlobalConfig& config);

// Deterministic run identifier derived from the command name and the config
// digest; no clocks, so reruns produce identical manifests.
std::string make_run_id(const std::string& command, const GlobalConfig& config);

// Commands throw Error on failure; the CLI maps ErrorKind to the exit code.
// Output convention: the primary artifact lands at out_path and companions
// append a suffix (out_path + ".manifest.json", ".attrition.json", ...).

void cmd_synthesize(const GlobalConfig& config, const std::string& dataset_path,
                    const std::string& out_path, int parallelism = 1);

void cmd_evolve(const GlobalConfig& config, const std::string& candidates_path,
                const std::string& out_path, int parallelism = 1);

// n_sweep empty means a single run at config.ensemble.n_pairs.
void cmd_evaluate(const GlobalConfig& config, const std::string& test_set_path,
                  const std::string& out_path, const std::vector<int>& n_sweep = {},
                  int parallelism = 1);

void cmd_agreement(const GlobalConfig& config, const std::string& annotations_path,
                   const std::string& out_path);

// Blocks until the service is stopped externally.  out_path may be empty, in
// which case the manifest goes to stdout before serving starts.
void cmd_serve(const GlobalConfig& config, const std::string& bind_addr,
               const std::string& out_path);

// Prints the effective config; with a nonempty out_path also writes it (plus a
// manifest) to disk.
void cmd_config(const GlobalConfig& config, const std::string& out_path);

}  // namespace evolvr
