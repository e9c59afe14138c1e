#pragma once

#include "paace/backends.hpp"
#include "paace/baselines.hpp"
#include "paace/evolution.hpp"
#include "paace/http_backend.hpp"
#include "paace/scoring.hpp"
#include "paace/synth.hpp"

#include <json.hpp>

#include <string>
#include <utility>
#include <vector>

namespace paace {

struct CorpusSection {
    std::uint64_t seed = 0;
    int count = 200;
    GeneratorConfig generator;
};

struct RunSection {
    int k = 2;
    int max_steps = 0;
    std::size_t token_budget = 5'000'000;
    std::vector<std::string> strategies = {"none", "paace-oracle"};
    std::string teacher_prompt;  // empty: best_prompt.txt in the run dir, else evolution.seed_prompt
    std::string teacher_prompt_id = "p0000";
    int workers = 1;
};

struct ExtractSection {
    std::vector<std::string> strategies = {"paace-teacher"};
    bool dedup = true;
};

/// Everything a subcommand can be configured with. Evolution's generator,
/// thresholds and k come from the corpus, thresholds and run sections.
struct AppConfig {
    std::string run_id;  // empty: derived from the resolved config
    CorpusSection corpus;
    BackendConfig backend;
    Thresholds thresholds;
    RunSection run;
    BaselineConfig baselines;
    EvolutionConfig evolution;
    ExtractSection extract;
    bool trace = false;

    void validate() const;
    EvolutionConfig evolution_config() const;
    RunConfig run_config() const;
};

nlohmann::json config_to_json(const AppConfig& cfg);

/// Overlays `j` onto the defaults. Unknown keys and type mismatches throw
/// ConfigError naming the key path.
AppConfig config_from_json(const nlohmann::json& j);

/// Leaf key paths ("run.k", "corpus.generator.noise_level", ...).
std::vector<std::string> config_keys();

/// "run.k" -> "PAACE_RUN_K".
std::string env_var_for(const std::string& key_path);

/// Layers: defaults < file (if non-empty) < environment < overrides. Each
/// override is (key path, raw text). run_id is derived when still empty.
AppConfig load_config(const std::string& path, const EnvLookup& env,
                      const std::vector<std::pair<std::string, std::string>>& overrides);

/// Resolved config as pretty JSON (the run-directory snapshot).
std::string config_snapshot(const AppConfig& cfg);

/// Digest of the snapshot with run_id blanked.
std::string config_digest(const AppConfig& cfg);

}  // namespace paace
