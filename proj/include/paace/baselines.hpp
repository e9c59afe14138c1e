#pragma once

#include "paace/backends.hpp"
#include "paace/executor.hpp"

#include <memory>
#include <optional>
#include <string>

namespace paace {

struct BaselineConfig {
    int fifo_turns = 2;
    int retrieval_top_m = 4;
    std::string prompting_instruction =
        "Summarize the interaction so far. Keep values that later steps may need.";
    double extractive_keep_fraction = 0.5;

    void validate() const;
    bool operator==(const BaselineConfig&) const = default;
};

/// Keeps P, the plan, I0 and memory, plus history/observation/retrieved entries
/// from the last `turns` distinct steps.
ContextState fifo_compress(const ContextState& c, int turns);

/// Ranks history, observation and retrieved entries by cosine to the query and
/// keeps the top m (ties: more recent first; zero vectors last). P, the plan,
/// I0 and memory are kept.
ContextState retrieval_compress(const ContextState& c, const std::string& query, Embedder& embedder, int top_m);

/// One completion call; history becomes the summary, observations and
/// retrieved entries are cleared. nullopt on backend failure or an empty reply.
std::optional<ContextState> prompting_compress(const ContextState& c, CompletionBackend& backend,
                                               const std::string& instruction);

/// Deletion-only stand-in for learned extractive compressors. Lines of I0,
/// memory, history, observations and retrieved are scored by the number of
/// distinct alphanumeric tokens shared with the slice; the top
/// ceil(fraction * lines) survive in original order (ties favour later lines).
ContextState extractive_compress(const ContextState& c, const std::string& slice, double keep_fraction);

/// Names accepted by --strategy.
const std::vector<std::string>& strategy_names();

/// Handle for a baseline strategy ("fifo", "retrieval", "prompting", "extractive").
CompressorHandle baseline_handle(const std::string& name, const BaselineConfig& cfg, const Backends& backends, int k);

/// Any strategy except "none": baselines plus paace-oracle, paace-teacher and paace-student.
CompressorHandle strategy_handle(const std::string& name, const BaselineConfig& cfg, const Backends& backends, int k,
                                 const std::string& teacher_prompt_id = "p0000",
                                 const std::string& teacher_prompt = "");

}  // namespace paace
