#pragma once

#include "paace/backends.hpp"
#include "paace/core.hpp"
#include "paace/synth.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace paace {

/// Tasks t..min(t+k-1, n), one rendered step per line, with edges restricted to
/// the slice.
std::string plan_slice(const Plan& plan, int t, int k);

/// Appends the agent output to history, tool payloads to observations and
/// retrieval payloads to retrieved (in that order), then advances the step.
ContextState update_context(const ContextState& c, const std::string& agent_output,
                            const std::vector<ToolResult>& tool_results,
                            const std::vector<ToolResult>& retrieved = {});

// ---------------------------------------------------------------------------
// Compressors

class Compressor {
public:
    virtual ~Compressor() = default;
    /// C~_t from C_t and the plan slice. nullopt signals a failed compression.
    virtual std::optional<ContextState> compress(const ContextState& c, const std::string& slice) = 0;
};

/// Keeps the facts whose names the slice references (from any section), the
/// system prompt and the slice itself. Everything else is dropped.
class OracleRuleCompressor final : public Compressor {
public:
    std::optional<ContextState> compress(const ContextState& c, const std::string& slice) override;
};

/// Returns C_t unchanged.
class IdentityCompressor final : public Compressor {
public:
    std::optional<ContextState> compress(const ContextState& c, const std::string&) override { return c; }
};

/// Model-backed compressor. With a prompt, the prompt is the system message
/// (teacher); without one only the compression input is sent (student).
/// The reply becomes the memory of C~_t next to P and the slice.
class ModelCompressor final : public Compressor {
public:
    ModelCompressor(std::shared_ptr<CompletionBackend> backend, std::optional<std::string> prompt)
        : backend_(std::move(backend)), prompt_(std::move(prompt)) {}
    std::optional<ContextState> compress(const ContextState& c, const std::string& slice) override;

private:
    std::shared_ptr<CompletionBackend> backend_;
    std::optional<std::string> prompt_;
};

/// Packs the compressed state the way model compressors do: P, the slice as
/// the plan section, and the reply lines as memory.
ContextState compressed_state(const ContextState& c, const std::string& slice, const std::string& reply);

enum class CompressorKind { identity, oracle_rule, teacher, student, baseline };

std::string_view to_string(CompressorKind kind);

struct CompressorHandle {
    CompressorKind kind = CompressorKind::oracle_rule;
    int k = 2;
    std::string name;       // strategy label written to trajectories
    std::string prompt_id;  // teacher prompt id, or the strategy label
    std::shared_ptr<Compressor> impl;

    void validate() const;
};

CompressorHandle oracle_handle(int k);
CompressorHandle identity_handle(int k);
CompressorHandle teacher_handle(std::shared_ptr<CompletionBackend> backend, std::string prompt_id, std::string prompt,
                                int k);
CompressorHandle student_handle(std::shared_ptr<CompletionBackend> backend, int k);

// ---------------------------------------------------------------------------

struct RunConfig {
    int k = 2;
    int max_steps = 0;                  // 0: twice the plan length
    std::size_t token_budget = 5'000'000;  // per-step |C_t| ceiling
    std::uint64_t seed = 0;

    void validate() const;
};

/// C_1 = {I0, P, Pi}; C_{t+1} = Update(C_t, Agent(C_t, tau_t)). The final answer
/// is requested from C_{n+1}.
Trajectory run_full(const Workflow& w, const WorldState& world, CompletionBackend& agent,
                    const RunConfig& cfg = {});

/// C~_t = comp(C_t, slice); the agent acts on C~_t and C_{t+1} is built from it.
Trajectory run_compressed(const Workflow& w, const WorldState& world, CompletionBackend& agent,
                          const CompressorHandle& comp, const RunConfig& cfg = {});

TrajectoryPair run_pair(const Workflow& w, const WorldState& world, CompletionBackend& agent,
                        const CompressorHandle& comp, const RunConfig& cfg = {});

}  // namespace paace
