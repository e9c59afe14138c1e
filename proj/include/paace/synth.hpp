#pragma once

#include "paace/core.hpp"

#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace paace {

/// Small deterministic RNG wrapper; only uses raw mt19937_64 output so streams are
/// identical across standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }
    /// Uniform integer in [lo, hi].
    long long uniform(long long lo, long long hi);
    /// Uniform real in [0, 1).
    double unit();
    bool chance(double p) { return unit() < p; }

    template <typename T>
    const T& pick(const std::vector<T>& items) {
        return items.at(static_cast<std::size_t>(uniform(0, static_cast<long long>(items.size()) - 1)));
    }

    /// Index drawn proportionally to nonnegative weights (sum must be > 0).
    std::size_t weighted(const std::vector<double>& weights);

private:
    std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

// ---------------------------------------------------------------------------
// Simulated tool world

using TableRow = std::map<std::string, long long>;

struct WorldState {
    std::map<std::string, std::string> kv;
    std::map<std::string, std::string> documents;
    std::map<std::string, std::vector<TableRow>> tables;
    std::map<std::string, std::string> files;

    bool operator==(const WorldState&) const = default;
};

struct ToolCall {
    std::string kind;
    std::map<std::string, std::string> arguments;

    bool operator==(const ToolCall&) const = default;
};

struct ToolResult {
    std::string payload;
    std::size_t tokens = 0;

    bool operator==(const ToolResult&) const = default;
};

struct ToolOutcome {
    ToolResult result;
    /// Present only for write_file.
    std::optional<WorldState> updated;
};

const std::vector<std::string>& supported_tool_kinds();
bool is_tool_kind(std::string_view kind);

/// Throws ValidationError for unsupported kinds. Missing resources produce a
/// "NOT_FOUND:<id>" payload instead of an error.
ToolOutcome apply_tool(const WorldState& world, const ToolCall& call);

/// "CALL kind a=1 b=\"two words\"".
std::string format_tool_call(const ToolCall& call);
std::optional<ToolCall> parse_tool_call(std::string_view line);

// ---------------------------------------------------------------------------
// Instruction grammar shared by the generator, oracle and scripted agent.
//
//   lookup key=k7 -> r3                 tool step (verb is a tool kind)
//   compute add $r2 7 -> r3             agent-side arithmetic (add, sub)
//   aggregate collect $r1 $r2 -> r3     sum, max, min, collect
//   answer sum $r4 $r5 -> r6
//   report $r6                          final requirement
//   lookup a                            bare context read
//
// "$name" operands are resolved against facts visible in the context.

struct Instruction {
    std::string verb;
    std::string op;
    std::vector<std::string> operands;
    std::map<std::string, std::string> named;
    std::string result;
};

Instruction parse_instruction(std::string_view text);

bool is_compute_verb(std::string_view verb);

/// Instruction text of a rendered plan line: "[3] lookup a (after 1)" -> "lookup a".
std::string_view instruction_of(std::string_view plan_line);

/// Fact names a plan line reads: "$name" references plus the operand of a bare
/// context read ("lookup a").
std::vector<std::string> required_names(std::string_view plan_line);

/// Evaluates add/sub/sum/max/min/collect over resolved operand values.
/// Returns nullopt when a numeric operand does not parse.
std::optional<std::string> evaluate_op(std::string_view op, const std::vector<std::string>& values);

/// Value of `field:` inside an extracted text, or nullopt.
std::optional<std::string> extract_field(std::string_view text, std::string_view field);

// ---------------------------------------------------------------------------
// Generator

struct GeneratorConfig {
    int min_steps = 5;
    int max_steps = 30;
    double noise_level = 0.5;
    int distractor_count = 6;
    /// Weights over lookup, arithmetic, file_op, table_op, search, extract, aggregate.
    std::map<StepKind, double> domain_mix = {
        {StepKind::lookup, 1.0},  {StepKind::arithmetic, 1.0}, {StepKind::file_op, 1.0},
        {StepKind::table_op, 1.0}, {StepKind::search, 1.0},    {StepKind::extract, 1.0},
        {StepKind::aggregate, 1.0},
    };
    /// Upper bound on how many steps after acquisition a fact may be consumed.
    int max_gap = 2;
    /// When > 0, every consumed fact is consumed exactly this many steps after
    /// acquisition (adversarial next-k corpus).
    int exact_gap = 0;

    void validate() const;
    bool operator==(const GeneratorConfig&) const = default;
};

struct GeneratedWorkflow {
    Workflow workflow;
    WorldState world;
};

extern const std::string kDefaultSystemPrompt;

GeneratedWorkflow generate_workflow(std::uint64_t seed, const GeneratorConfig& cfg = {});

/// Symbolic execution of the plan against the world (no agent, no context).
std::string oracle_answer(const Workflow& w, const WorldState& world);

/// Names of the distractor facts injected into I0 (never referenced by any step).
std::vector<std::string> distractor_names(const Workflow& w);

}  // namespace paace
