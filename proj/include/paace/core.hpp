#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace paace {

/// Raised when a domain value violates its construction invariants.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Invalid or inconsistent configuration (CLI exit status 2).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or schema-incompatible stored data (CLI exit status 4).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Token accounting

using TokenCounter = std::function<std::size_t(std::string_view)>;

/// Whitespace-delimited word count. The default unit for |C_t| everywhere.
std::size_t word_count(std::string_view text);

/// Returns the process-wide default counter (word_count).
const TokenCounter& default_token_counter();

inline std::size_t token_count(std::string_view text) { return word_count(text); }

/// 64-bit FNV-1a. Used for digests and the mock embedder buckets.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex_digest(std::string_view bytes);

std::vector<std::string> split_lines(std::string_view text);
std::vector<std::string> split_words(std::string_view text);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

/// Lowercase, trim, collapse internal whitespace to single spaces.
std::string normalize_answer(std::string_view text);

// ---------------------------------------------------------------------------
// Plans and workflows

enum class StepKind { lookup, arithmetic, file_op, table_op, search, extract, aggregate, answer };

std::string_view to_string(StepKind kind);
StepKind step_kind_from_string(std::string_view name);

struct TaskStep {
    int id = 0;
    std::string instruction;
    std::set<int> depends_on;
    StepKind kind = StepKind::lookup;

    /// Name of the result this step binds, e.g. "r4".
    std::string result_name() const { return "r" + std::to_string(id); }

    bool operator==(const TaskStep&) const = default;
};

class Plan {
public:
    Plan() = default;
    /// Validates contiguous ids, non-empty instructions and backward-only edges.
    explicit Plan(std::vector<TaskStep> steps);

    const std::vector<TaskStep>& steps() const noexcept { return steps_; }
    std::size_t size() const noexcept { return steps_.size(); }
    const TaskStep& at(int id) const;  // 1-based

    /// Rendering of every step with its dependency edges.
    const std::string& description() const noexcept { return description_; }

    bool operator==(const Plan& other) const { return steps_ == other.steps_; }

private:
    std::vector<TaskStep> steps_;
    std::string description_;
};

/// One rendered plan line: "[id] instruction (after a,b)" with edges filtered to `visible`.
std::string render_step(const TaskStep& step, const std::set<int>* visible = nullptr);

struct Workflow {
    std::string id;
    std::string initial_input;
    std::string system_prompt;
    Plan plan;
    std::string final_requirement;
    std::uint64_t seed = 0;
    std::optional<std::string> gold_answer;

    bool operator==(const Workflow&) const = default;
};

// ---------------------------------------------------------------------------
// Context state

/// A history/observation/retrieval entry tagged with the step that produced it.
struct Entry {
    int step = 0;
    std::string text;

    bool operator==(const Entry&) const = default;
};

struct ContextState {
    std::string initial_input;
    std::string system_prompt;
    std::string plan_text;
    std::vector<Entry> history;
    std::vector<Entry> observations;
    std::vector<Entry> retrieved;
    std::vector<std::string> memory;
    int step = 1;

    bool operator==(const ContextState&) const = default;
};

/// C_1 = {I0, P, Pi}.
ContextState initial_context(const Workflow& w);

/// Fixed section order: system, plan, input, memory, history, observations,
/// retrieved. Empty sections are omitted; each present section starts with a
/// "## <name>" header line.
std::string render_context(const ContextState& c);

/// Inverse of render_context up to entry boundaries (entries become one per line,
/// step tags are lost).
ContextState parse_context(std::string_view rendered);

std::size_t context_tokens(const ContextState& c, const TokenCounter& counter = default_token_counter());

// ---------------------------------------------------------------------------
// Facts: lines of the form "name = value" (or "name=value").

struct Fact {
    std::string name;
    std::string value;
    std::string line;
};

std::optional<Fact> parse_fact_line(std::string_view line);

/// Last occurrence of every fact name in `text`, in order of that last occurrence.
std::vector<Fact> collect_facts(std::string_view text);

std::optional<std::string> find_fact(std::string_view text, std::string_view name);

/// Names referenced as "$name" in `text`.
std::vector<std::string> referenced_names(std::string_view text);

// ---------------------------------------------------------------------------
// Trajectories

enum class RunMode { full, compressed, baseline };

struct CompressionRecord {
    int step = 0;
    int k = 0;
    std::string plan_slice;
    std::size_t original_tokens = 0;
    std::size_t compressed_tokens = 0;
    double ratio = 0.0;
    std::string prompt_id;
    std::string context;     // rendered C_t
    std::string compressed;  // rendered C~_t (empty when the compressor failed)

    /// 0 < ratio < 1 and the compressed rendering is non-empty.
    bool valid() const;

    bool operator==(const CompressionRecord&) const = default;
};

CompressionRecord make_record(int step, int k, std::string plan_slice, std::string context,
                              std::string compressed, std::string prompt_id,
                              const TokenCounter& counter = default_token_counter());

struct StepRecord {
    int step = 0;
    std::size_t context_tokens = 0;
    std::string digest;
    std::string agent_output;
    std::vector<std::string> tool_results;
    bool missing_fact = false;

    bool operator==(const StepRecord&) const = default;
};

struct Trajectory {
    std::string workflow_id;
    RunMode mode = RunMode::full;
    std::string strategy = "none";  // "none", "paace-oracle", "fifo", ...
    int k = 0;
    std::vector<StepRecord> per_step;
    std::string final_answer;
    std::vector<CompressionRecord> compression_records;
    bool truncated = false;
    bool fallback_used = false;  // a degenerate compression forced an uncompressed step

    std::size_t missing_fact_count() const;

    bool operator==(const Trajectory&) const = default;
};

std::string_view to_string(RunMode mode);
RunMode run_mode_from_string(std::string_view name);

struct TrajectoryPair {
    Workflow workflow;
    Trajectory full;
    Trajectory compressed;
};

}  // namespace paace
