#pragma once

#include "paace/core.hpp"

#include <Eigen/Dense>

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace paace {

// ---------------------------------------------------------------------------
// Errors surfaced by model services. Callers distinguish the two.

class TransportError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ProtocolError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Completion

struct Message {
    std::string role;
    std::string content;

    bool operator==(const Message&) const = default;
};

struct CompletionRequest {
    std::vector<Message> messages;
    std::size_t max_tokens = 2048;
    double temperature = 0.0;
};

struct CompletionResponse {
    std::string text;
    std::size_t prompt_tokens = 0;
    std::size_t completion_tokens = 0;
};

class CompletionBackend {
public:
    virtual ~CompletionBackend() = default;
    virtual CompletionResponse complete(const CompletionRequest& req) = 0;
};

/// Returns the same text for every request. Used as a test stub.
class FixedResponseBackend final : public CompletionBackend {
public:
    explicit FixedResponseBackend(std::string text) : text_(std::move(text)) {}
    CompletionResponse complete(const CompletionRequest& req) override;

private:
    std::string text_;
};

/// Deterministic agent. Reads facts from the rendered context in the system
/// message(s) and executes the instruction following "TASK: " in the last user
/// message. Tool tasks produce a "CALL ..." line; computed tasks produce
/// "rN = value". A reference that cannot be resolved yields "MISSING_FACT:name".
class ScriptedAgent final : public CompletionBackend {
public:
    CompletionResponse complete(const CompletionRequest& req) override;

    /// Same logic without the message envelope.
    static std::string act(std::string_view context, std::string_view task);
};

/// Builds the agent request for one step: the rendered context as the system
/// message and "TASK: <instruction>" as the user message.
CompletionRequest agent_request(std::string_view rendered_context, std::string_view task);

// ---------------------------------------------------------------------------
// Teacher prompt directives

/// Fixed directive library used by the mock mutator and interpreted by the mock teacher.
const std::vector<std::string>& directive_library();

/// Library entry that makes the mock teacher condition on the whole plan slice.
const std::string& planted_directive();

/// Student/teacher input layout: "NEXT_TASKS:\n<slice>\nCONTEXT:\n<context>".
std::string compression_input(std::string_view plan_slice, std::string_view context);

struct CompressionInputParts {
    std::string plan_slice;
    std::string context;
};
std::optional<CompressionInputParts> parse_compression_input(std::string_view text);

/// Mock of the compression-capable model. Handles three request shapes:
///  - teacher: system message carries the prompt p, user message the compression input;
///  - student: no system message, user message the compression input;
///  - summarizer: user message starts with "SUMMARIZE:".
/// The teacher keeps the facts referenced by the first slice task only, unless p
/// contains the planted directive, in which case it keeps facts for the whole slice.
class MockCompressorModel final : public CompletionBackend {
public:
    CompletionResponse complete(const CompletionRequest& req) override;
};

// ---------------------------------------------------------------------------
// Embedding

struct EmbeddingVector {
    Eigen::VectorXd values;
    double norm = 0.0;

    static EmbeddingVector from(Eigen::VectorXd v);
};

class Embedder {
public:
    virtual ~Embedder() = default;
    virtual EmbeddingVector embed(std::string_view text) = 0;
};

/// Hashed bag of words: every whitespace token is hashed with 64-bit FNV-1a,
/// bucket = hash mod dimension, counts accumulate, and the vector is L2
/// normalised (the zero vector is left as is).
class HashedBagOfWordsEmbedder final : public Embedder {
public:
    explicit HashedBagOfWordsEmbedder(int dimension = 256);
    EmbeddingVector embed(std::string_view text) override;
    int dimension() const noexcept { return dimension_; }
    std::size_t bucket(std::string_view token) const;

private:
    int dimension_;
};

// ---------------------------------------------------------------------------
// Judging

enum class JudgeLabel { better, equal, worse };

std::string_view to_string(JudgeLabel label);
JudgeLabel judge_label_from_string(std::string_view s);

struct JudgeVerdict {
    JudgeLabel label = JudgeLabel::equal;
    std::string rationale;

    bool operator==(const JudgeVerdict&) const = default;
};

struct JudgeInput {
    std::string workflow_description;
    std::string y_full;
    std::string y_comp;
    std::optional<std::string> gold;  // available for synthetic workflows
};

class Judge {
public:
    virtual ~Judge() = default;
    virtual JudgeVerdict judge(const JudgeInput& in) = 0;
};

/// exact match -> equal; comp right and full wrong -> better; comp wrong and full
/// right -> worse; otherwise equal.
class RuleJudge final : public Judge {
public:
    JudgeVerdict judge(const JudgeInput& in) override;
};

/// Judge backed by a completion model. Unparseable replies count as worse.
class LlmJudge final : public Judge {
public:
    explicit LlmJudge(std::shared_ptr<CompletionBackend> backend) : backend_(std::move(backend)) {}
    JudgeVerdict judge(const JudgeInput& in) override;
    static std::optional<JudgeLabel> parse_label(std::string_view reply);

private:
    std::shared_ptr<CompletionBackend> backend_;
};

/// Wraps a judge and relabels a deterministic fraction of "worse" verdicts as
/// "equal" (selection keyed by a hash of the inputs). Models an evaluator that
/// sometimes favours a broken compression.
class LenientJudge final : public Judge {
public:
    LenientJudge(std::shared_ptr<Judge> inner, double leniency) : inner_(std::move(inner)), leniency_(leniency) {}
    JudgeVerdict judge(const JudgeInput& in) override;

private:
    std::shared_ptr<Judge> inner_;
    double leniency_;
};

// ---------------------------------------------------------------------------
// Prompt mutation

class PromptMutator {
public:
    virtual ~PromptMutator() = default;
    /// Up to n candidates, none equal to the parent. Empty on backend failure.
    virtual std::vector<std::string> propose(const std::string& parent, const std::string& stats_summary, int n,
                                             std::uint64_t seed) = 0;
};

/// Seeded edits from directive_library(). Candidate j appends library entry
/// (start + 4 j) mod L, where start = (splitmix64(seed) + 7) mod L, skipping
/// directives the parent already contains. When every directive is present the
/// edit removes one instead.
class DirectiveMutator final : public PromptMutator {
public:
    std::vector<std::string> propose(const std::string& parent, const std::string& stats_summary, int n,
                                     std::uint64_t seed) override;
    static std::size_t start_index(std::uint64_t seed);
};

class LlmMutator final : public PromptMutator {
public:
    explicit LlmMutator(std::shared_ptr<CompletionBackend> backend) : backend_(std::move(backend)) {}
    std::vector<std::string> propose(const std::string& parent, const std::string& stats_summary, int n,
                                     std::uint64_t seed) override;

private:
    std::shared_ptr<CompletionBackend> backend_;
};

// ---------------------------------------------------------------------------

struct BackendConfig {
    std::string kind = "mock";  // "mock" or "http"
    std::string endpoint = "http://127.0.0.1:8000/v1";
    std::string model = "gpt-oss-120b";
    std::string embedding_model = "text-embedding";
    std::string judge_endpoint;  // empty: same as endpoint
    std::string api_key_env = "PAACE_API_KEY";  // empty: no Authorization header
    /// Student compressor server; when set it is used even with kind "mock".
    std::string student_endpoint;
    std::string student_model = "paace-student";
    int timeout_ms = 30000;
    int retries = 2;
    int max_concurrency = 4;

    void validate() const;
    bool operator==(const BackendConfig&) const = default;
};

/// Handles for one run. Mock handles are stateless and safe to share.
struct Backends {
    std::shared_ptr<CompletionBackend> agent;
    std::shared_ptr<CompletionBackend> compressor;  // teacher / summarizer
    std::shared_ptr<CompletionBackend> student;
    std::shared_ptr<Embedder> embedder;
    std::shared_ptr<Judge> judge;
    std::shared_ptr<PromptMutator> mutator;

    static Backends mock();
};

}  // namespace paace
