#pragma once

#include "paace/backends.hpp"

#include <condition_variable>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <string>

namespace paace {

/// Counting semaphore bounding in-flight requests. Admission only; callers
/// execute outside the lock.
class AdmissionLimiter {
public:
    explicit AdmissionLimiter(int slots);
    void acquire();
    void release();
    int in_flight() const;
    int peak_in_flight() const;

private:
    mutable std::mutex mu_;
    std::condition_variable cv_;
    int slots_;
    int used_ = 0;
    int peak_ = 0;
};

/// Appends one JSON object per request/response to a file, with the
/// Authorization header value replaced by "<redacted>".
class TraceLog {
public:
    explicit TraceLog(const std::string& path);
    void write(const std::string& direction, const std::string& url, const std::string& body, int status = 0);

private:
    std::mutex mu_;
    std::ofstream out_;
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
EnvLookup process_env();

/// Shared JSON-over-HTTP transport for the OpenAI-compatible endpoints.
class HttpClient {
public:
    /// Reads the bearer token from the environment variable named by
    /// cfg.api_key_env; throws ConfigError naming that variable when unset.
    HttpClient(BackendConfig cfg, const EnvLookup& env = process_env(), std::shared_ptr<TraceLog> trace = nullptr);

    /// POSTs `body` (JSON text) to endpoint + path and returns the response body.
    /// Connection failures, timeouts, 429 and 5xx are retried with exponential
    /// backoff; exhausting the budget throws TransportError. Other non-2xx
    /// statuses throw ProtocolError.
    std::string post_json(const std::string& path, const std::string& body);

    const BackendConfig& config() const noexcept { return cfg_; }
    AdmissionLimiter& limiter() noexcept { return limiter_; }
    int backoff_base_ms = 50;

private:
    BackendConfig cfg_;
    std::string scheme_host_port_;
    std::string base_path_;
    std::string token_;
    AdmissionLimiter limiter_;
    std::shared_ptr<TraceLog> trace_;
};

class HttpCompletionBackend final : public CompletionBackend {
public:
    explicit HttpCompletionBackend(std::shared_ptr<HttpClient> client) : client_(std::move(client)) {}
    CompletionResponse complete(const CompletionRequest& req) override;

private:
    std::shared_ptr<HttpClient> client_;
};

class HttpEmbedder final : public Embedder {
public:
    explicit HttpEmbedder(std::shared_ptr<HttpClient> client) : client_(std::move(client)) {}
    EmbeddingVector embed(std::string_view text) override;

private:
    std::shared_ptr<HttpClient> client_;
};

/// Mock handles for cfg.kind == "mock"; HTTP-backed agent, compressor, embedder,
/// LLM judge and LLM mutator otherwise.
Backends make_backends(const BackendConfig& cfg, const EnvLookup& env = process_env(),
                       std::shared_ptr<TraceLog> trace = nullptr);

}  // namespace paace
