#include "paace/http_backend.hpp"

#include <httplib.h>
#include <json.hpp>

#include <chrono>
#include <thread>

namespace paace {

using nlohmann::json;

AdmissionLimiter::AdmissionLimiter(int slots) : slots_(slots) {
    if (slots < 1) throw ConfigError("max_concurrency must be >= 1");
}

void AdmissionLimiter::acquire() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [this] { return used_ < slots_; });
    ++used_;
    peak_ = std::max(peak_, used_);
}

void AdmissionLimiter::release() {
    {
        std::lock_guard lock(mu_);
        --used_;
    }
    cv_.notify_one();
}

int AdmissionLimiter::in_flight() const {
    std::lock_guard lock(mu_);
    return used_;
}

int AdmissionLimiter::peak_in_flight() const {
    std::lock_guard lock(mu_);
    return peak_;
}

namespace {

struct Slot {
    AdmissionLimiter& l;
    explicit Slot(AdmissionLimiter& lim) : l(lim) { l.acquire(); }
    ~Slot() { l.release(); }
    Slot(const Slot&) = delete;
    Slot& operator=(const Slot&) = delete;
};

}  // namespace

TraceLog::TraceLog(const std::string& path) : out_(path, std::ios::app) {
    if (!out_) throw ConfigError("cannot open trace file " + path);
}

void TraceLog::write(const std::string& direction, const std::string& url, const std::string& body, int status) {
    json rec = {{"direction", direction},
                {"url", url},
                {"headers", {{"Authorization", "<redacted>"}, {"Content-Type", "application/json"}}},
                {"body", body}};
    if (status) rec["status"] = status;
    std::lock_guard lock(mu_);
    out_ << rec.dump() << '\n';
    out_.flush();
}

EnvLookup process_env() {
    return [](const std::string& name) -> std::optional<std::string> {
        const char* v = std::getenv(name.c_str());
        if (!v) return std::nullopt;
        return std::string(v);
    };
}

HttpClient::HttpClient(BackendConfig cfg, const EnvLookup& env, std::shared_ptr<TraceLog> trace)
    : cfg_(std::move(cfg)), limiter_(cfg_.max_concurrency), trace_(std::move(trace)) {
    cfg_.validate();
    if (!cfg_.api_key_env.empty()) {
        auto token = env(cfg_.api_key_env);
        if (!token) throw ConfigError("environment variable " + cfg_.api_key_env + " is not set (backend auth token)");
        token_ = *token;
    }

    const std::string& ep = cfg_.endpoint;
    if (ep.rfind("http://", 0) != 0)
        throw ConfigError("backend.endpoint must be an http:// URL (TLS is not compiled in): " + ep);
    auto slash = ep.find('/', 7);
    scheme_host_port_ = slash == std::string::npos ? ep : ep.substr(0, slash);
    base_path_ = slash == std::string::npos ? "" : ep.substr(slash);
    while (!base_path_.empty() && base_path_.back() == '/') base_path_.pop_back();
}

std::string HttpClient::post_json(const std::string& path, const std::string& body) {
    const std::string full_path = base_path_ + path;
    const std::string url = scheme_host_port_ + full_path;
    std::string last_error;
    for (int attempt = 0; attempt <= cfg_.retries; ++attempt) {
        if (attempt > 0) {
            auto delay = std::min(backoff_base_ms << std::min(attempt - 1, 6), 5000);
            std::this_thread::sleep_for(std::chrono::milliseconds(delay));
        }
        httplib::Result res{nullptr, httplib::Error::Unknown};
        {
            Slot slot(limiter_);
            httplib::Client cli(scheme_host_port_);
            auto timeout = std::chrono::milliseconds(cfg_.timeout_ms);
            cli.set_connection_timeout(timeout);
            cli.set_read_timeout(timeout);
            cli.set_write_timeout(timeout);
            httplib::Headers headers;
            if (!cfg_.api_key_env.empty()) headers.emplace("Authorization", "Bearer " + token_);
            if (trace_) trace_->write("request", url, body);
            res = cli.Post(full_path, headers, body, "application/json");
        }
        if (!res) {
            last_error = "request to " + url + " failed: " + httplib::to_string(res.error());
            continue;
        }
        if (trace_) trace_->write("response", url, res->body, res->status);
        if (res->status >= 200 && res->status < 300) return res->body;
        if (res->status == 429 || res->status >= 500) {
            last_error = "request to " + url + " returned HTTP " + std::to_string(res->status);
            continue;
        }
        throw ProtocolError("request to " + url + " returned HTTP " + std::to_string(res->status) + ": " +
                            res->body.substr(0, 200));
    }
    throw TransportError(last_error + " (after " + std::to_string(cfg_.retries + 1) + " attempts)");
}

CompletionResponse HttpCompletionBackend::complete(const CompletionRequest& req) {
    if (req.messages.empty()) throw ValidationError("completion request has no messages");
    json body = {{"model", client_->config().model},
                 {"temperature", req.temperature},
                 {"max_tokens", req.max_tokens},
                 {"messages", json::array()}};
    for (const auto& m : req.messages) body["messages"].push_back({{"role", m.role}, {"content", m.content}});
    auto raw = client_->post_json("/chat/completions", body.dump());
    try {
        auto j = json::parse(raw);
        CompletionResponse r;
        r.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
        if (j.contains("usage")) {
            const auto& u = j["usage"];
            r.prompt_tokens = u.value("prompt_tokens", std::size_t{0});
            r.completion_tokens = u.value("completion_tokens", std::size_t{0});
        }
        return r;
    } catch (const json::exception& e) {
        throw ProtocolError(std::string("malformed chat completion response: ") + e.what());
    }
}

EmbeddingVector HttpEmbedder::embed(std::string_view text) {
    json body = {{"model", client_->config().embedding_model}, {"input", std::string(text)}};
    auto raw = client_->post_json("/embeddings", body.dump());
    try {
        auto j = json::parse(raw);
        const auto& arr = j.at("data").at(0).at("embedding");
        Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
        for (std::size_t i = 0; i < arr.size(); ++i) v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
        if (v.size() == 0) throw ProtocolError("embedding response has an empty vector");
        return EmbeddingVector::from(std::move(v));
    } catch (const json::exception& e) {
        throw ProtocolError(std::string("malformed embedding response: ") + e.what());
    }
}

Backends make_backends(const BackendConfig& cfg, const EnvLookup& env, std::shared_ptr<TraceLog> trace) {
    cfg.validate();
    std::shared_ptr<CompletionBackend> student;
    if (!cfg.student_endpoint.empty()) {
        BackendConfig sc = cfg;
        sc.endpoint = cfg.student_endpoint;
        sc.model = cfg.student_model;
        student = std::make_shared<HttpCompletionBackend>(std::make_shared<HttpClient>(sc, env, trace));
    }
    if (cfg.kind == "mock") {
        auto b = Backends::mock();
        if (student) b.student = student;
        return b;
    }
    auto client = std::make_shared<HttpClient>(cfg, env, trace);
    auto judge_client = client;
    if (!cfg.judge_endpoint.empty() && cfg.judge_endpoint != cfg.endpoint) {
        BackendConfig jc = cfg;
        jc.endpoint = cfg.judge_endpoint;
        judge_client = std::make_shared<HttpClient>(jc, env, trace);
    }
    Backends b;
    b.agent = std::make_shared<HttpCompletionBackend>(client);
    b.compressor = b.agent;
    b.student = student ? student : b.compressor;
    b.embedder = std::make_shared<HttpEmbedder>(client);
    b.judge = std::make_shared<LlmJudge>(std::make_shared<HttpCompletionBackend>(judge_client));
    b.mutator = std::make_shared<LlmMutator>(b.agent);
    return b;
}

}  // namespace paace
