#include "paace/backends.hpp"
#include "paace/synth.hpp"

#include <algorithm>
#include <cctype>
#include <iostream>

namespace paace {

namespace {

std::size_t message_tokens(const CompletionRequest& req) {
    std::size_t n = 0;
    for (const auto& m : req.messages) n += word_count(m.content);
    return n;
}

CompletionResponse respond(const CompletionRequest& req, std::string text) {
    CompletionResponse r;
    r.prompt_tokens = message_tokens(req);
    r.completion_tokens = word_count(text);
    r.text = std::move(text);
    return r;
}

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::string_view strip(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::string missing(const std::string& name) { return "MISSING_FACT:" + name; }

// Resolves "$name" against facts in the context; literals pass through.
std::optional<std::string> resolve(std::string_view context, const std::string& token, std::string& unresolved) {
    if (token.empty() || token.front() != '$') return token;
    auto name = token.substr(1);
    auto v = find_fact(context, name);
    if (!v) unresolved = name;
    return v;
}

}  // namespace

CompletionResponse FixedResponseBackend::complete(const CompletionRequest& req) { return respond(req, text_); }

// ---------------------------------------------------------------------------
// Scripted agent

CompletionRequest agent_request(std::string_view rendered_context, std::string_view task) {
    CompletionRequest req;
    req.messages.push_back({"system", std::string(rendered_context)});
    req.messages.push_back({"user", "TASK: " + std::string(task)});
    return req;
}

std::string ScriptedAgent::act(std::string_view context, std::string_view task) {
    Instruction ins;
    try {
        ins = parse_instruction(task);
    } catch (const ValidationError&) {
        return "UNKNOWN_TASK";
    }

    if (ins.verb == "report") {
        if (ins.operands.empty()) return "UNKNOWN_TASK";
        std::string name;
        auto v = resolve(context, ins.operands.front(), name);
        return v ? *v : missing(name);
    }

    // Bare read: "lookup a".
    if (ins.verb == "lookup" && ins.named.empty() && ins.operands.size() == 1) {
        std::string name = ins.operands.front();
        if (!name.empty() && name.front() == '$') name.erase(0, 1);
        auto v = find_fact(context, name);
        return v ? *v : missing(name);
    }

    std::string result = ins.result.empty() ? "result" : ins.result;
    std::string trace = "Thought: the current task is '" + std::string(strip(task)) + "'. I will produce " + result +
                        " with " + ins.verb;

    if (is_tool_kind(ins.verb)) {
        ToolCall call{ins.verb, {}};
        std::vector<std::string> used;
        for (const auto& [key, token] : ins.named) {
            std::string name;
            auto v = resolve(context, token, name);
            if (!v) return trace + "; input " + name + " is not in context.\n" + missing(name);
            if (token.front() == '$') used.push_back(token.substr(1));
            call.arguments[key] = *v;
        }
        if (!used.empty()) trace += " with " + join(used, ", ");
        return trace + ".\n" + format_tool_call(call);
    }

    if (is_compute_verb(ins.verb)) {
        std::vector<std::string> values;
        std::vector<std::string> absent;
        for (const auto& token : ins.operands) {
            std::string name;
            auto v = resolve(context, token, name);
            if (v) {
                values.push_back(*v);
                continue;
            }
            if (ins.op != "collect") return trace + "; input " + name + " is not in context.\n" + missing(name);
            absent.push_back(name);
            values.push_back("?");
        }
        auto value = evaluate_op(ins.op, values);
        if (!value) return trace + "; cannot evaluate " + ins.op + ".\nEVAL_ERROR";
        std::string out = trace + " " + ins.op + " over " + std::to_string(values.size()) + " inputs";
        for (const auto& a : absent) out += "; " + missing(a) + " recorded as ?";
        return out + ".\n" + result + " = " + *value;
    }

    return "UNKNOWN_TASK";
}

CompletionResponse ScriptedAgent::complete(const CompletionRequest& req) {
    if (req.messages.empty()) throw ValidationError("completion request has no messages");
    std::string context;
    std::string task;
    for (const auto& m : req.messages) {
        if (m.role == "system") {
            if (!context.empty()) context += '\n';
            context += m.content;
        } else if (m.role == "user") {
            task = m.content;
        }
    }
    std::string_view t = task;
    if (t.rfind("TASK: ", 0) == 0) t.remove_prefix(6);
    return respond(req, act(context, strip(t)));
}

// ---------------------------------------------------------------------------
// Directives and the mock compressor model

const std::vector<std::string>& directive_library() {
    static const std::vector<std::string> lib = {
        "Be concise.",
        "Keep recent reasoning traces verbatim.",
        "Remove log lines and timestamps.",
        "State which task each fact serves.",
        "Prefer numeric values over prose.",
        "Preserve identifiers used by upcoming tasks.",
        "Drop long retrieved documents.",
        "Use one fact per line.",
        "Do not paraphrase values.",
    };
    return lib;
}

const std::string& planted_directive() { return directive_library()[5]; }

std::string compression_input(std::string_view plan_slice, std::string_view context) {
    std::string out = "NEXT_TASKS:\n";
    out += plan_slice;
    out += "\nCONTEXT:\n";
    out += context;
    return out;
}

std::optional<CompressionInputParts> parse_compression_input(std::string_view text) {
    constexpr std::string_view head = "NEXT_TASKS:\n";
    constexpr std::string_view mid = "\nCONTEXT:\n";
    if (text.rfind(head, 0) != 0) return std::nullopt;
    auto pos = text.find(mid, head.size());
    if (pos == std::string_view::npos) return std::nullopt;
    CompressionInputParts parts;
    parts.plan_slice = std::string(text.substr(head.size(), pos - head.size()));
    parts.context = std::string(text.substr(pos + mid.size()));
    return parts;
}

namespace {

bool has_directive(std::string_view prompt, std::size_t index) {
    return prompt.find(directive_library()[index]) != std::string_view::npos;
}

int slice_task_id(std::string_view line) {
    if (line.size() < 3 || line.front() != '[') return 0;
    return std::atoi(std::string(line.substr(1)).c_str());
}

std::string teacher_compress(std::string_view prompt, bool student, const CompressionInputParts& in) {
    const bool whole_slice = student || has_directive(prompt, 5);
    const bool keep_trace = !student && has_directive(prompt, 1);
    const bool serves = !student && has_directive(prompt, 3);
    const bool drop_long = !student && has_directive(prompt, 6);

    auto lines = split_lines(in.plan_slice);
    std::vector<std::pair<std::string, int>> wanted;  // name, first task using it
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (i > 0 && !whole_slice) break;
        for (const auto& name : required_names(lines[i])) {
            bool seen = std::any_of(wanted.begin(), wanted.end(), [&](const auto& w) { return w.first == name; });
            if (!seen) wanted.emplace_back(name, slice_task_id(lines[i]));
        }
    }

    std::vector<std::string> out = {"Relevant state:"};
    for (const auto& f : collect_facts(in.context)) {
        auto it = std::find_if(wanted.begin(), wanted.end(), [&](const auto& w) { return w.first == f.name; });
        if (it == wanted.end()) continue;
        if (drop_long && word_count(f.value) > 12) continue;
        out.push_back(f.name + " = " + f.value);
        if (serves) out.push_back("(serves task " + std::to_string(it->second) + ")");
    }
    if (keep_trace) {
        auto ctx_lines = split_lines(in.context);
        for (auto it = ctx_lines.rbegin(); it != ctx_lines.rend(); ++it) {
            if (it->rfind("Thought:", 0) == 0) {
                out.push_back(*it);
                break;
            }
        }
    }
    return join(out, "\n");
}

std::string summarize(std::string_view context) {
    std::vector<std::string> out = {"Summary:"};
    for (const auto& f : collect_facts(context))
        if (word_count(f.value) <= 3) out.push_back(f.name + " = " + f.value);
    return join(out, "\n");
}

}  // namespace

CompletionResponse MockCompressorModel::complete(const CompletionRequest& req) {
    if (req.messages.empty()) throw ValidationError("completion request has no messages");
    std::string prompt;
    std::string user;
    bool has_system = false;
    for (const auto& m : req.messages) {
        if (m.role == "system") {
            has_system = true;
            prompt += m.content;
        } else if (m.role == "user") {
            user = m.content;
        }
    }
    std::string_view u = user;
    if (u.rfind("SUMMARIZE:", 0) == 0) {
        u.remove_prefix(10);
        return respond(req, summarize(u));
    }
    auto parts = parse_compression_input(user);
    if (!parts) return respond(req, "");
    return respond(req, teacher_compress(prompt, !has_system, *parts));
}

// ---------------------------------------------------------------------------
// Embedding

EmbeddingVector EmbeddingVector::from(Eigen::VectorXd v) {
    EmbeddingVector e;
    e.norm = v.norm();
    e.values = std::move(v);
    return e;
}

HashedBagOfWordsEmbedder::HashedBagOfWordsEmbedder(int dimension) : dimension_(dimension) {
    if (dimension < 1) throw ValidationError("embedder dimension must be >= 1");
}

std::size_t HashedBagOfWordsEmbedder::bucket(std::string_view token) const {
    return static_cast<std::size_t>(fnv1a64(lower(token)) % static_cast<std::uint64_t>(dimension_));
}

EmbeddingVector HashedBagOfWordsEmbedder::embed(std::string_view text) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(dimension_);
    for (const auto& w : split_words(text)) v[static_cast<Eigen::Index>(bucket(w))] += 1.0;
    double n = v.norm();
    if (n > 0.0) v /= n;
    return EmbeddingVector::from(std::move(v));
}

// ---------------------------------------------------------------------------
// Judges

std::string_view to_string(JudgeLabel label) {
    switch (label) {
        case JudgeLabel::better: return "better";
        case JudgeLabel::equal: return "equal";
        case JudgeLabel::worse: return "worse";
    }
    return "worse";
}

JudgeLabel judge_label_from_string(std::string_view s) {
    if (s == "better") return JudgeLabel::better;
    if (s == "equal") return JudgeLabel::equal;
    if (s == "worse") return JudgeLabel::worse;
    throw ValidationError("unknown judge label: " + std::string(s));
}

JudgeVerdict RuleJudge::judge(const JudgeInput& in) {
    auto full = normalize_answer(in.y_full);
    auto comp = normalize_answer(in.y_comp);
    if (full == comp) return {JudgeLabel::equal, "answers match"};
    if (in.gold) {
        auto gold = normalize_answer(*in.gold);
        if (comp == gold && full != gold) return {JudgeLabel::better, "compressed answer matches gold"};
        if (comp != gold && full == gold) return {JudgeLabel::worse, "compressed answer misses gold"};
    }
    return {JudgeLabel::equal, "no ground-truth separation"};
}

std::optional<JudgeLabel> LlmJudge::parse_label(std::string_view reply) {
    for (const auto& line : split_lines(reply)) {
        auto l = lower(strip(line));
        if (l.rfind("verdict:", 0) == 0) {
            auto words = split_words(std::string_view(l).substr(8));
            if (words.empty()) return std::nullopt;
            auto w = words.front();
            while (!w.empty() && std::ispunct(static_cast<unsigned char>(w.back()))) w.pop_back();
            if (w == "better" || w == "equal" || w == "worse") return judge_label_from_string(w);
            return std::nullopt;
        }
    }
    auto whole = lower(strip(reply));
    if (whole == "better" || whole == "equal" || whole == "worse") return judge_label_from_string(whole);
    return std::nullopt;
}

JudgeVerdict LlmJudge::judge(const JudgeInput& in) {
    CompletionRequest req;
    req.max_tokens = 256;
    req.messages.push_back(
        {"system",
         "Compare two answers to the same workflow. Reply with a line 'VERDICT: better|equal|worse' describing "
         "the compressed-context answer relative to the full-context answer, then one line of rationale."});
    req.messages.push_back({"user", "WORKFLOW:\n" + in.workflow_description + "\nFULL_ANSWER:\n" + in.y_full +
                                        "\nCOMPRESSED_ANSWER:\n" + in.y_comp});
    auto resp = backend_->complete(req);
    auto label = parse_label(resp.text);
    if (!label) {
        std::clog << "[paace] warning: unparseable judge verdict, counted as worse\n";
        return {JudgeLabel::worse, "unparseable verdict: " + resp.text};
    }
    return {*label, resp.text};
}

JudgeVerdict LenientJudge::judge(const JudgeInput& in) {
    auto v = inner_->judge(in);
    if (v.label != JudgeLabel::worse) return v;
    auto h = fnv1a64(in.workflow_description + '\x1f' + in.y_full + '\x1f' + in.y_comp);
    double u = static_cast<double>(h >> 11) * 0x1.0p-53;
    if (u < leniency_) return {JudgeLabel::equal, "lenient: " + v.rationale};
    return v;
}

// ---------------------------------------------------------------------------
// Mutators

std::size_t DirectiveMutator::start_index(std::uint64_t seed) {
    return static_cast<std::size_t>((splitmix64(seed) + 7) % directive_library().size());
}

std::vector<std::string> DirectiveMutator::propose(const std::string& parent, const std::string&, int n,
                                                   std::uint64_t seed) {
    if (n < 1) throw ValidationError("mutation count must be >= 1");
    const auto& lib = directive_library();
    const std::size_t L = lib.size();
    const std::size_t start = start_index(seed);
    std::vector<std::string> out;
    auto push = [&](std::string cand) {
        if (cand != parent && std::find(out.begin(), out.end(), cand) == out.end()) out.push_back(std::move(cand));
    };
    for (std::size_t j = 0; j < L && static_cast<int>(out.size()) < n; ++j) {
        std::size_t idx = (start + 4 * j) % L;
        if (!has_directive(parent, idx)) push(parent + "\n" + lib[idx]);
    }
    for (std::size_t j = 0; j < L && static_cast<int>(out.size()) < n; ++j) {
        std::size_t idx = (start + 4 * j) % L;
        auto pos = parent.find("\n" + lib[idx]);
        if (pos == std::string::npos) continue;
        std::string cand = parent;
        cand.erase(pos, lib[idx].size() + 1);
        if (!strip(cand).empty()) push(std::move(cand));
    }
    return out;
}

std::vector<std::string> LlmMutator::propose(const std::string& parent, const std::string& stats_summary, int n,
                                             std::uint64_t seed) {
    if (n < 1) throw ValidationError("mutation count must be >= 1");
    CompletionRequest req;
    req.temperature = 0.7;
    req.messages.push_back({"system",
                            "You improve instructions for a context compressor. Propose " + std::to_string(n) +
                                " revised prompts separated by lines containing only '---'."});
    req.messages.push_back({"user", "SEED: " + std::to_string(seed) + "\nSTATS:\n" + stats_summary +
                                        "\nPARENT PROMPT:\n" + parent});
    CompletionResponse resp;
    try {
        resp = backend_->complete(req);
    } catch (const TransportError& e) {
        std::clog << "[paace] warning: mutator transport failure: " << e.what() << '\n';
        return {};
    } catch (const ProtocolError& e) {
        std::clog << "[paace] warning: mutator protocol failure: " << e.what() << '\n';
        return {};
    }
    std::vector<std::string> out;
    std::vector<std::string> current;
    auto flush = [&] {
        auto cand = std::string(strip(join(current, "\n")));
        current.clear();
        if (!cand.empty() && cand != parent && std::find(out.begin(), out.end(), cand) == out.end() &&
            static_cast<int>(out.size()) < n)
            out.push_back(std::move(cand));
    };
    for (const auto& line : split_lines(resp.text)) {
        if (strip(line) == "---")
            flush();
        else
            current.push_back(line);
    }
    flush();
    return out;
}

// ---------------------------------------------------------------------------

void BackendConfig::validate() const {
    if (kind != "mock" && kind != "http") throw ConfigError("backend.kind must be 'mock' or 'http'");
    if (kind == "http" && endpoint.empty()) throw ConfigError("backend.endpoint is required for the http backend");
    if (timeout_ms <= 0) throw ConfigError("backend.timeout_ms must be > 0");
    if (retries < 0) throw ConfigError("backend.retries must be >= 0");
    if (max_concurrency < 1) throw ConfigError("backend.max_concurrency must be >= 1");
    if (!student_endpoint.empty() && student_model.empty()) throw ConfigError("backend.student_model is empty");
}

Backends Backends::mock() {
    Backends b;
    b.agent = std::make_shared<ScriptedAgent>();
    b.compressor = std::make_shared<MockCompressorModel>();
    b.student = b.compressor;
    b.embedder = std::make_shared<HashedBagOfWordsEmbedder>();
    b.judge = std::make_shared<RuleJudge>();
    b.mutator = std::make_shared<DirectiveMutator>();
    return b;
}

}  // namespace paace
