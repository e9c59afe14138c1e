#include "paace/executor.hpp"

#include <algorithm>

namespace paace {

std::string plan_slice(const Plan& plan, int t, int k) {
    const int n = static_cast<int>(plan.size());
    if (t < 1 || t > n) throw ValidationError("plan_slice: step " + std::to_string(t) + " out of range 1.." + std::to_string(n));
    if (k < 1) throw ValidationError("plan_slice: k must be >= 1");
    const int last = std::min(t + k - 1, n);
    std::set<int> visible;
    for (int i = t; i <= last; ++i) visible.insert(i);
    std::vector<std::string> lines;
    for (int i = t; i <= last; ++i) lines.push_back(render_step(plan.at(i), &visible));
    return join(lines, "\n");
}

ContextState update_context(const ContextState& c, const std::string& agent_output,
                            const std::vector<ToolResult>& tool_results, const std::vector<ToolResult>& retrieved) {
    ContextState next = c;
    if (!agent_output.empty()) next.history.push_back({c.step, agent_output});
    for (const auto& r : tool_results) next.observations.push_back({c.step, r.payload});
    for (const auto& r : retrieved) next.retrieved.push_back({c.step, r.payload});
    next.step = c.step + 1;
    return next;
}

// ---------------------------------------------------------------------------

std::optional<ContextState> OracleRuleCompressor::compress(const ContextState& c, const std::string& slice) {
    std::vector<std::string> names;
    for (const auto& line : split_lines(slice))
        for (auto& n : required_names(line)) names.push_back(std::move(n));
    ContextState out;
    out.system_prompt = c.system_prompt;
    out.plan_text = slice;
    out.step = c.step;
    for (const auto& f : collect_facts(render_context(c)))
        if (std::find(names.begin(), names.end(), f.name) != names.end()) out.memory.push_back(f.line);
    return out;
}

ContextState compressed_state(const ContextState& c, const std::string& slice, const std::string& reply) {
    ContextState out;
    out.system_prompt = c.system_prompt;
    out.plan_text = slice;
    out.step = c.step;
    out.memory = split_lines(reply);
    return out;
}

std::optional<ContextState> ModelCompressor::compress(const ContextState& c, const std::string& slice) {
    CompletionRequest req;
    if (prompt_) req.messages.push_back({"system", *prompt_});
    req.messages.push_back({"user", compression_input(slice, render_context(c))});
    auto reply = backend_->complete(req).text;
    if (word_count(reply) == 0) return std::nullopt;
    return compressed_state(c, slice, reply);
}

std::string_view to_string(CompressorKind kind) {
    switch (kind) {
        case CompressorKind::identity: return "identity";
        case CompressorKind::oracle_rule: return "oracle_rule";
        case CompressorKind::teacher: return "teacher";
        case CompressorKind::student: return "student";
        case CompressorKind::baseline: return "baseline";
    }
    return "identity";
}

void CompressorHandle::validate() const {
    if (k < 1) throw ValidationError("compressor k must be >= 1");
    if (!impl) throw ValidationError("compressor handle has no implementation");
    if (kind == CompressorKind::teacher && prompt_id.empty()) throw ValidationError("teacher handle needs a prompt_id");
}

CompressorHandle oracle_handle(int k) {
    return {CompressorKind::oracle_rule, k, "paace-oracle", "oracle_rule", std::make_shared<OracleRuleCompressor>()};
}

CompressorHandle identity_handle(int k) {
    return {CompressorKind::identity, k, "identity", "identity", std::make_shared<IdentityCompressor>()};
}

CompressorHandle teacher_handle(std::shared_ptr<CompletionBackend> backend, std::string prompt_id, std::string prompt,
                                int k) {
    return {CompressorKind::teacher, k, "paace-teacher", std::move(prompt_id),
            std::make_shared<ModelCompressor>(std::move(backend), std::move(prompt))};
}

CompressorHandle student_handle(std::shared_ptr<CompletionBackend> backend, int k) {
    return {CompressorKind::student, k, "paace-student", "student",
            std::make_shared<ModelCompressor>(std::move(backend), std::nullopt)};
}

void RunConfig::validate() const {
    if (k < 1) throw ValidationError("run: k must be >= 1");
    if (max_steps < 0) throw ValidationError("run: max_steps must be > 0 (or 0 for the default)");
    if (token_budget == 0) throw ValidationError("run: token_budget must be > 0");
}

// ---------------------------------------------------------------------------

namespace {

struct StepEffects {
    std::vector<ToolResult> observations;
    std::vector<ToolResult> retrieved;
};

StepEffects execute_calls(const std::string& output, const std::string& result_name, WorldState& world) {
    StepEffects fx;
    for (const auto& line : split_lines(output)) {
        auto call = parse_tool_call(line);
        if (!call) continue;
        ToolResult bound;
        if (!is_tool_kind(call->kind)) {
            bound.payload = result_name + " = UNSUPPORTED:" + call->kind;
        } else {
            auto outcome = apply_tool(world, *call);
            if (outcome.updated) world = std::move(*outcome.updated);
            bound.payload = result_name + " = " + outcome.result.payload;
        }
        bound.tokens = word_count(bound.payload);
        (call->kind == "search" ? fx.retrieved : fx.observations).push_back(std::move(bound));
    }
    return fx;
}

Trajectory run(const Workflow& w, const WorldState& world_in, CompletionBackend& agent, const CompressorHandle* comp,
               const RunConfig& cfg) {
    cfg.validate();
    if (comp) comp->validate();
    const int n = static_cast<int>(w.plan.size());
    const int max_steps = cfg.max_steps > 0 ? cfg.max_steps : 2 * n;
    const int k = comp ? comp->k : cfg.k;

    Trajectory traj;
    traj.workflow_id = w.id;
    if (comp) {
        traj.mode = comp->kind == CompressorKind::baseline ? RunMode::baseline : RunMode::compressed;
        traj.strategy = comp->name;
        traj.k = k;
    } else {
        traj.mode = RunMode::full;
        traj.strategy = "none";
    }

    WorldState world = world_in;
    ContextState c = initial_context(w);
    int executed = 0;
    for (int t = 1; t <= n; ++t) {
        if (executed >= max_steps) {
            traj.truncated = true;
            break;
        }
        const TaskStep& step = w.plan.at(t);
        ContextState acting = c;
        if (comp) {
            auto slice = plan_slice(w.plan, t, k);
            auto context_text = render_context(c);
            auto out = comp->impl->compress(c, slice);
            std::string compressed_text = out ? render_context(*out) : std::string();
            auto rec = make_record(t, k, slice, context_text, compressed_text, comp->prompt_id);
            if (compressed_text.empty() || word_count(compressed_text) == 0) {
                traj.fallback_used = true;
            } else {
                acting = std::move(*out);
                acting.step = t;
            }
            traj.compression_records.push_back(std::move(rec));
        }

        auto rendered = render_context(acting);
        StepRecord rec;
        rec.step = t;
        rec.context_tokens = word_count(rendered);
        rec.digest = hex_digest(rendered);
        if (rec.context_tokens > cfg.token_budget) {
            traj.truncated = true;
            break;
        }

        auto output = agent.complete(agent_request(rendered, step.instruction)).text;
        Instruction ins = parse_instruction(step.instruction);
        std::string result_name = ins.result.empty() ? step.result_name() : ins.result;
        auto fx = execute_calls(output, result_name, world);

        rec.agent_output = output;
        rec.missing_fact = output.find("MISSING_FACT:") != std::string::npos;
        for (const auto& r : fx.observations) rec.tool_results.push_back(r.payload);
        for (const auto& r : fx.retrieved) rec.tool_results.push_back(r.payload);
        traj.per_step.push_back(std::move(rec));
        ++executed;

        c = update_context(acting, output, fx.observations, fx.retrieved);
    }

    if (!traj.truncated) traj.final_answer = agent.complete(agent_request(render_context(c), w.final_requirement)).text;
    return traj;
}

}  // namespace

Trajectory run_full(const Workflow& w, const WorldState& world, CompletionBackend& agent, const RunConfig& cfg) {
    return run(w, world, agent, nullptr, cfg);
}

Trajectory run_compressed(const Workflow& w, const WorldState& world, CompletionBackend& agent,
                          const CompressorHandle& comp, const RunConfig& cfg) {
    return run(w, world, agent, &comp, cfg);
}

TrajectoryPair run_pair(const Workflow& w, const WorldState& world, CompletionBackend& agent,
                        const CompressorHandle& comp, const RunConfig& cfg) {
    TrajectoryPair p;
    p.workflow = w;
    p.full = run_full(w, world, agent, cfg);
    p.compressed = run_compressed(w, world, agent, comp, cfg);
    return p;
}

}  // namespace paace
