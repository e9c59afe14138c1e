#include "paace/store.hpp"
#include "paace/supervision.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace paace {

using nlohmann::json;

namespace {

json plan_json(const Plan& p) {
    json steps = json::array();
    for (const auto& s : p.steps())
        steps.push_back({{"id", s.id},
                         {"instruction", s.instruction},
                         {"depends_on", std::vector<int>(s.depends_on.begin(), s.depends_on.end())},
                         {"kind", std::string(to_string(s.kind))}});
    return steps;
}

Plan plan_from(const json& j) {
    std::vector<TaskStep> steps;
    for (const auto& s : j) {
        TaskStep t;
        t.id = s.at("id").get<int>();
        t.instruction = s.at("instruction").get<std::string>();
        for (int d : s.at("depends_on").get<std::vector<int>>()) t.depends_on.insert(d);
        t.kind = step_kind_from_string(s.at("kind").get<std::string>());
        steps.push_back(std::move(t));
    }
    return Plan(std::move(steps));
}

json world_json(const WorldState& w) {
    json tables = json::object();
    for (const auto& [name, rows] : w.tables) {
        json arr = json::array();
        for (const auto& row : rows) arr.push_back(row);
        tables[name] = arr;
    }
    return {{"kv", w.kv}, {"documents", w.documents}, {"tables", tables}, {"files", w.files}};
}

WorldState world_from(const json& j) {
    WorldState w;
    w.kv = j.at("kv").get<std::map<std::string, std::string>>();
    w.documents = j.at("documents").get<std::map<std::string, std::string>>();
    w.files = j.at("files").get<std::map<std::string, std::string>>();
    for (const auto& [name, rows] : j.at("tables").items())
        for (const auto& row : rows) w.tables[name].push_back(row.get<TableRow>());
    return w;
}

json generated_json(const GeneratedWorkflow& g) {
    const auto& w = g.workflow;
    json wf = {{"id", w.id},
               {"initial_input", w.initial_input},
               {"system_prompt", w.system_prompt},
               {"plan", plan_json(w.plan)},
               {"final_requirement", w.final_requirement},
               {"seed", w.seed},
               {"gold_answer", w.gold_answer ? json(*w.gold_answer) : json(nullptr)}};
    return {{"schema_version", kStoreSchemaVersion}, {"workflow", wf}, {"world", world_json(g.world)}};
}

GeneratedWorkflow generated_from(const json& j) {
    GeneratedWorkflow g;
    const auto& wf = j.at("workflow");
    g.workflow.id = wf.at("id").get<std::string>();
    g.workflow.initial_input = wf.at("initial_input").get<std::string>();
    g.workflow.system_prompt = wf.at("system_prompt").get<std::string>();
    g.workflow.plan = plan_from(wf.at("plan"));
    g.workflow.final_requirement = wf.at("final_requirement").get<std::string>();
    g.workflow.seed = wf.at("seed").get<std::uint64_t>();
    if (!wf.at("gold_answer").is_null()) g.workflow.gold_answer = wf.at("gold_answer").get<std::string>();
    g.world = world_from(j.at("world"));
    return g;
}

json traj_json(const Trajectory& t) {
    json steps = json::array();
    for (const auto& s : t.per_step)
        steps.push_back({{"step", s.step},
                         {"context_tokens", s.context_tokens},
                         {"digest", s.digest},
                         {"agent_output", s.agent_output},
                         {"tool_results", s.tool_results},
                         {"missing_fact", s.missing_fact}});
    json recs = json::array();
    for (const auto& r : t.compression_records)
        recs.push_back({{"step", r.step},
                        {"k", r.k},
                        {"plan_slice", r.plan_slice},
                        {"original_tokens", r.original_tokens},
                        {"compressed_tokens", r.compressed_tokens},
                        {"ratio", r.ratio},
                        {"prompt_id", r.prompt_id},
                        {"context", r.context},
                        {"compressed", r.compressed}});
    return {{"workflow_id", t.workflow_id},
            {"mode", std::string(to_string(t.mode))},
            {"strategy", t.strategy},
            {"k", t.k},
            {"per_step", steps},
            {"final_answer", t.final_answer},
            {"compression_records", recs},
            {"truncated", t.truncated},
            {"fallback_used", t.fallback_used}};
}

Trajectory traj_from(const json& j) {
    Trajectory t;
    t.workflow_id = j.at("workflow_id").get<std::string>();
    t.mode = run_mode_from_string(j.at("mode").get<std::string>());
    t.strategy = j.at("strategy").get<std::string>();
    t.k = j.at("k").get<int>();
    for (const auto& s : j.at("per_step")) {
        StepRecord r;
        r.step = s.at("step").get<int>();
        r.context_tokens = s.at("context_tokens").get<std::size_t>();
        r.digest = s.at("digest").get<std::string>();
        r.agent_output = s.at("agent_output").get<std::string>();
        r.tool_results = s.at("tool_results").get<std::vector<std::string>>();
        r.missing_fact = s.at("missing_fact").get<bool>();
        t.per_step.push_back(std::move(r));
    }
    t.final_answer = j.at("final_answer").get<std::string>();
    for (const auto& c : j.at("compression_records")) {
        CompressionRecord r;
        r.step = c.at("step").get<int>();
        r.k = c.at("k").get<int>();
        r.plan_slice = c.at("plan_slice").get<std::string>();
        r.original_tokens = c.at("original_tokens").get<std::size_t>();
        r.compressed_tokens = c.at("compressed_tokens").get<std::size_t>();
        r.ratio = c.at("ratio").get<double>();
        r.prompt_id = c.at("prompt_id").get<std::string>();
        r.context = c.at("context").get<std::string>();
        r.compressed = c.at("compressed").get<std::string>();
        t.compression_records.push_back(std::move(r));
    }
    t.truncated = j.at("truncated").get<bool>();
    t.fallback_used = j.at("fallback_used").get<bool>();
    return t;
}

json label_json(const SuccessLabel& l) {
    std::vector<std::string> reasons;
    for (auto r : l.failure_reasons) reasons.emplace_back(to_string(r));
    return {{"success", l.success},
            {"equivalence_s", l.equivalence_s},
            {"judge", {{"label", std::string(to_string(l.judge.label))}, {"rationale", l.judge.rationale}}},
            {"per_step_ratios", l.per_step_ratios},
            {"failure_reasons", reasons}};
}

SuccessLabel label_from(const json& j) {
    SuccessLabel l;
    l.success = j.at("success").get<bool>();
    l.equivalence_s = j.at("equivalence_s").get<double>();
    l.judge.label = judge_label_from_string(j.at("judge").at("label").get<std::string>());
    l.judge.rationale = j.at("judge").at("rationale").get<std::string>();
    l.per_step_ratios = j.at("per_step_ratios").get<std::vector<double>>();
    for (const auto& r : j.at("failure_reasons")) l.failure_reasons.insert(failure_reason_from_string(r.get<std::string>()));
    return l;
}

template <typename F>
auto parse_or_data_error(const std::string& text, const std::string& where, F&& f) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(where + ": malformed JSON (" + e.what() + ")");
    }
    try {
        return f(j);
    } catch (const json::exception& e) {
        throw DataError(where + ": " + e.what());
    } catch (const ValidationError& e) {
        throw DataError(where + ": " + e.what());
    } catch (const std::invalid_argument& e) {
        throw DataError(where + ": " + e.what());
    }
}

void check_version(const json& j, const std::string& where) {
    if (!j.is_object() || !j.contains("schema_version") || !j["schema_version"].is_number_integer())
        throw DataError(where + ": missing schema_version");
    int v = j["schema_version"].get<int>();
    if (v != kStoreSchemaVersion)
        throw SchemaVersionError(where + ": schema_version " + std::to_string(v) + " is not supported (expected " +
                                 std::to_string(kStoreSchemaVersion) + ")");
}

/// Complete (newline-terminated) lines of a file.
std::vector<std::string> complete_lines(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string data = ss.str();
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        auto nl = data.find('\n', start);
        if (nl == std::string::npos) break;
        out.push_back(data.substr(start, nl - start));
        start = nl + 1;
    }
    return out;
}

}  // namespace

std::string workflow_to_json(const GeneratedWorkflow& g) { return generated_json(g).dump(); }

GeneratedWorkflow workflow_from_json(const std::string& text) {
    return parse_or_data_error(text, "workflow", [](const json& j) {
        check_version(j, "workflow");
        return generated_from(j);
    });
}

std::string trajectory_to_json(const Trajectory& t) { return traj_json(t).dump(); }

Trajectory trajectory_from_json(const std::string& text) {
    return parse_or_data_error(text, "trajectory", [](const json& j) { return traj_from(j); });
}

std::string label_to_json(const SuccessLabel& l) { return label_json(l).dump(); }

SuccessLabel label_from_json(const std::string& text) {
    return parse_or_data_error(text, "label", [](const json& j) { return label_from(j); });
}

void write_corpus(const std::vector<GeneratedWorkflow>& corpus, const std::string& path) {
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    if (!out) throw DataError("cannot write corpus " + path);
    for (const auto& g : corpus) out << workflow_to_json(g) << '\n';
    if (!out) throw DataError("write failed for corpus " + path);
}

std::vector<GeneratedWorkflow> read_corpus(const std::string& path) {
    std::vector<GeneratedWorkflow> out;
    std::size_t line_no = 0;
    for (const auto& line : complete_lines(path)) {
        ++line_no;
        if (line.empty()) continue;
        const std::string where = path + " line " + std::to_string(line_no);
        out.push_back(parse_or_data_error(line, where, [&](const json& j) {
            check_version(j, where);
            return generated_from(j);
        }));
    }
    return out;
}

std::string corpus_id_of(const std::string& path) { return "corpus-" + hex_digest(read_text_file(path)); }

std::string trajectory_record_line(const TrajectoryRecord& r) {
    json j = {{"schema_version", kStoreSchemaVersion},
              {"run_id", r.run_id},
              {"corpus_id", r.corpus_id},
              {"seed", r.seed},
              {"trajectory", traj_json(r.trajectory)}};
    return j.dump();
}

TrajectoryRecord trajectory_record_from_line(const std::string& line, std::size_t line_no) {
    const std::string where = "trajectory log line " + std::to_string(line_no);
    return parse_or_data_error(line, where, [&](const json& j) {
        check_version(j, where);
        TrajectoryRecord r;
        r.run_id = j.at("run_id").get<std::string>();
        r.corpus_id = j.at("corpus_id").get<std::string>();
        r.seed = j.at("seed").get<std::uint64_t>();
        r.trajectory = traj_from(j.at("trajectory"));
        return r;
    });
}

std::string label_record_line(const LabelRecord& r) {
    json j = {{"schema_version", kStoreSchemaVersion},
              {"run_id", r.run_id},
              {"workflow_id", r.workflow_id},
              {"strategy", r.strategy},
              {"label", label_json(r.label)}};
    return j.dump();
}

LabelRecord label_record_from_line(const std::string& line, std::size_t line_no) {
    const std::string where = "label log line " + std::to_string(line_no);
    return parse_or_data_error(line, where, [&](const json& j) {
        check_version(j, where);
        LabelRecord r;
        r.run_id = j.at("run_id").get<std::string>();
        r.workflow_id = j.at("workflow_id").get<std::string>();
        r.strategy = j.at("strategy").get<std::string>();
        r.label = label_from(j.at("label"));
        return r;
    });
}

std::vector<TrajectoryRecord> read_trajectory_log(const std::string& path) {
    std::vector<TrajectoryRecord> out;
    std::size_t line_no = 0;
    for (const auto& line : complete_lines(path)) {
        ++line_no;
        if (!line.empty()) out.push_back(trajectory_record_from_line(line, line_no));
    }
    return out;
}

std::vector<LabelRecord> read_label_log(const std::string& path) {
    std::vector<LabelRecord> out;
    std::size_t line_no = 0;
    for (const auto& line : complete_lines(path)) {
        ++line_no;
        if (!line.empty()) out.push_back(label_record_from_line(line, line_no));
    }
    return out;
}

void repair_log_tail(const std::string& path) {
    namespace fs = std::filesystem;
    if (!fs::exists(path)) return;
    const std::string data = read_text_file(path);
    if (data.empty() || data.back() == '\n') return;
    auto nl = data.rfind('\n');
    fs::resize_file(path, nl == std::string::npos ? 0 : nl + 1);
}

JsonlAppender::JsonlAppender(std::string path) : path_(std::move(path)) { repair_log_tail(path_); }

void JsonlAppender::append_line(const std::string& line) {
    std::lock_guard lock(mu_);
    std::ofstream out(path_, std::ios::app | std::ios::binary);
    if (!out) throw DataError("cannot append to " + path_);
    out << line << '\n';
    out.flush();
    if (!out) throw DataError("write failed for " + path_);
}

void RunDirectory::ensure() const {
    std::error_code ec;
    std::filesystem::create_directories(root, ec);
    if (ec) throw DataError("cannot create run directory " + root.string() + ": " + ec.message());
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    if (!out) throw DataError("cannot write " + path);
    out << text;
    if (!out) throw DataError("write failed for " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace paace
