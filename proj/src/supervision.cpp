#include "paace/supervision.hpp"
#include "paace/backends.hpp"
#include "paace/synth.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>
#include <unordered_map>

namespace paace {

using nlohmann::json;

std::vector<SupervisionTuple> extract_tuples(const TrajectoryPair& pair, const SuccessLabel& label,
                                             const std::string& run_id) {
    std::vector<SupervisionTuple> out;
    if (!label.success || pair.compressed.truncated || pair.compressed.fallback_used) return out;
    for (const auto& r : pair.compressed.compression_records) {
        if (!r.valid()) continue;
        SupervisionTuple t;
        t.workflow_id = pair.workflow.id;
        t.step = r.step;
        t.k = r.k;
        t.plan_slice = r.plan_slice;
        t.context = r.context;
        t.target = r.compressed;
        t.ratio = r.ratio;
        t.equivalence_s = label.equivalence_s;
        t.prompt_id = r.prompt_id;
        t.run_id = run_id;
        out.push_back(std::move(t));
    }
    return out;
}

std::string student_input(const SupervisionTuple& t) { return compression_input(t.plan_slice, t.context); }

std::vector<SupervisionTuple> dedup_tuples(const std::vector<SupervisionTuple>& tuples) {
    std::vector<SupervisionTuple> out;
    std::map<std::tuple<std::string, std::string, std::string>, std::size_t> index;
    for (const auto& t : tuples) {
        auto key = std::make_tuple(t.plan_slice, t.context, t.target);
        auto it = index.find(key);
        if (it == index.end()) {
            index.emplace(std::move(key), out.size());
            out.push_back(t);
        } else if (t.equivalence_s > out[it->second].equivalence_s) {
            out[it->second] = t;
        }
    }
    return out;
}

DatasetManifest summarize_tuples(const std::vector<SupervisionTuple>& tuples) {
    DatasetManifest m;
    m.tuple_count = tuples.size();
    std::set<std::string> runs;
    double rs = 0.0;
    double ss = 0.0;
    for (const auto& t : tuples) {
        rs += t.ratio;
        ss += t.equivalence_s;
        ++m.k_distribution[t.k];
        if (!t.run_id.empty()) runs.insert(t.run_id);
    }
    if (!tuples.empty()) {
        m.mean_ratio = rs / static_cast<double>(tuples.size());
        m.mean_equivalence = ss / static_cast<double>(tuples.size());
    }
    m.source_run_ids.assign(runs.begin(), runs.end());
    return m;
}

std::string manifest_path_for(const std::string& dataset_path) {
    std::string stem = dataset_path;
    if (stem.size() > 6 && stem.compare(stem.size() - 6, 6, ".jsonl") == 0) stem.resize(stem.size() - 6);
    return stem + ".manifest.json";
}

std::string tuple_to_json_line(const SupervisionTuple& t) {
    json j = {{"schema_version", kDatasetSchemaVersion},
              {"run_id", t.run_id},
              {"workflow_id", t.workflow_id},
              {"step", t.step},
              {"k", t.k},
              {"plan_slice", t.plan_slice},
              {"context", t.context},
              {"target", t.target},
              {"ratio", t.ratio},
              {"equivalence_s", t.equivalence_s},
              {"prompt_id", t.prompt_id}};
    return j.dump();
}

SupervisionTuple tuple_from_json_line(const std::string& line, std::size_t line_no) {
    const std::string where = "dataset line " + std::to_string(line_no);
    json j;
    try {
        j = json::parse(line);
    } catch (const json::exception& e) {
        throw DataError(where + ": malformed JSON (" + e.what() + ")");
    }
    if (!j.is_object()) throw DataError(where + ": expected a JSON object");
    if (!j.contains("schema_version") || !j["schema_version"].is_number_integer())
        throw DataError(where + ": missing schema_version");
    int v = j["schema_version"].get<int>();
    if (v != kDatasetSchemaVersion)
        throw SchemaVersionError(where + ": schema_version " + std::to_string(v) + " is not supported (expected " +
                                 std::to_string(kDatasetSchemaVersion) + ")");
    try {
        SupervisionTuple t;
        t.run_id = j.at("run_id").get<std::string>();
        t.workflow_id = j.at("workflow_id").get<std::string>();
        t.step = j.at("step").get<int>();
        t.k = j.at("k").get<int>();
        t.plan_slice = j.at("plan_slice").get<std::string>();
        t.context = j.at("context").get<std::string>();
        t.target = j.at("target").get<std::string>();
        t.ratio = j.at("ratio").get<double>();
        t.equivalence_s = j.at("equivalence_s").get<double>();
        t.prompt_id = j.at("prompt_id").get<std::string>();
        if (!(t.ratio > 0.0 && t.ratio < 1.0)) throw DataError(where + ": ratio outside (0,1)");
        if (t.target.empty()) throw DataError(where + ": empty target");
        return t;
    } catch (const json::exception& e) {
        throw DataError(where + ": " + e.what());
    }
}

void write_manifest(const DatasetManifest& m, const std::string& path) {
    json kd = json::object();
    for (const auto& [k, n] : m.k_distribution) kd[std::to_string(k)] = n;
    json j = {{"schema_version", m.schema_version},      {"tuple_count", m.tuple_count},
              {"mean_ratio", m.mean_ratio},              {"mean_equivalence", m.mean_equivalence},
              {"k_distribution", kd},                    {"source_run_ids", m.source_run_ids}};
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write manifest " + path);
    out << j.dump(2) << '\n';
}

DatasetManifest read_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read manifest " + path);
    try {
        json j = json::parse(in);
        DatasetManifest m;
        m.schema_version = j.at("schema_version").get<int>();
        if (m.schema_version != kDatasetSchemaVersion)
            throw SchemaVersionError("manifest " + path + ": unsupported schema_version " +
                                     std::to_string(m.schema_version));
        m.tuple_count = j.at("tuple_count").get<std::size_t>();
        m.mean_ratio = j.at("mean_ratio").get<double>();
        m.mean_equivalence = j.at("mean_equivalence").get<double>();
        for (const auto& [k, n] : j.at("k_distribution").items()) m.k_distribution[std::stoi(k)] = n.get<std::size_t>();
        m.source_run_ids = j.at("source_run_ids").get<std::vector<std::string>>();
        return m;
    } catch (const json::exception& e) {
        throw DataError("manifest " + path + ": " + e.what());
    }
}

DatasetManifest write_dataset(const std::vector<SupervisionTuple>& tuples, const std::string& path) {
    {
        std::ofstream out(path, std::ios::trunc | std::ios::binary);
        if (!out) throw DataError("cannot write dataset " + path);
        for (const auto& t : tuples) out << tuple_to_json_line(t) << '\n';
    }
    auto m = summarize_tuples(tuples);
    write_manifest(m, manifest_path_for(path));
    return m;
}

std::vector<SupervisionTuple> read_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read dataset " + path);
    std::vector<SupervisionTuple> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        out.push_back(tuple_from_json_line(line, line_no));
    }
    return out;
}

void DatasetAppender::append(const std::vector<SupervisionTuple>& tuples) {
    std::lock_guard lock(mu_);
    std::ofstream out(path_, std::ios::app | std::ios::binary);
    if (!out) throw DataError("cannot append to dataset " + path_);
    for (const auto& t : tuples) out << tuple_to_json_line(t) << '\n';
}

bool replay_fails(const SupervisionTuple& t) {
    std::set<std::string> available;
    for (const auto& f : collect_facts(t.target)) available.insert(f.name);
    for (const auto& line : split_lines(t.plan_slice)) {
        auto instr = instruction_of(line);
        if (split_words(instr).empty()) continue;
        for (const auto& name : required_names(instr))
            if (!available.count(name)) return true;
        auto ins = parse_instruction(instr);
        if (!ins.result.empty()) available.insert(ins.result);
    }
    return false;
}

}  // namespace paace
