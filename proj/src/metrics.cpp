#include "paace/metrics.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

namespace paace {

using nlohmann::json;

std::size_t peak(const Trajectory& traj) {
    if (traj.per_step.empty()) throw DataError("peak: trajectory " + traj.workflow_id + " has no steps");
    std::size_t m = 0;
    for (const auto& s : traj.per_step) m = std::max(m, s.context_tokens);
    return m;
}

double dependency(const Trajectory& traj) {
    if (traj.per_step.empty()) throw DataError("dependency: trajectory " + traj.workflow_id + " has no steps");
    std::uint64_t sum = 0;
    for (const auto& s : traj.per_step) sum += s.context_tokens;
    return static_cast<double>(sum) / 1e6;
}

int em(std::string_view pred, std::string_view gold) { return normalize_answer(pred) == normalize_answer(gold); }

double f1(std::string_view pred, std::string_view gold) {
    auto p = split_words(normalize_answer(pred));
    auto g = split_words(normalize_answer(gold));
    if (p.empty() && g.empty()) return 1.0;
    if (p.empty() || g.empty()) return 0.0;
    std::map<std::string, int> counts;
    for (const auto& w : g) ++counts[w];
    int overlap = 0;
    for (const auto& w : p) {
        auto it = counts.find(w);
        if (it != counts.end() && it->second > 0) {
            --it->second;
            ++overlap;
        }
    }
    if (overlap == 0) return 0.0;
    double precision = static_cast<double>(overlap) / static_cast<double>(p.size());
    double recall = static_cast<double>(overlap) / static_cast<double>(g.size());
    return 2.0 * precision * recall / (precision + recall);
}

std::string stratum_of(int plan_length) {
    if (plan_length <= 12) return "5-12";
    if (plan_length <= 21) return "13-21";
    return "22-30";
}

namespace {

MetricRow mean_row(const std::vector<const EvaluatedRun*>& runs) {
    MetricRow m;
    for (const auto* r : runs) {
        m.acc += em(r->trajectory.final_answer, r->gold);
        m.f1 += f1(r->trajectory.final_answer, r->gold);
        m.steps += static_cast<double>(r->trajectory.per_step.size());
        m.peak += static_cast<double>(peak(r->trajectory));
        m.dep += dependency(r->trajectory);
    }
    const double n = static_cast<double>(runs.size());
    m.acc /= n;
    m.f1 /= n;
    m.steps /= n;
    m.peak /= n;
    m.dep /= n;
    return m;
}

MetricRow std_row(const std::vector<std::pair<std::string, MetricRow>>& strata) {
    MetricRow mu;
    MetricRow sd;
    const double n = static_cast<double>(strata.size());
    for (const auto& [_, r] : strata) {
        mu.acc += r.acc / n;
        mu.f1 += r.f1 / n;
        mu.steps += r.steps / n;
        mu.peak += r.peak / n;
        mu.dep += r.dep / n;
    }
    for (const auto& [_, r] : strata) {
        sd.acc += (r.acc - mu.acc) * (r.acc - mu.acc) / n;
        sd.f1 += (r.f1 - mu.f1) * (r.f1 - mu.f1) / n;
        sd.steps += (r.steps - mu.steps) * (r.steps - mu.steps) / n;
        sd.peak += (r.peak - mu.peak) * (r.peak - mu.peak) / n;
        sd.dep += (r.dep - mu.dep) * (r.dep - mu.dep) / n;
    }
    sd.acc = std::sqrt(sd.acc);
    sd.f1 = std::sqrt(sd.f1);
    sd.steps = std::sqrt(sd.steps);
    sd.peak = std::sqrt(sd.peak);
    sd.dep = std::sqrt(sd.dep);
    return sd;
}

json row_json(const MetricRow& r) {
    return {{"acc", r.acc}, {"f1", r.f1}, {"steps", r.steps}, {"peak_tokens", r.peak}, {"dep_mtokens", r.dep}};
}

MetricRow row_from(const json& j) {
    MetricRow r;
    r.acc = j.at("acc").get<double>();
    r.f1 = j.at("f1").get<double>();
    r.steps = j.at("steps").get<double>();
    r.peak = j.at("peak_tokens").get<double>();
    r.dep = j.at("dep_mtokens").get<double>();
    return r;
}

}  // namespace

RunReport build_report(const std::vector<TrajectorySet>& sets, const std::string& config_digest) {
    RunReport report;
    report.config_digest = config_digest;
    for (const auto& set : sets) {
        if (report.corpus_id.empty()) report.corpus_id = set.corpus_id;
        if (set.corpus_id != report.corpus_id)
            throw DataError("report mixes corpora: " + report.corpus_id + " vs " + set.corpus_id);
        if (set.runs.empty()) throw DataError("strategy " + set.strategy + " has no runs");

        StrategyReport row;
        row.strategy = set.strategy;
        row.runs = set.runs.size();
        std::vector<const EvaluatedRun*> all;
        std::map<std::string, std::vector<const EvaluatedRun*>> by_stratum;
        for (const auto& r : set.runs) {
            all.push_back(&r);
            by_stratum[stratum_of(r.plan_length)].push_back(&r);
        }
        row.mean = mean_row(all);
        for (const char* name : {"5-12", "13-21", "22-30"}) {
            auto it = by_stratum.find(name);
            if (it != by_stratum.end()) row.strata.emplace_back(name, mean_row(it->second));
        }
        row.std = std_row(row.strata);
        report.rows.push_back(std::move(row));
    }
    return report;
}

std::string render_report(const RunReport& report) {
    std::string out = "corpus " + report.corpus_id + "  config " + report.config_digest + "\n";
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-16s %6s %8s %8s %8s %14s %16s\n", "strategy", "runs", "acc", "f1", "steps",
                  "peak(tokens)", "dep(M tokens)");
    out += buf;
    for (const auto& r : report.rows) {
        std::snprintf(buf, sizeof buf, "%-16s %6zu %8.4f %8.4f %8.2f %14.1f %16.6f\n", r.strategy.c_str(), r.runs,
                      r.mean.acc, r.mean.f1, r.mean.steps, r.mean.peak, r.mean.dep);
        out += buf;
        std::snprintf(buf, sizeof buf, "%-16s %6s %8.4f %8.4f %8.2f %14.1f %16.6f\n", "  std (strata)", "",
                      r.std.acc, r.std.f1, r.std.steps, r.std.peak, r.std.dep);
        out += buf;
    }
    return out;
}

std::string report_to_json(const RunReport& report) {
    json rows = json::array();
    for (const auto& r : report.rows) {
        json strata = json::array();
        for (const auto& [name, m] : r.strata) strata.push_back({{"stratum", name}, {"mean", row_json(m)}});
        rows.push_back({{"strategy", r.strategy},
                        {"runs", r.runs},
                        {"mean", row_json(r.mean)},
                        {"std", row_json(r.std)},
                        {"strata", strata}});
    }
    json j = {{"schema_version", 1},
              {"corpus_id", report.corpus_id},
              {"config_digest", report.config_digest},
              {"units", {{"peak", "tokens (whitespace words)"}, {"dep", "millions of tokens"}}},
              {"rows", rows}};
    return j.dump(2) + "\n";
}

RunReport report_from_json(const std::string& text) {
    try {
        auto j = json::parse(text);
        RunReport r;
        r.corpus_id = j.at("corpus_id").get<std::string>();
        r.config_digest = j.at("config_digest").get<std::string>();
        for (const auto& row : j.at("rows")) {
            StrategyReport s;
            s.strategy = row.at("strategy").get<std::string>();
            s.runs = row.at("runs").get<std::size_t>();
            s.mean = row_from(row.at("mean"));
            s.std = row_from(row.at("std"));
            for (const auto& st : row.at("strata"))
                s.strata.emplace_back(st.at("stratum").get<std::string>(), row_from(st.at("mean")));
            r.rows.push_back(std::move(s));
        }
        return r;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed report: ") + e.what());
    }
}

}  // namespace paace
