#pragma once

#include "paace/core.hpp"

#include <optional>
#include <string>
#include <vector>

namespace paace {

/// max_t |C_t|. Throws DataError for an empty trajectory.
std::size_t peak(const Trajectory& traj);

/// sum_t |C_t| / 1e6 (millions of tokens). Throws DataError for an empty trajectory.
double dependency(const Trajectory& traj);

/// Exact match after normalize_answer.
int em(std::string_view pred, std::string_view gold);

/// Token F1 with multiset overlap over normalized tokens. Both empty -> 1.
double f1(std::string_view pred, std::string_view gold);

struct EvaluatedRun {
    Trajectory trajectory;
    std::string gold;
    int plan_length = 0;
};

struct TrajectorySet {
    std::string strategy;
    std::string corpus_id;
    std::vector<EvaluatedRun> runs;
};

struct MetricRow {
    double acc = 0.0;
    double f1 = 0.0;
    double steps = 0.0;
    double peak = 0.0;  // tokens
    double dep = 0.0;   // millions of tokens

    bool operator==(const MetricRow&) const = default;
};

struct StrategyReport {
    std::string strategy;
    std::size_t runs = 0;
    MetricRow mean;
    MetricRow std;  // population std across plan-length strata present
    std::vector<std::pair<std::string, MetricRow>> strata;

    bool operator==(const StrategyReport&) const = default;
};

struct RunReport {
    std::string corpus_id;
    std::string config_digest;
    std::vector<StrategyReport> rows;

    bool operator==(const RunReport&) const = default;
};

/// Plan-length strata: "5-12", "13-21", "22-30" (other lengths fall in the nearest end bucket).
std::string stratum_of(int plan_length);

/// Throws DataError when the sets come from different corpora or a set is empty.
RunReport build_report(const std::vector<TrajectorySet>& sets, const std::string& config_digest);

std::string render_report(const RunReport& report);
std::string report_to_json(const RunReport& report);
RunReport report_from_json(const std::string& text);

}  // namespace paace
