#pragma once

#include "paace/core.hpp"
#include "paace/scoring.hpp"

#include <map>
#include <mutex>
#include <string>
#include <vector>

namespace paace {

inline constexpr int kDatasetSchemaVersion = 1;

/// Raised when a stored record carries a schema_version this build does not read.
class SchemaVersionError : public DataError {
public:
    using DataError::DataError;
};

struct SupervisionTuple {
    std::string workflow_id;
    int step = 0;
    int k = 0;
    std::string plan_slice;
    std::string context;  // rendered C_t
    std::string target;   // rendered C~_t
    double ratio = 0.0;
    double equivalence_s = 0.0;
    std::string prompt_id;
    std::string run_id;

    bool operator==(const SupervisionTuple&) const = default;
};

struct DatasetManifest {
    std::size_t tuple_count = 0;
    double mean_ratio = 0.0;
    double mean_equivalence = 0.0;
    std::map<int, std::size_t> k_distribution;
    std::vector<std::string> source_run_ids;
    int schema_version = kDatasetSchemaVersion;

    bool operator==(const DatasetManifest&) const = default;
};

/// One tuple per valid compression record when the label is a success; otherwise none.
std::vector<SupervisionTuple> extract_tuples(const TrajectoryPair& pair, const SuccessLabel& label,
                                             const std::string& run_id = "");

/// Student input: "NEXT_TASKS:\n<slice>\nCONTEXT:\n<context>".
std::string student_input(const SupervisionTuple& t);

/// Exact (plan_slice, context, target) duplicates collapse to the highest-s
/// instance, kept at the position of the first occurrence.
std::vector<SupervisionTuple> dedup_tuples(const std::vector<SupervisionTuple>& tuples);

DatasetManifest summarize_tuples(const std::vector<SupervisionTuple>& tuples);

/// "<dir>/<stem>.manifest.json" for "<dir>/<stem>.jsonl".
std::string manifest_path_for(const std::string& dataset_path);

std::string tuple_to_json_line(const SupervisionTuple& t);
/// Throws DataError (naming `line_no`) on malformed input and SchemaVersionError on a version mismatch.
SupervisionTuple tuple_from_json_line(const std::string& line, std::size_t line_no);

/// Overwrites `path` and its sibling manifest.
DatasetManifest write_dataset(const std::vector<SupervisionTuple>& tuples, const std::string& path);
std::vector<SupervisionTuple> read_dataset(const std::string& path);

void write_manifest(const DatasetManifest& m, const std::string& path);
DatasetManifest read_manifest(const std::string& path);

/// Serialized appender for one dataset file.
class DatasetAppender {
public:
    explicit DatasetAppender(std::string path) : path_(std::move(path)) {}
    void append(const std::vector<SupervisionTuple>& tuples);

private:
    std::mutex mu_;
    std::string path_;
};

/// Replays the slice against the target context: every "$name" a slice task
/// references must be a fact in the target or the result of an earlier slice
/// task. Returns true when some reference cannot be satisfied.
bool replay_fails(const SupervisionTuple& t);

}  // namespace paace
