#pragma once

#include "paace/core.hpp"
#include "paace/scoring.hpp"
#include "paace/synth.hpp"

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace paace {

inline constexpr int kStoreSchemaVersion = 1;

// JSON text for single records. Object keys are emitted sorted, so equal
// values always serialize to equal bytes.
std::string workflow_to_json(const GeneratedWorkflow& g);
GeneratedWorkflow workflow_from_json(const std::string& text);

std::string trajectory_to_json(const Trajectory& t);
Trajectory trajectory_from_json(const std::string& text);

std::string label_to_json(const SuccessLabel& l);
SuccessLabel label_from_json(const std::string& text);

// ---------------------------------------------------------------------------
// Corpus file: one {"schema_version", "workflow", "world"} object per line.

void write_corpus(const std::vector<GeneratedWorkflow>& corpus, const std::string& path);
std::vector<GeneratedWorkflow> read_corpus(const std::string& path);

/// Digest of the corpus file bytes; trajectories and reports carry it.
std::string corpus_id_of(const std::string& path);

// ---------------------------------------------------------------------------
// Trajectory and label logs.

struct TrajectoryRecord {
    std::string run_id;
    std::string corpus_id;
    std::uint64_t seed = 0;
    Trajectory trajectory;

    bool operator==(const TrajectoryRecord&) const = default;
};

struct LabelRecord {
    std::string run_id;
    std::string workflow_id;
    std::string strategy;
    SuccessLabel label;

    bool operator==(const LabelRecord&) const = default;
};

std::string trajectory_record_line(const TrajectoryRecord& r);
TrajectoryRecord trajectory_record_from_line(const std::string& line, std::size_t line_no);
std::string label_record_line(const LabelRecord& r);
LabelRecord label_record_from_line(const std::string& line, std::size_t line_no);

/// Reads complete lines. An unterminated final line (a crashed writer) is
/// ignored; malformed complete lines throw DataError naming the line.
std::vector<TrajectoryRecord> read_trajectory_log(const std::string& path);
std::vector<LabelRecord> read_label_log(const std::string& path);

/// Cuts an unterminated trailing line so appends start on a record boundary.
void repair_log_tail(const std::string& path);

/// One writer per file; concurrent callers are serialized.
class JsonlAppender {
public:
    explicit JsonlAppender(std::string path);
    void append_line(const std::string& line);

private:
    std::mutex mu_;
    std::string path_;
};

// ---------------------------------------------------------------------------

/// Fixed file layout under one run directory.
struct RunDirectory {
    std::filesystem::path root;

    explicit RunDirectory(std::filesystem::path p) : root(std::move(p)) {}

    /// Resolved config snapshot of the named subcommand ("config.run.json").
    std::string config(const std::string& command) const { return (root / ("config." + command + ".json")).string(); }
    std::string corpus() const { return (root / "corpus.jsonl").string(); }
    std::string trajectories() const { return (root / "trajectories.jsonl").string(); }
    std::string labels() const { return (root / "labels.jsonl").string(); }
    std::string dataset() const { return (root / "dataset.jsonl").string(); }
    std::string archive() const { return (root / "archive.jsonl").string(); }
    std::string archive_summary() const { return (root / "archive.summary.json").string(); }
    std::string best_prompt() const { return (root / "best_prompt.txt").string(); }
    std::string report_text() const { return (root / "report.txt").string(); }
    std::string report_json() const { return (root / "report.json").string(); }
    std::string trace() const { return (root / "trace.jsonl").string(); }

    void ensure() const;
};

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace paace
