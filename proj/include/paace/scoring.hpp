#pragma once

#include "paace/backends.hpp"
#include "paace/core.hpp"

#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace paace {

class UndefinedSimilarityError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

struct Thresholds {
    double theta = 0.85;
    bool equivalence_filter = true;
    bool judge_filter = true;

    void validate() const;
};

enum class FailureReason { low_equivalence, degenerate_ratio, empty_compression, judge_worse, truncated };

std::string_view to_string(FailureReason r);
FailureReason failure_reason_from_string(std::string_view s);

struct SuccessLabel {
    bool success = false;
    double equivalence_s = 0.0;
    JudgeVerdict judge;
    std::vector<double> per_step_ratios;
    std::set<FailureReason> failure_reasons;

    bool operator==(const SuccessLabel&) const = default;
};

/// Throws UndefinedSimilarityError for zero vectors or mismatched dimensions.
double cosine(const EmbeddingVector& u, const EmbeddingVector& v);

/// cos(embed(y_full), embed(y_comp)).
double semantic_equivalence(std::string_view y_full, std::string_view y_comp, Embedder& embedder);

/// The success conjunction on already-computed inputs.
SuccessLabel label_outcome(double s, const std::vector<CompressionRecord>& records, const JudgeVerdict& verdict,
                           bool truncated, const Thresholds& th);

SuccessLabel label_trajectory(const TrajectoryPair& pair, const Thresholds& th, Embedder& embedder, Judge& judge);

}  // namespace paace
