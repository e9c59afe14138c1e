#include "paace/scoring.hpp"

#include <algorithm>

namespace paace {

void Thresholds::validate() const {
    if (!(theta > 0.0 && theta <= 1.0)) throw ValidationError("theta must be in (0, 1]");
}

std::string_view to_string(FailureReason r) {
    switch (r) {
        case FailureReason::low_equivalence: return "low_equivalence";
        case FailureReason::degenerate_ratio: return "degenerate_ratio";
        case FailureReason::empty_compression: return "empty_compression";
        case FailureReason::judge_worse: return "judge_worse";
        case FailureReason::truncated: return "truncated";
    }
    return "truncated";
}

FailureReason failure_reason_from_string(std::string_view s) {
    for (auto r : {FailureReason::low_equivalence, FailureReason::degenerate_ratio, FailureReason::empty_compression,
                   FailureReason::judge_worse, FailureReason::truncated})
        if (to_string(r) == s) return r;
    throw ValidationError("unknown failure reason: " + std::string(s));
}

double cosine(const EmbeddingVector& u, const EmbeddingVector& v) {
    if (u.values.size() != v.values.size()) throw UndefinedSimilarityError("cosine: dimension mismatch");
    double nu = u.values.norm();
    double nv = v.values.norm();
    if (nu == 0.0 || nv == 0.0) throw UndefinedSimilarityError("cosine: zero vector");
    double c = u.values.dot(v.values) / (nu * nv);
    return std::clamp(c, -1.0, 1.0);
}

double semantic_equivalence(std::string_view y_full, std::string_view y_comp, Embedder& embedder) {
    return cosine(embedder.embed(y_full), embedder.embed(y_comp));
}

SuccessLabel label_outcome(double s, const std::vector<CompressionRecord>& records, const JudgeVerdict& verdict,
                           bool truncated, const Thresholds& th) {
    th.validate();
    SuccessLabel label;
    label.equivalence_s = s;
    label.judge = verdict;
    for (const auto& r : records) label.per_step_ratios.push_back(r.ratio);

    if (truncated) {
        label.failure_reasons.insert(FailureReason::truncated);
    } else {
        if (th.equivalence_filter && s < th.theta) label.failure_reasons.insert(FailureReason::low_equivalence);
        for (const auto& r : records) {
            if (r.compressed.empty() || word_count(r.compressed) == 0)
                label.failure_reasons.insert(FailureReason::empty_compression);
            else if (!(r.ratio > 0.0 && r.ratio < 1.0))
                label.failure_reasons.insert(FailureReason::degenerate_ratio);
        }
        if (th.judge_filter && verdict.label == JudgeLabel::worse)
            label.failure_reasons.insert(FailureReason::judge_worse);
    }
    label.success = label.failure_reasons.empty();
    return label;
}

SuccessLabel label_trajectory(const TrajectoryPair& pair, const Thresholds& th, Embedder& embedder, Judge& judge) {
    const bool truncated = pair.full.truncated || pair.compressed.truncated;
    if (truncated) return label_outcome(0.0, pair.compressed.compression_records, {}, true, th);

    double s = 0.0;
    if (word_count(pair.full.final_answer) > 0 && word_count(pair.compressed.final_answer) > 0) {
        try {
            s = semantic_equivalence(pair.full.final_answer, pair.compressed.final_answer, embedder);
        } catch (const UndefinedSimilarityError&) {
            s = 0.0;
        }
    }
    JudgeInput in;
    in.workflow_description = pair.workflow.plan.description() + "\n" + pair.workflow.final_requirement;
    in.y_full = pair.full.final_answer;
    in.y_comp = pair.compressed.final_answer;
    in.gold = pair.workflow.gold_answer;
    auto verdict = judge.judge(in);
    return label_outcome(s, pair.compressed.compression_records, verdict, false, th);
}

}  // namespace paace
