#include "paace/scoring.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace paace;

namespace {

EmbeddingVector vec(std::initializer_list<double> xs) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v(i++) = x;
    return EmbeddingVector::from(v);
}

CompressionRecord rec(double ratio, bool empty = false) {
    CompressionRecord r;
    r.step = 1;
    r.k = 2;
    r.original_tokens = 100;
    r.compressed_tokens = static_cast<std::size_t>(ratio * 100);
    r.ratio = ratio;
    r.compressed = empty ? "" : "kept words";
    return r;
}

class FixedJudge final : public Judge {
public:
    explicit FixedJudge(JudgeLabel l) : label_(l) {}
    JudgeVerdict judge(const JudgeInput&) override { return {label_, "fixed"}; }

private:
    JudgeLabel label_;
};

TrajectoryPair pair_with(std::string full_answer, std::string comp_answer, std::vector<CompressionRecord> records) {
    TrajectoryPair p;
    p.workflow.id = "w";
    p.full.final_answer = std::move(full_answer);
    p.full.per_step = {{1, 10, "", "", {}, false}};
    p.compressed.mode = RunMode::compressed;
    p.compressed.final_answer = std::move(comp_answer);
    p.compressed.per_step = {{1, 5, "", "", {}, false}};
    p.compressed.compression_records = std::move(records);
    return p;
}

}  // namespace

TEST(Cosine, AnalyticCases) {
    EXPECT_NEAR(cosine(vec({1, 2, 3}), vec({1, 2, 3})), 1.0, 1e-12);
    EXPECT_NEAR(cosine(vec({1, 0}), vec({0, 1})), 0.0, 1e-12);
    // The 8-digit literal 0.70710678 sits 1.2e-9 from the true value.
    EXPECT_NEAR(cosine(vec({1, 0}), vec({1, 1})), 1.0 / std::sqrt(2.0), 1e-9);
    EXPECT_NEAR(cosine(vec({1, 0}), vec({1, 1})), 0.70710678, 2e-9);
}

TEST(Cosine, SymmetricScaleInvariantBounded) {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> nd;
    for (int i = 0; i < 200; ++i) {
        Eigen::VectorXd a(8), b(8);
        for (int j = 0; j < 8; ++j) {
            a(j) = nd(rng);
            b(j) = nd(rng);
        }
        auto ea = EmbeddingVector::from(a), eb = EmbeddingVector::from(b);
        double c = cosine(ea, eb);
        EXPECT_GE(c, -1.0);
        EXPECT_LE(c, 1.0);
        EXPECT_NEAR(c, cosine(eb, ea), 1e-12);
        EXPECT_NEAR(c, cosine(EmbeddingVector::from(a * 3.5), eb), 1e-12);
    }
}

TEST(Cosine, ZeroOrMismatchedIsUndefined) {
    EXPECT_THROW(cosine(vec({0, 0}), vec({1, 0})), UndefinedSimilarityError);
    EXPECT_THROW(cosine(vec({1, 0}), vec({1, 0, 0})), UndefinedSimilarityError);
}

TEST(Equivalence, IdenticalAndNonNegative) {
    HashedBagOfWordsEmbedder e;
    EXPECT_NEAR(semantic_equivalence("alpha beta", "alpha beta", e), 1.0, 1e-12);
    std::mt19937 rng(5);
    std::vector<std::string> vocab = {"a", "b", "c", "d", "e", "5", "seven"};
    for (int i = 0; i < 200; ++i) {
        std::string x = vocab[rng() % vocab.size()] + " " + vocab[rng() % vocab.size()];
        std::string y = vocab[rng() % vocab.size()];
        EXPECT_GE(semantic_equivalence(x, y, e), 0.0);
    }
}

TEST(LabelOutcome, DocumentedExamples) {
    Thresholds th;
    std::vector<CompressionRecord> ok = {rec(0.5), rec(0.5)};
    JudgeVerdict eq{JudgeLabel::equal, ""};
    EXPECT_TRUE(label_outcome(0.90, ok, eq, false, th).success);

    auto low = label_outcome(0.80, ok, eq, false, th);
    EXPECT_FALSE(low.success);
    EXPECT_EQ(low.failure_reasons, std::set<FailureReason>{FailureReason::low_equivalence});

    auto degen = label_outcome(0.95, {rec(0.5), rec(1.0)}, eq, false, th);
    EXPECT_EQ(degen.failure_reasons, std::set<FailureReason>{FailureReason::degenerate_ratio});
    EXPECT_EQ(degen.per_step_ratios, (std::vector<double>{0.5, 1.0}));
}

TEST(LabelOutcome, WorseAlwaysFails) {
    Thresholds th;
    for (double s : {0.0, 0.85, 0.99, 1.0}) {
        auto l = label_outcome(s, {rec(0.3)}, {JudgeLabel::worse, ""}, false, th);
        EXPECT_FALSE(l.success);
        EXPECT_TRUE(l.failure_reasons.count(FailureReason::judge_worse));
    }
}

TEST(LabelOutcome, ThresholdBoundaryAndEmptyCompression) {
    Thresholds th;
    EXPECT_TRUE(label_outcome(0.85, {rec(0.5)}, {}, false, th).success);
    auto e = label_outcome(0.9, {rec(0.5, true)}, {}, false, th);
    EXPECT_EQ(e.failure_reasons, std::set<FailureReason>{FailureReason::empty_compression});
    auto t = label_outcome(1.0, {rec(0.5)}, {}, true, th);
    EXPECT_EQ(t.failure_reasons, std::set<FailureReason>{FailureReason::truncated});
}

TEST(LabelOutcome, MonotoneInTheta) {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const JudgeLabel labels[] = {JudgeLabel::better, JudgeLabel::equal, JudgeLabel::worse};
    for (int i = 0; i < 2000; ++i) {
        double s = u(rng);
        std::vector<CompressionRecord> records = {rec(u(rng) < 0.9 ? 0.5 : 1.0)};
        JudgeVerdict v{labels[rng() % 3], ""};
        Thresholds hi, lo;
        hi.theta = 0.05 + 0.95 * u(rng);
        lo.theta = 0.01 + (hi.theta - 0.01) * u(rng);
        if (label_outcome(s, records, v, false, hi).success)
            EXPECT_TRUE(label_outcome(s, records, v, false, lo).success) << s << " " << hi.theta << " " << lo.theta;
    }
}

TEST(LabelOutcome, FilterSwitches) {
    Thresholds th;
    th.equivalence_filter = false;
    EXPECT_TRUE(label_outcome(0.1, {rec(0.5)}, {}, false, th).success);
    th = {};
    th.judge_filter = false;
    EXPECT_TRUE(label_outcome(0.9, {rec(0.5)}, {JudgeLabel::worse, ""}, false, th).success);
    th = {};
    th.theta = 0.0;
    EXPECT_THROW(th.validate(), ValidationError);
}

TEST(LabelTrajectory, EmptyAnswerScoresZero) {
    HashedBagOfWordsEmbedder e;
    FixedJudge j(JudgeLabel::equal);
    auto l = label_trajectory(pair_with("5", "", {rec(0.5)}), {}, e, j);
    EXPECT_EQ(l.equivalence_s, 0.0);
    EXPECT_TRUE(l.failure_reasons.count(FailureReason::low_equivalence));
}

TEST(LabelTrajectory, UsesEmbedderAndJudge) {
    HashedBagOfWordsEmbedder e;
    FixedJudge eq(JudgeLabel::equal), worse(JudgeLabel::worse);
    auto ok = label_trajectory(pair_with("42", "42", {rec(0.4)}), {}, e, eq);
    EXPECT_TRUE(ok.success);
    EXPECT_NEAR(ok.equivalence_s, 1.0, 1e-12);
    EXPECT_FALSE(label_trajectory(pair_with("42", "42", {rec(0.4)}), {}, e, worse).success);
    auto truncated = pair_with("42", "42", {rec(0.4)});
    truncated.compressed.truncated = true;
    EXPECT_EQ(label_trajectory(truncated, {}, e, eq).failure_reasons,
              std::set<FailureReason>{FailureReason::truncated});
}

TEST(FailureReasonNames, RoundTrip) {
    for (auto r : {FailureReason::low_equivalence, FailureReason::degenerate_ratio, FailureReason::empty_compression,
                   FailureReason::judge_worse, FailureReason::truncated})
        EXPECT_EQ(failure_reason_from_string(to_string(r)), r);
}
