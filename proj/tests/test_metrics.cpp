#include "oracles.hpp"

#include "paace/metrics.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace paace;

namespace {

Trajectory with_sizes(std::vector<std::size_t> sizes, std::string answer = "x") {
    Trajectory t;
    t.workflow_id = "w";
    for (std::size_t i = 0; i < sizes.size(); ++i) t.per_step.push_back({static_cast<int>(i) + 1, sizes[i], "", "", {}, false});
    t.final_answer = std::move(answer);
    return t;
}

EvaluatedRun run(std::vector<std::size_t> sizes, std::string answer, std::string gold, int plan_length) {
    return {with_sizes(std::move(sizes), std::move(answer)), std::move(gold), plan_length};
}

}  // namespace

TEST(Peak, Examples) {
    EXPECT_EQ(peak(with_sizes({100, 200, 150})), 200u);
    EXPECT_EQ(peak(with_sizes({7})), 7u);
    EXPECT_THROW(peak(with_sizes({})), DataError);
}

TEST(Dependency, Examples) {
    EXPECT_DOUBLE_EQ(dependency(with_sizes({100, 200, 300})), 0.0006);
    EXPECT_DOUBLE_EQ(dependency(with_sizes({1'500'000})), 1.5);
    EXPECT_THROW(dependency(with_sizes({})), DataError);
}

TEST(Dependency, EqualsResum) {
    std::mt19937_64 rng(1);
    for (int i = 0; i < 200; ++i) {
        std::vector<std::size_t> sizes(1 + rng() % 40);
        std::size_t sum = 0;
        for (auto& s : sizes) sum += (s = rng() % 100000);
        EXPECT_EQ(dependency(with_sizes(sizes)), static_cast<double>(sum) / 1e6);
    }
}

TEST(ExactMatchAndF1, Examples) {
    EXPECT_NEAR(f1("a b c", "b c d"), 2.0 / 3.0, 1e-12);
    EXPECT_EQ(em("Foo  Bar", "foo bar"), 1);
    EXPECT_EQ(f1("same text", "same text"), 1.0);
    EXPECT_EQ(f1("x y", "z w"), 0.0);
    EXPECT_EQ(em("", ""), 1);
    EXPECT_EQ(f1("", ""), 1.0);
    EXPECT_EQ(f1("a", ""), 0.0);
}

TEST(ExactMatchAndF1, MatchesLonghandOracle) {
    std::mt19937 rng(8);
    const char* vocab[] = {"a", "b", "c", "A", "dd"};
    for (int i = 0; i < 500; ++i) {
        std::string p, g;
        for (int j = 0; j < static_cast<int>(rng() % 5); ++j) p += std::string(vocab[rng() % 5]) + " ";
        for (int j = 0; j < static_cast<int>(rng() % 5); ++j) g += std::string(vocab[rng() % 5]) + " ";
        EXPECT_NEAR(f1(p, g), oracle::token_f1(p, g), 1e-12) << p << "|" << g;
    }
}

TEST(Report, HandComputedMeans) {
    TrajectorySet a{"none", "c1", {run({100, 200}, "5", "5", 2), run({300, 400, 500}, "7", "8", 3)}};
    TrajectorySet b{"paace-oracle", "c1", {run({50, 60}, "5", "5", 2), run({70, 80, 90}, "8", "8", 3)}};
    auto rep = build_report({a, b}, "digest");
    ASSERT_EQ(rep.rows.size(), 2u);
    const auto& none = rep.rows[0].mean;
    EXPECT_DOUBLE_EQ(none.acc, 0.5);
    EXPECT_DOUBLE_EQ(none.f1, 0.5);
    EXPECT_DOUBLE_EQ(none.steps, 2.5);
    EXPECT_DOUBLE_EQ(none.peak, 350.0);
    EXPECT_DOUBLE_EQ(none.dep, (0.0003 + 0.0012) / 2);
    const auto& orc = rep.rows[1].mean;
    EXPECT_DOUBLE_EQ(orc.acc, 1.0);
    EXPECT_DOUBLE_EQ(orc.peak, 75.0);
    EXPECT_DOUBLE_EQ(orc.dep, (0.00011 + 0.00024) / 2);
    EXPECT_EQ(rep.corpus_id, "c1");
    EXPECT_EQ(rep.config_digest, "digest");
}

TEST(Report, SingleStratumHasZeroStd) {
    TrajectorySet a{"none", "c1", {run({10}, "1", "1", 6), run({30}, "2", "1", 7)}};
    auto rep = build_report({a}, "d");
    EXPECT_EQ(rep.rows[0].std, MetricRow{});
    ASSERT_EQ(rep.rows[0].strata.size(), 1u);
    EXPECT_EQ(rep.rows[0].strata[0].first, "5-12");
}

TEST(Report, StratumStdAcrossBuckets) {
    TrajectorySet a{"none", "c1", {run({10}, "1", "1", 6), run({30}, "2", "1", 25)}};
    auto rep = build_report({a}, "d");
    EXPECT_DOUBLE_EQ(rep.rows[0].std.peak, 10.0);
    EXPECT_DOUBLE_EQ(rep.rows[0].std.acc, 0.5);
}

TEST(Report, MixedCorporaRejected) {
    TrajectorySet a{"none", "c1", {run({1}, "1", "1", 5)}};
    TrajectorySet b{"fifo", "c2", {run({1}, "1", "1", 5)}};
    EXPECT_THROW(build_report({a, b}, "d"), DataError);
    TrajectorySet empty{"none", "c1", {}};
    EXPECT_THROW(build_report({empty}, "d"), DataError);
}

TEST(Report, JsonRoundTripAndTable) {
    TrajectorySet a{"none", "c1", {run({100, 200}, "5", "5", 6), run({300}, "x", "y", 20)}};
    auto rep = build_report({a}, "dg");
    EXPECT_EQ(report_from_json(report_to_json(rep)), rep);
    auto text = render_report(rep);
    EXPECT_NE(text.find("none"), std::string::npos);
    EXPECT_NE(text.find("tokens"), std::string::npos);
}

TEST(Strata, Buckets) {
    EXPECT_EQ(stratum_of(5), "5-12");
    EXPECT_EQ(stratum_of(12), "5-12");
    EXPECT_EQ(stratum_of(13), "13-21");
    EXPECT_EQ(stratum_of(22), "22-30");
    EXPECT_EQ(stratum_of(40), "22-30");
    EXPECT_EQ(stratum_of(2), "5-12");
}
