#include "paace/executor.hpp"
#include "paace/metrics.hpp"
#include "paace/synth.hpp"

#include <gtest/gtest.h>

using namespace paace;

namespace {

class EmptyCompressor final : public Compressor {
public:
    std::optional<ContextState> compress(const ContextState&, const std::string&) override { return std::nullopt; }
};

}  // namespace

TEST(RunFull, MatchesGoldAndRecordsEveryStep) {
    ScriptedAgent agent;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        auto g = generate_workflow(seed);
        auto t = run_full(g.workflow, g.world, agent);
        ASSERT_FALSE(t.truncated) << seed;
        EXPECT_EQ(t.final_answer, *g.workflow.gold_answer) << seed;
        EXPECT_EQ(t.per_step.size(), g.workflow.plan.size()) << seed;
        EXPECT_EQ(t.mode, RunMode::full);
        EXPECT_TRUE(t.compression_records.empty());
    }
}

TEST(RunFull, ContextNeverShrinks) {
    ScriptedAgent agent;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        auto g = generate_workflow(seed);
        auto t = run_full(g.workflow, g.world, agent);
        for (std::size_t i = 0; i < t.per_step.size(); ++i) {
            EXPECT_GT(t.per_step[i].context_tokens, 0u);
            if (i) EXPECT_LE(t.per_step[i - 1].context_tokens, t.per_step[i].context_tokens) << seed;
        }
    }
}

TEST(RunFull, StepBudgetTruncates) {
    ScriptedAgent agent;
    auto g = generate_workflow(3);
    RunConfig cfg;
    cfg.max_steps = 2;
    auto t = run_full(g.workflow, g.world, agent, cfg);
    EXPECT_TRUE(t.truncated);
    EXPECT_EQ(t.per_step.size(), 2u);
    cfg = {};
    cfg.token_budget = 10;
    EXPECT_TRUE(run_full(g.workflow, g.world, agent, cfg).truncated);
}

TEST(RunCompressed, IdentityReproducesFullBytewise) {
    ScriptedAgent agent;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        auto g = generate_workflow(seed);
        auto full = run_full(g.workflow, g.world, agent);
        auto ident = run_compressed(g.workflow, g.world, agent, identity_handle(2));
        EXPECT_EQ(ident.final_answer, full.final_answer) << seed;
        EXPECT_EQ(dependency(ident), dependency(full)) << seed;
        ASSERT_EQ(ident.per_step.size(), full.per_step.size());
        for (std::size_t i = 0; i < full.per_step.size(); ++i) {
            EXPECT_EQ(ident.per_step[i].context_tokens, full.per_step[i].context_tokens);
            EXPECT_EQ(ident.per_step[i].digest, full.per_step[i].digest);
        }
    }
}

TEST(RunCompressed, OracleRuleMatchesGoldWithValidRatios) {
    ScriptedAgent agent;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        auto g = generate_workflow(seed);
        auto t = run_compressed(g.workflow, g.world, agent, oracle_handle(2));
        EXPECT_EQ(t.final_answer, *g.workflow.gold_answer) << seed;
        EXPECT_EQ(t.compression_records.size(), t.per_step.size());
        for (const auto& r : t.compression_records) EXPECT_TRUE(r.valid()) << seed << " step " << r.step;
        EXPECT_EQ(t.missing_fact_count(), 0u);
    }
}

TEST(RunCompressed, PeakNeverAboveFull) {
    ScriptedAgent agent;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        auto g = generate_workflow(seed);
        auto full = run_full(g.workflow, g.world, agent);
        auto comp = run_compressed(g.workflow, g.world, agent, oracle_handle(2));
        EXPECT_GE(peak(full), peak(comp)) << seed;
    }
}

TEST(RunCompressed, RecordsCarrySliceAndK) {
    ScriptedAgent agent;
    auto g = generate_workflow(21);
    auto t = run_compressed(g.workflow, g.world, agent, oracle_handle(3));
    ASSERT_FALSE(t.compression_records.empty());
    const auto& r = t.compression_records.front();
    EXPECT_EQ(r.k, 3);
    EXPECT_EQ(r.step, 1);
    EXPECT_EQ(r.plan_slice, plan_slice(g.workflow.plan, 1, 3));
    // The agent reads C~_t, so the step size is the compressed size.
    EXPECT_EQ(r.compressed_tokens, t.per_step.front().context_tokens);
    EXPECT_EQ(r.original_tokens, token_count(r.context));
    EXPECT_DOUBLE_EQ(r.ratio, static_cast<double>(r.compressed_tokens) / static_cast<double>(r.original_tokens));
    EXPECT_EQ(t.k, 3);
}

TEST(RunCompressed, KOneMissesFactsConsumedTwoStepsLater) {
    GeneratorConfig cfg;
    cfg.exact_gap = 2;
    ScriptedAgent agent;
    std::optional<std::uint64_t> witness;
    for (std::uint64_t seed = 0; seed < 50 && !witness; ++seed) {
        auto g = generate_workflow(seed, cfg);
        auto t = run_compressed(g.workflow, g.world, agent, oracle_handle(1));
        if (t.missing_fact_count() > 0) witness = seed;
    }
    ASSERT_TRUE(witness.has_value()) << "no adversarial seed in 0..49";
    auto g = generate_workflow(*witness, cfg);
    auto k1 = run_compressed(g.workflow, g.world, agent, oracle_handle(1));
    auto k2 = run_compressed(g.workflow, g.world, agent, oracle_handle(2));
    EXPECT_NE(k1.final_answer, *g.workflow.gold_answer);
    EXPECT_EQ(k2.final_answer, *g.workflow.gold_answer);
    EXPECT_EQ(k2.missing_fact_count(), 0u);
}

TEST(RunCompressed, EmptyCompressionFallsBack) {
    ScriptedAgent agent;
    auto g = generate_workflow(4);
    CompressorHandle h;
    h.kind = CompressorKind::baseline;
    h.k = 2;
    h.name = "broken";
    h.prompt_id = "broken";
    h.impl = std::make_shared<EmptyCompressor>();
    auto full = run_full(g.workflow, g.world, agent);
    auto t = run_compressed(g.workflow, g.world, agent, h);
    EXPECT_TRUE(t.fallback_used);
    for (const auto& r : t.compression_records) EXPECT_FALSE(r.valid());
    EXPECT_EQ(t.final_answer, full.final_answer);
}

TEST(Handles, Validation) {
    EXPECT_THROW(oracle_handle(0).validate(), ValidationError);
    CompressorHandle h = oracle_handle(2);
    h.impl.reset();
    EXPECT_THROW(h.validate(), ValidationError);
    RunConfig cfg;
    cfg.k = 0;
    EXPECT_THROW(cfg.validate(), ValidationError);
}

TEST(RunPair, SharesWorkflow) {
    ScriptedAgent agent;
    auto g = generate_workflow(8);
    auto p = run_pair(g.workflow, g.world, agent, oracle_handle(2));
    EXPECT_EQ(p.workflow, g.workflow);
    EXPECT_EQ(p.full.mode, RunMode::full);
    EXPECT_EQ(p.compressed.mode, RunMode::compressed);
    EXPECT_EQ(p.full.workflow_id, p.compressed.workflow_id);
}
