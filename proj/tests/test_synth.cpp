#include "paace/backends.hpp"
#include "paace/executor.hpp"
#include "paace/store.hpp"
#include "paace/synth.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace paace;

namespace {

Workflow hand_workflow(std::vector<std::string> instructions, std::string final_requirement) {
    std::vector<TaskStep> steps;
    for (std::size_t i = 0; i < instructions.size(); ++i)
        steps.push_back({static_cast<int>(i) + 1, instructions[i], {}, StepKind::lookup});
    Workflow w;
    w.id = "hand";
    w.system_prompt = kDefaultSystemPrompt;
    w.plan = Plan(std::move(steps));
    w.final_requirement = std::move(final_requirement);
    return w;
}

}  // namespace

TEST(Generator, SameSeedSameBytes) {
    auto a = generate_workflow(42);
    auto b = generate_workflow(42);
    EXPECT_EQ(workflow_to_json(a), workflow_to_json(b));
    EXPECT_EQ(a.workflow, b.workflow);
    EXPECT_EQ(a.world, b.world);
    EXPECT_NE(workflow_to_json(a), workflow_to_json(generate_workflow(43)));
}

TEST(Generator, PlanLengthWithinRange) {
    auto g = generate_workflow(7);
    EXPECT_GE(g.workflow.plan.size(), 5u);
    EXPECT_LE(g.workflow.plan.size(), 30u);
    for (std::uint64_t seed = 0; seed < 300; ++seed) {
        auto n = generate_workflow(seed).workflow.plan.size();
        ASSERT_GE(n, 5u) << seed;
        ASSERT_LE(n, 30u) << seed;
    }
}

TEST(Generator, NarrowRangeIsRespected) {
    GeneratorConfig cfg;
    cfg.min_steps = 9;
    cfg.max_steps = 9;
    for (std::uint64_t seed = 0; seed < 20; ++seed) EXPECT_EQ(generate_workflow(seed, cfg).workflow.plan.size(), 9u);
}

TEST(Generator, InvalidConfigRejected) {
    GeneratorConfig cfg;
    cfg.min_steps = 10;
    cfg.max_steps = 5;
    EXPECT_THROW(generate_workflow(1, cfg), ValidationError);
    cfg = {};
    cfg.noise_level = 1.5;
    EXPECT_THROW(generate_workflow(1, cfg), ValidationError);
    cfg = {};
    for (auto& [kind, w] : cfg.domain_mix) w = 0.0;
    EXPECT_THROW(generate_workflow(1, cfg), ValidationError);
    cfg = {};
    cfg.domain_mix[StepKind::search] = -1.0;
    EXPECT_THROW(generate_workflow(1, cfg), ValidationError);
}

TEST(Generator, ZeroNoiseInputHoldsOnlyReferencedFacts) {
    GeneratorConfig cfg;
    cfg.noise_level = 0.0;
    cfg.distractor_count = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        auto g = generate_workflow(seed, cfg);
        std::set<std::string> referenced;
        for (const auto& line : split_lines(g.workflow.plan.description()))
            for (const auto& n : required_names(line)) referenced.insert(n);
        for (const auto& n : required_names(g.workflow.final_requirement)) referenced.insert(n);
        for (const auto& line : split_lines(g.workflow.initial_input)) {
            if (line.find_first_not_of(" \t") == std::string::npos) continue;
            auto f = parse_fact_line(line);
            ASSERT_TRUE(f.has_value()) << "seed " << seed << ": non-fact line '" << line << "'";
            EXPECT_TRUE(referenced.count(f->name)) << "seed " << seed << ": unreferenced " << f->name;
        }
    }
}

TEST(Generator, DistractorsNeverReferenced) {
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        auto g = generate_workflow(seed);
        auto distractors = distractor_names(g.workflow);
        EXPECT_FALSE(distractors.empty()) << seed;
        std::set<std::string> referenced;
        for (const auto& step : g.workflow.plan.steps())
            for (const auto& n : required_names(step.instruction)) referenced.insert(n);
        for (const auto& n : required_names(g.workflow.final_requirement)) referenced.insert(n);
        for (const auto& d : distractors) EXPECT_FALSE(referenced.count(d)) << "seed " << seed << ": " << d;
    }
}

TEST(Generator, GoldIsOracleAnswer) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto g = generate_workflow(seed);
        ASSERT_TRUE(g.workflow.gold_answer.has_value());
        EXPECT_EQ(*g.workflow.gold_answer, oracle_answer(g.workflow, g.world));
    }
}

TEST(ApplyTool, LookupTableSumAndNotFound) {
    WorldState world;
    world.kv["a"] = "2";
    world.tables["t1"] = {{{"x", 1}}, {{"x", 2}}, {{"x", 3}}};
    EXPECT_EQ(apply_tool(world, {"lookup", {{"key", "a"}}}).result.payload, "2");
    EXPECT_EQ(apply_tool(world, {"table_sum", {{"table", "t1"}, {"col", "x"}}}).result.payload, "6");
    EXPECT_EQ(apply_tool(world, {"table_filter", {{"table", "t1"}, {"col", "x"}, {"gt", "1"}}}).result.payload, "2");
    EXPECT_EQ(apply_tool(world, {"lookup", {{"key", "missing"}}}).result.payload, "NOT_FOUND:missing");
    EXPECT_EQ(apply_tool(world, {"table_sum", {{"table", "t9"}, {"col", "x"}}}).result.payload, "NOT_FOUND:t9");
    EXPECT_THROW(apply_tool(world, {"delete_everything", {}}), ValidationError);
}

TEST(ApplyTool, WriteFileReturnsUpdatedWorld) {
    WorldState world;
    auto out = apply_tool(world, {"write_file", {{"path", "notes.txt"}, {"text", "hello"}}});
    ASSERT_TRUE(out.updated.has_value());
    EXPECT_EQ(out.updated->files.at("notes.txt"), "hello");
    EXPECT_TRUE(world.files.empty());
    EXPECT_EQ(apply_tool(*out.updated, {"read_file", {{"path", "notes.txt"}}}).result.payload, "hello");
    EXPECT_FALSE(apply_tool(world, {"lookup", {{"key", "a"}}}).updated.has_value());
}

TEST(ApplyTool, PureForSameInputs) {
    auto g = generate_workflow(11);
    for (const auto& step : g.workflow.plan.steps()) {
        auto ins = parse_instruction(step.instruction);
        if (!is_tool_kind(ins.verb)) continue;
        ToolCall call{ins.verb, ins.named};
        auto a = apply_tool(g.world, call);
        auto b = apply_tool(g.world, call);
        EXPECT_EQ(a.result, b.result);
        EXPECT_EQ(a.result.tokens, token_count(a.result.payload));
    }
}

TEST(ToolCallText, FormatParseRoundTrip) {
    ToolCall call{"search", {{"query", "two words"}, {"limit", "3"}}};
    auto line = format_tool_call(call);
    auto back = parse_tool_call(line);
    ASSERT_TRUE(back.has_value());
    EXPECT_EQ(*back, call);
    EXPECT_FALSE(parse_tool_call("r1 = 5").has_value());
}

TEST(OracleAnswer, SumOfTwoLookups) {
    WorldState world;
    world.kv = {{"a", "2"}, {"b", "3"}};
    auto w = hand_workflow({"lookup key=a -> r1", "lookup key=b -> r2", "answer sum $r1 $r2 -> r3"}, "report $r3");
    EXPECT_EQ(oracle_answer(w, world), "5");
}

TEST(OracleAnswer, Identity) {
    WorldState world;
    world.kv = {{"x", "v"}};
    auto w = hand_workflow({"lookup key=x -> r1"}, "report $r1");
    EXPECT_EQ(oracle_answer(w, world), "v");
}

TEST(OracleAnswer, MatchesScriptedAgentUnderFullContext) {
    ScriptedAgent agent;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        auto g = generate_workflow(seed);
        auto traj = run_full(g.workflow, g.world, agent);
        EXPECT_FALSE(traj.truncated) << seed;
        EXPECT_EQ(traj.final_answer, oracle_answer(g.workflow, g.world)) << seed;
    }
}

TEST(Instructions, EvaluateOps) {
    EXPECT_EQ(evaluate_op("add", {"2", "7"}).value_or(""), "9");
    EXPECT_EQ(evaluate_op("sub", {"2", "7"}).value_or(""), "-5");
    EXPECT_EQ(evaluate_op("max", {"4", "9", "1"}).value_or(""), "9");
    EXPECT_EQ(evaluate_op("min", {"4", "9", "1"}).value_or(""), "1");
    EXPECT_FALSE(evaluate_op("sum", {"4", "x"}).has_value());
}

TEST(Instructions, RequiredNamesAndInstructionText) {
    EXPECT_EQ(instruction_of("[3] lookup a (after 1)"), "lookup a");
    EXPECT_EQ(required_names("[3] lookup a (after 1)"), (std::vector<std::string>{"a"}));
    EXPECT_EQ(required_names("[4] answer sum $r1 $r2 -> r4 (after 1,2)"), (std::vector<std::string>{"r1", "r2"}));
    EXPECT_TRUE(required_names("[1] lookup key=k1 -> r1").empty());
}

TEST(RngStream, FixedOutputForSeed) {
    Rng a(5), b(5);
    for (int i = 0; i < 10; ++i) EXPECT_EQ(a.next(), b.next());
    Rng c(9);
    for (int i = 0; i < 1000; ++i) {
        auto v = c.uniform(-3, 4);
        ASSERT_GE(v, -3);
        ASSERT_LE(v, 4);
        auto u = c.unit();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
    }
}
