#include "paace/core.hpp"
#include "paace/executor.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace paace;

namespace {

Plan make_plan(int n) {
    std::vector<TaskStep> steps;
    for (int i = 1; i <= n; ++i) {
        TaskStep s;
        s.id = i;
        s.instruction = "lookup key=k" + std::to_string(i) + " -> r" + std::to_string(i);
        if (i > 1) s.depends_on = {i - 1};
        steps.push_back(s);
    }
    return Plan(std::move(steps));
}

}  // namespace

TEST(TokenCount, EmptyIsZero) { EXPECT_EQ(token_count(""), 0u); }

TEST(TokenCount, WhitespaceWords) {
    EXPECT_EQ(token_count("a b c"), 3u);
    EXPECT_EQ(token_count("  a\tb\n\nc  "), 3u);
}

TEST(TokenCount, AdditiveOverSpaceJoin) {
    std::string a = "x y", b = "z";
    EXPECT_EQ(token_count(a + " " + b), 3u);
    EXPECT_EQ(token_count(a + " " + b), token_count(a) + token_count(b));
}

TEST(TokenCount, MonotoneUnderConcatenation) {
    std::mt19937 rng(3);
    const char alphabet[] = "ab \n";
    for (int trial = 0; trial < 500; ++trial) {
        std::string a, b;
        for (int i = 0; i < static_cast<int>(rng() % 20); ++i) a += alphabet[rng() % 4];
        for (int i = 0; i < static_cast<int>(rng() % 20); ++i) b += alphabet[rng() % 4];
        auto ab = token_count(a + b);
        EXPECT_GE(ab, std::max(token_count(a), token_count(b))) << '"' << a << "\" + \"" << b << '"';
    }
}

TEST(NormalizeAnswer, LowercasesTrimsAndCollapses) {
    EXPECT_EQ(normalize_answer("  Foo \t BAR\nbaz "), "foo bar baz");
    EXPECT_EQ(normalize_answer(""), "");
}

TEST(PlanInvariants, RejectsCycleAndForwardEdges) {
    std::vector<TaskStep> steps(3);
    for (int i = 0; i < 3; ++i) {
        steps[i].id = i + 1;
        steps[i].instruction = "lookup key=a";
    }
    steps[0].depends_on = {3};
    steps[2].depends_on = {1};
    EXPECT_THROW(Plan{steps}, ValidationError);

    steps[2].depends_on.clear();
    EXPECT_THROW(Plan{steps}, ValidationError);  // 1 -> 3 is a forward edge
}

TEST(PlanInvariants, RejectsGapsSelfEdgesAndEmptyInstructions) {
    std::vector<TaskStep> steps(2);
    steps[0] = {1, "lookup key=a", {}, StepKind::lookup};
    steps[1] = {3, "lookup key=b", {}, StepKind::lookup};
    EXPECT_THROW(Plan{steps}, ValidationError);
    steps[1] = {2, "lookup key=b", {2}, StepKind::lookup};
    EXPECT_THROW(Plan{steps}, ValidationError);
    steps[1] = {2, "   ", {}, StepKind::lookup};
    EXPECT_THROW(Plan{steps}, ValidationError);
}

TEST(PlanInvariants, DescriptionListsEveryStep) {
    auto p = make_plan(4);
    EXPECT_EQ(p.description(),
              "[1] lookup key=k1 -> r1\n[2] lookup key=k2 -> r2 (after 1)\n[3] lookup key=k3 -> r3 (after 2)\n"
              "[4] lookup key=k4 -> r4 (after 3)");
}

TEST(RenderContext, SystemOnly) {
    ContextState c;
    c.system_prompt = "sys";
    EXPECT_EQ(render_context(c), "## system\nsys\n");
}

TEST(RenderContext, FixedSectionOrderAndDeterminism) {
    ContextState c;
    c.system_prompt = "P";
    c.plan_text = "[1] lookup a";
    c.initial_input = "a = 2";
    c.memory = {"note"};
    c.history = {{1, "thought"}};
    c.observations = {{1, "obs"}};
    c.retrieved = {{1, "doc"}};
    auto text = render_context(c);
    EXPECT_EQ(text, render_context(c));
    std::vector<std::string> headers = {"## system", "## plan", "## input", "## memory",
                                        "## history", "## observations", "## retrieved"};
    std::size_t pos = 0;
    for (const auto& h : headers) {
        auto at = text.find(h, pos);
        ASSERT_NE(at, std::string::npos) << h;
        pos = at + h.size();
    }
}

TEST(RenderContext, ObservationStrictlyIncreasesTokens) {
    ContextState c;
    c.system_prompt = "sys";
    auto before = context_tokens(c);
    c.observations.push_back({1, "payload"});
    EXPECT_GT(context_tokens(c), before);
}

TEST(RenderContext, ParseInvertsUpToEntryBoundaries) {
    ContextState c;
    c.system_prompt = "P";
    c.plan_text = "[1] lookup a";
    c.initial_input = "a = 2\nb = 3";
    c.memory = {"m1", "m2"};
    c.history = {{0, "h1"}};
    c.observations = {{0, "o1"}, {0, "o2"}};
    auto back = parse_context(render_context(c));
    back.step = c.step;
    EXPECT_EQ(back, c);
}

TEST(RenderContext, HeaderlessTextIsInitialInput) {
    auto c = parse_context("a = 2\nb = 3\n");
    EXPECT_EQ(c.initial_input, "a = 2\nb = 3");
    EXPECT_TRUE(c.system_prompt.empty());
}

TEST(CompressionRecordValidity, OpenIntervalAndNonEmpty) {
    auto ok = make_record(1, 2, "[1] x", "a b c d", "a b", "p");
    EXPECT_DOUBLE_EQ(ok.ratio, 0.5);
    EXPECT_TRUE(ok.valid());
    EXPECT_FALSE(make_record(1, 2, "s", "a b", "a b", "p").valid());      // r = 1
    EXPECT_FALSE(make_record(1, 2, "s", "a b", "a b c", "p").valid());    // r > 1
    EXPECT_FALSE(make_record(1, 2, "s", "a b", "", "p").valid());         // empty
    EXPECT_FALSE(make_record(1, 2, "s", "a b", " \n ", "p").valid());     // blank
}

TEST(Facts, LastOccurrenceWins) {
    auto facts = collect_facts("a = 1\nnoise line\nb=2\na = 3");
    ASSERT_EQ(facts.size(), 2u);
    EXPECT_EQ(facts[0].name, "b");
    EXPECT_EQ(facts[1].name, "a");
    EXPECT_EQ(facts[1].value, "3");
    EXPECT_EQ(find_fact("x = hello world", "x").value_or(""), "hello world");
    EXPECT_FALSE(find_fact("x = 1", "y").has_value());
}

TEST(Facts, ReferencedNames) {
    auto names = referenced_names("answer sum $r1 $f2 -> r3");
    EXPECT_EQ(names, (std::vector<std::string>{"r1", "f2"}));
}

TEST(PlanSlice, Definition) {
    auto p = make_plan(10);
    EXPECT_EQ(plan_slice(p, 4, 2), "[4] lookup key=k4 -> r4\n[5] lookup key=k5 -> r5 (after 4)");
}

TEST(PlanSlice, ClippedAtPlanEnd) {
    auto p = make_plan(10);
    auto s = plan_slice(p, 9, 3);
    EXPECT_EQ(s, "[9] lookup key=k9 -> r9\n[10] lookup key=k10 -> r10 (after 9)");
}

TEST(PlanSlice, RejectsOutOfRange) {
    auto p = make_plan(3);
    EXPECT_THROW(plan_slice(p, 0, 1), ValidationError);
    EXPECT_THROW(plan_slice(p, 4, 1), ValidationError);
    EXPECT_THROW(plan_slice(p, 1, 0), ValidationError);
}

TEST(UpdateContext, EmptyToolsOnlyGrowsHistory) {
    ContextState c;
    c.system_prompt = "P";
    auto next = update_context(c, "out", {});
    EXPECT_EQ(next.history.size(), 1u);
    EXPECT_TRUE(next.observations.empty());
    EXPECT_EQ(next.step, 2);
    next.history.clear();
    next.step = 1;
    EXPECT_EQ(next, c);
}

TEST(UpdateContext, FixedAppendOrderAndGrowth) {
    ContextState c;
    c.step = 3;
    auto next = update_context(c, "thought", {{"t1", 1}, {"t2", 1}}, {{"doc", 1}});
    EXPECT_GT(context_tokens(next), context_tokens(c));
    ASSERT_EQ(next.observations.size(), 2u);
    EXPECT_EQ(next.observations[0].text, "t1");
    EXPECT_EQ(next.observations[1].text, "t2");
    EXPECT_EQ(next.observations[0].step, 3);
    ASSERT_EQ(next.retrieved.size(), 1u);
    EXPECT_EQ(next.history[0].text, "thought");
}

TEST(Digest, Fnv1aReferenceVectors) {
    // Published FNV-1a 64 test vectors.
    EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
    EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
    EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ULL);
}
