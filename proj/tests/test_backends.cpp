#include "oracles.hpp"

#include "paace/backends.hpp"
#include "paace/scoring.hpp"
#include "paace/synth.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace paace;

namespace {

// The agent may precede its action with a "Thought:" line.
std::string action_line(const std::string& out) {
    auto lines = split_lines(out);
    return lines.empty() ? "" : lines.back();
}

}  // namespace

TEST(ScriptedAgent, BareLookupReadsContextFact) {
    EXPECT_EQ(ScriptedAgent::act("## input\na = 2\n", "lookup a"), "2");
}

TEST(ScriptedAgent, MissingFactIsSignalled) {
    EXPECT_EQ(ScriptedAgent::act("## input\nb = 3\n", "lookup a"), "MISSING_FACT:a");
    EXPECT_EQ(action_line(ScriptedAgent::act("## input\nr1 = 3\n", "compute add $r1 $r2 -> r3")), "MISSING_FACT:r2");
}

TEST(ScriptedAgent, ComputeAndToolTasks) {
    EXPECT_EQ(action_line(ScriptedAgent::act("r1 = 3\nr2 = 4\n", "compute add $r1 $r2 -> r3")), "r3 = 7");
    auto call = parse_tool_call(action_line(ScriptedAgent::act("", "lookup key=k7 -> r1")));
    ASSERT_TRUE(call.has_value());
    EXPECT_EQ(call->kind, "lookup");
    EXPECT_EQ(call->arguments.at("key"), "k7");
}

TEST(ScriptedAgent, MessageEnvelope) {
    ScriptedAgent agent;
    auto resp = agent.complete(agent_request("## input\na = 2\n", "lookup a"));
    EXPECT_EQ(resp.text, "2");
    EXPECT_GT(resp.prompt_tokens, 0u);
    auto again = agent.complete(agent_request("## input\na = 2\n", "lookup a"));
    EXPECT_EQ(again.text, resp.text);
}

TEST(Embedder, Deterministic) {
    HashedBagOfWordsEmbedder e;
    auto a = e.embed("alpha beta gamma");
    auto b = e.embed("alpha beta gamma");
    EXPECT_EQ(a.values, b.values);
    EXPECT_EQ(a.values.size(), 256);
    EXPECT_NEAR(a.norm, 1.0, 1e-12);
}

TEST(Embedder, BucketsFollowHashScheme) {
    HashedBagOfWordsEmbedder e;
    for (std::string tok : {"alpha", "beta", "5", "five", "Mixed"})
        EXPECT_EQ(e.bucket(tok), oracle::fnv1a(oracle::lower(tok)) % 256) << tok;
}

TEST(Embedder, OrderInvariance) {
    HashedBagOfWordsEmbedder e;
    EXPECT_NEAR(cosine(e.embed("alpha beta"), e.embed("beta alpha")), 1.0, 1e-12);
}

TEST(Embedder, DistinctBucketsAreOrthogonal) {
    HashedBagOfWordsEmbedder e;
    ASSERT_NE(oracle::fnv1a("alpha") % 256, oracle::fnv1a("beta") % 256) << "test vocabulary collides";
    EXPECT_NEAR(cosine(e.embed("alpha"), e.embed("beta")), 0.0, 1e-12);
}

TEST(Embedder, DigitVersusWordMatchesBucketOracle) {
    HashedBagOfWordsEmbedder e;
    auto expected = oracle::bow_cosine("5", "five");
    ASSERT_TRUE(expected.has_value());
    double s = semantic_equivalence("5", "five", e);
    EXPECT_NEAR(s, *expected, 1e-12);
    // Frozen from the oracle: the two tokens land in different buckets.
    EXPECT_EQ(*expected, 0.0);
}

TEST(Embedder, ZeroVectorForEmptyText) {
    HashedBagOfWordsEmbedder e;
    auto v = e.embed("   ");
    EXPECT_EQ(v.norm, 0.0);
    EXPECT_THROW(cosine(v, e.embed("x")), UndefinedSimilarityError);
}

TEST(RuleJudgeCases, Table) {
    RuleJudge j;
    EXPECT_EQ(j.judge({"w", "5", "5", std::nullopt}).label, JudgeLabel::equal);
    EXPECT_EQ(j.judge({"w", "4", "5", std::string("5")}).label, JudgeLabel::better);
    EXPECT_EQ(j.judge({"w", "5", "4", std::string("5")}).label, JudgeLabel::worse);
    EXPECT_EQ(j.judge({"w", "3", "4", std::string("5")}).label, JudgeLabel::equal);
    EXPECT_EQ(j.judge({"w", "3", "4", std::nullopt}).label, JudgeLabel::equal);
}

TEST(LlmJudgeParsing, LabelsAndFallback) {
    EXPECT_EQ(LlmJudge::parse_label("Verdict: better\nshorter"), JudgeLabel::better);
    EXPECT_EQ(LlmJudge::parse_label("reasoning\nVERDICT: Worse."), JudgeLabel::worse);
    EXPECT_EQ(LlmJudge::parse_label("equal"), JudgeLabel::equal);
    EXPECT_FALSE(LlmJudge::parse_label("I think it is fine").has_value());

    LlmJudge judge(std::make_shared<FixedResponseBackend>("no idea"));
    EXPECT_EQ(judge.judge({"w", "5", "5", std::nullopt}).label, JudgeLabel::worse);
    LlmJudge ok(std::make_shared<FixedResponseBackend>("verdict: equal"));
    EXPECT_EQ(ok.judge({"w", "5", "5", std::nullopt}).label, JudgeLabel::equal);
}

TEST(LenientJudgeWrapper, NeverHardensAndZeroIsIdentity) {
    auto inner = std::make_shared<RuleJudge>();
    LenientJudge none(inner, 0.0), all(inner, 1.0);
    JudgeInput worse{"w", "5", "4", std::string("5")};
    EXPECT_EQ(none.judge(worse).label, JudgeLabel::worse);
    EXPECT_EQ(all.judge(worse).label, JudgeLabel::equal);
    JudgeInput better{"w", "4", "5", std::string("5")};
    EXPECT_EQ(all.judge(better).label, JudgeLabel::better);
}

TEST(Mutator, SeedOneGivesDirectivesThreeAndSeven) {
    DirectiveMutator m;
    const auto& lib = directive_library();
    auto out = m.propose("p0", "", 2, 1);
    ASSERT_EQ(out.size(), 2u);
    EXPECT_EQ(out[0], "p0\n" + lib[3]);
    EXPECT_EQ(out[1], "p0\n" + lib[7]);
    EXPECT_EQ(m.propose("p0", "", 2, 1), out);
}

TEST(Mutator, NeverReturnsParent) {
    DirectiveMutator m;
    const auto& lib = directive_library();
    std::vector<std::string> parents = {"p0"};
    std::string all = "p0";
    for (const auto& d : lib) all += "\n" + d;
    parents.push_back(all);
    parents.push_back("p0\n" + lib[0] + "\n" + lib[4]);
    for (const auto& parent : parents)
        for (std::uint64_t seed = 0; seed < 100; ++seed)
            for (int n : {1, 2, 4}) {
                auto out = m.propose(parent, "", n, seed);
                EXPECT_FALSE(out.empty());
                EXPECT_LE(out.size(), static_cast<std::size_t>(n));
                for (const auto& c : out) EXPECT_NE(c, parent) << "seed " << seed;
            }
}

TEST(Mutator, SingleCandidate) {
    DirectiveMutator m;
    EXPECT_EQ(m.propose("p0", "", 1, 9).size(), 1u);
    EXPECT_THROW(m.propose("p0", "", 0, 9), ValidationError);
}

TEST(Mutator, LlmMutatorFailureIsEmpty) {
    class Failing final : public CompletionBackend {
    public:
        CompletionResponse complete(const CompletionRequest&) override { throw TransportError("down"); }
    };
    LlmMutator m(std::make_shared<Failing>());
    EXPECT_TRUE(m.propose("p0", "", 2, 1).empty());
}

TEST(CompressionInput, LayoutRoundTrip) {
    auto text = compression_input("[1] lookup a", "## input\na = 2");
    EXPECT_EQ(text, "NEXT_TASKS:\n[1] lookup a\nCONTEXT:\n## input\na = 2");
    auto parts = parse_compression_input(text);
    ASSERT_TRUE(parts.has_value());
    EXPECT_EQ(parts->plan_slice, "[1] lookup a");
    EXPECT_EQ(parts->context, "## input\na = 2");
}

TEST(MockCompressor, TeacherKeepsSliceFacts) {
    MockCompressorModel model;
    CompletionRequest req;
    req.messages = {{"system", std::string("Keep facts.\n") + planted_directive()},
                    {"user", compression_input("[1] lookup a\n[2] lookup b", "## input\na = 2\nb = 3\nz = 9")}};
    auto text = model.complete(req).text;
    EXPECT_NE(text.find("a = 2"), std::string::npos);
    EXPECT_NE(text.find("b = 3"), std::string::npos);
    EXPECT_EQ(text.find("z = 9"), std::string::npos);

    req.messages[0].content = "Keep facts.";
    auto narrow = model.complete(req).text;
    EXPECT_NE(narrow.find("a = 2"), std::string::npos);
    EXPECT_EQ(narrow.find("b = 3"), std::string::npos);
}

TEST(BackendConfigChecks, Invariants) {
    BackendConfig c;
    EXPECT_NO_THROW(c.validate());
    c.retries = -1;
    EXPECT_ANY_THROW(c.validate());
    c = {};
    c.max_concurrency = 0;
    EXPECT_ANY_THROW(c.validate());
}
