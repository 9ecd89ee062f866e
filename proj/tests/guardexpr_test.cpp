#include "exbt/error.hpp"
#include "exbt/guardexpr.hpp"
#include "exbt/java/parser.hpp"
#include "exbt/java/render.hpp"

#include "guard_fixtures.hpp"

#include <gtest/gtest.h>

using namespace exbt;

namespace {

std::vector<Condition> conds(std::initializer_list<const char*> texts)
{
    std::vector<Condition> out;
    for (const char* t : texts) out.push_back(parse_condition(t));
    return out;
}

Bindings bind(const std::string& name, const char* expr)
{
    return {{name, java::parse_expression(expr)}};
}

std::string rendered(const std::vector<Condition>& e) { return render_conjunction(e); }

const guard_fixtures::Fixture& fixture(const std::string& name)
{
    for (const auto& f : guard_fixtures::all())
        if (f.name == name) return f;
    throw std::runtime_error("no fixture " + name);
}

std::vector<NodeTag> tags_of(const NodeList& n)
{
    std::vector<NodeTag> out;
    for (const auto& node : n.nodes) out.push_back(node.tag);
    return out;
}

}  // namespace

class GuardFixture : public ::testing::TestWithParam<guard_fixtures::Fixture> {};

TEST_P(GuardFixture, MatchesOracle)
{
    const auto& f = GetParam();
    auto ctx = guard_fixtures::context_of(f);
    auto trace = guard_fixtures::trace_of(f, ctx);
    auto g = compute_guard_expression(trace, ctx);
    EXPECT_EQ(g.rendered, f.expected);
    if (!f.domain.empty()) {
        ASSERT_LE(guard_fixtures::domain_size(f), 100u);
        EXPECT_EQ(guard_fixtures::oracle_disagreements(f, g), 0);
    }
    EXPECT_TRUE(g.unresolved_names.empty()) << g.unresolved_names[0];
}

INSTANTIATE_TEST_SUITE_P(Fixtures, GuardFixture, ::testing::ValuesIn(guard_fixtures::all()),
                         [](const auto& info) { return info.param.name; });

TEST(CollectNodes, ThenBranch)
{
    const auto& f = fixture("if_then");
    auto ctx = guard_fixtures::context_of(f);
    auto n = collect_nodes(guard_fixtures::trace_of(f, ctx), ctx);
    EXPECT_EQ(tags_of(n), (std::vector<NodeTag>{NodeTag::StartStatement, NodeTag::Condition}));
    EXPECT_EQ(n.nodes[1].text, "x > 0");
}

TEST(CollectNodes, ElseBranchIsNegated)
{
    const auto& f = fixture("else_branch");
    auto ctx = guard_fixtures::context_of(f);
    auto n = collect_nodes(guard_fixtures::trace_of(f, ctx), ctx);
    ASSERT_EQ(n.nodes.size(), 2u);
    EXPECT_EQ(n.nodes[1].tag, NodeTag::NegatedCondition);
    EXPECT_EQ(n.nodes[1].text, "!(x > 0)");
}

TEST(CollectNodes, TwoFramesInReversedOrder)
{
    const auto& f = fixture("two_frame");
    auto ctx = guard_fixtures::context_of(f);
    auto n = collect_nodes(guard_fixtures::trace_of(f, ctx), ctx);
    EXPECT_EQ(tags_of(n), (std::vector<NodeTag>{NodeTag::StartStatement, NodeTag::Condition, NodeTag::MethodDecl,
                                                NodeTag::MethodCall, NodeTag::StartStatement}));
    EXPECT_EQ(n.nodes[2].params, std::vector<std::string>{"v"});
    EXPECT_EQ(n.nodes[3].text, "check(a + 1)");
    EXPECT_EQ(n.nodes[0].method.name, "check");
    EXPECT_EQ(n.nodes[4].method.name, "h");
}

TEST(CollectNodes, LineOutsideMethodSpan)
{
    const auto& f = fixture("if_then");
    auto ctx = guard_fixtures::context_of(f);
    StackTrace t{{{"g.IfThen", "f", "IfThen.java", 1}}};
    try {
        collect_nodes(t, ctx);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::FrameOutOfSpan);
    }
}

TEST(Merge, SubstitutionParenthesizesCompoundArgument)
{
    EXPECT_EQ(rendered(merge(conds({"v == 0"}), bind("v", "a + 1"))), "(a + 1) == 0");
}

TEST(Merge, EmptyMapIsIdentity)
{
    auto e = conds({"x > 0", "y.size() < n && !done"});
    auto m = merge(e, {});
    ASSERT_EQ(m.size(), e.size());
    for (std::size_t i = 0; i < e.size(); ++i) EXPECT_EQ(m[i].expr, e[i].expr);
    EXPECT_EQ(rendered(m), "x > 0 && y.size() < n && !done");
}

TEST(Merge, IdentifierBoundary)
{
    EXPECT_EQ(rendered(merge(conds({"val > value"}), bind("val", "k"))), "k > value");
    EXPECT_EQ(rendered(merge(conds({"v.val(v) > val"}), bind("val", "k"))), "v.val(v) > k");
}

TEST(Merge, UnmentionedNamesAreNoOp)
{
    auto e = conds({"x > 0"});
    auto m = merge(e, bind("zz", "1 + 2"));
    EXPECT_EQ(m[0].expr, e[0].expr);
}

TEST(Merge, SimultaneousSwap)
{
    Bindings b = {{"a", java::parse_expression("b")}, {"b", java::parse_expression("a")}};
    EXPECT_EQ(rendered(merge(conds({"a < b"}), b)), "b < a");
}

TEST(Merge, LambdaParameterShadows)
{
    EXPECT_EQ(rendered(merge(conds({"xs.stream().anyMatch(x -> x > y)"}), bind("x", "q"))),
              "xs.stream().anyMatch(x -> x > y)");
    EXPECT_EQ(rendered(merge(conds({"xs.stream().anyMatch(x -> x > y)"}), bind("y", "q + 1"))),
              "xs.stream().anyMatch(x -> x > (q + 1))");
}

TEST(Merge, KeepsOriginalText)
{
    auto m = merge(conds({"v == 0"}), bind("v", "a + 1"));
    EXPECT_EQ(m[0].original, "v == 0");
}

TEST(RenderConjunction, ParenthesizesDisjunctions)
{
    EXPECT_EQ(rendered(conds({"a || b", "c"})), "(a || b) && c");
    EXPECT_EQ(rendered(conds({"a || b"})), "a || b");
}

TEST(EvaluateGuard, SpecExamples)
{
    auto g1 = guard_from_nodes({});
    EXPECT_TRUE(evaluate_guard(g1, {}));
    GuardExpression g;
    g.conditions = conds({"a + 1 == 0"});
    EXPECT_TRUE(evaluate_guard(g, {{"a", std::int64_t{-1}}}));
    g.conditions = conds({"x > 0"});
    EXPECT_FALSE(evaluate_guard(g, {{"x", std::int64_t{0}}}));
    g.conditions = conds({"a * 2 > 10"});
    EXPECT_TRUE(evaluate_guard(g, {{"a", std::int64_t{6}}}));
}

TEST(EvaluateGuard, JavaDivisionAndShortCircuit)
{
    auto v = evaluate(java::parse_expression("-7 / 2 == -3 && -7 % 2 == -1"), {});
    EXPECT_TRUE(std::get<bool>(v));
    // right side would divide by zero
    v = evaluate(java::parse_expression("d != 0 && 10 / d > 1"), {{"d", std::int64_t{0}}});
    EXPECT_FALSE(std::get<bool>(v));
}

TEST(EvaluateGuard, Errors)
{
    auto code_of = [](const char* text, const Env& env) {
        try {
            evaluate(java::parse_expression(text), env);
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::UsageError;
    };
    EXPECT_EQ(code_of("x > 0", {}), ErrorCode::UnboundName);
    EXPECT_EQ(code_of("s.isEmpty()", {{"s", std::int64_t{1}}}), ErrorCode::UnsupportedConstruct);
    EXPECT_EQ(code_of("1 / z", {{"z", std::int64_t{0}}}), ErrorCode::DivisionByZero);
}

TEST(ComputeGuard, UnresolvedLocalsAreFlagged)
{
    auto ctx = build_context({{"src/main/java/L.java", R"java(class L {
    void f(int[] xs) {
        for (int i = 0; i < xs.length; i++) {
            if (xs[i] < 0) {
                throw new IllegalStateException();
            }
        }
    }
}
)java"}});
    StackTrace t{{{"L", "f", "L.java", 5}}};
    auto g = compute_guard_expression(t, ctx);
    EXPECT_EQ(g.rendered, "xs[i] < 0 && i < xs.length");
    EXPECT_EQ(g.unresolved_names, std::vector<std::string>{"i"});
}

TEST(ComputeGuard, Deterministic)
{
    const auto& f = fixture("three_frame");
    auto ctx1 = guard_fixtures::context_of(f);
    auto ctx2 = guard_fixtures::context_of(f);
    auto a = compute_guard_expression(guard_fixtures::trace_of(f, ctx1), ctx1);
    auto b = compute_guard_expression(guard_fixtures::trace_of(f, ctx2), ctx2);
    EXPECT_EQ(a.rendered, b.rendered);
    EXPECT_EQ(a.original_texts(), b.original_texts());
}
