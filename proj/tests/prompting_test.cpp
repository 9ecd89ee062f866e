#include "exbt/classifier.hpp"
#include "exbt/error.hpp"
#include "exbt/prompting.hpp"
#include "exbt/util.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <set>

using namespace exbt;
namespace fs = std::filesystem;

namespace {

fs::path repo_a() { return fs::path(EXBT_FIXTURES) / "repoA"; }

struct RepoA {
    RepoContext ctx = load_repo(repo_a());
    SuiteSplit split = split_test_suite(ctx);
    TracePool pool = collect_stacktrace_set(split.nonebts, ctx, parse_trace_log(read_file(repo_a() / ".exbt/pool.log")),
                                            offsets_of(ctx));

    static std::vector<std::pair<std::string, OffsetMap>> offsets_of(const RepoContext& c)
    {
        std::vector<std::pair<std::string, OffsetMap>> out;
        for (const auto& f : instrument_print_trace(c).files) out.emplace_back(f.path, f.offsets);
        return out;
    }

    const MethodInfo& method(std::string_view spec) const
    {
        const MethodInfo* m = resolve_method_spec(ctx, spec);
        if (!m) throw std::runtime_error("no method " + std::string(spec));
        return *m;
    }

    ThrowSite site_in(std::string_view spec) const { return ctx.throws_in(method(spec)).at(0); }
};

const char* kCalc = "src/main/java/com/example/calc/Calculator.java";
const char* kCalcTest = "src/test/java/com/example/calc/CalculatorTest.java";

// Svc.run reaches two throwing helpers; Svc.go reaches b() through another path.
const char* kSvc = R"java(package p;
public class Svc {
    public void run(int x) {
        a(x);
        b(x);
    }
    public void go(int x) {
        b(x + 1);
    }
    void a(int x) {
        if (x < 0) throw new IllegalArgumentException();
    }
    void b(int y) {
        if (y > 9) throw new IllegalStateException();
    }
}
)java";

const char* kSvcTest = R"java(package p;
import org.junit.Test;
public class SvcTest {
    @Test
    public void runs() {
        new Svc().run(1);
    }
    @Test
    public void goes() {
        new Svc().go(1);
    }
}
)java";

const char* kSvcLog = "# test: p.SvcTest#runs\n"
                      "\tat p.Svc.a(Svc.java:10)\n\tat p.Svc.run(Svc.java:4)\n\tat p.SvcTest.runs(SvcTest.java:6)\n---\n"
                      "# test: p.SvcTest#runs\n"
                      "\tat p.Svc.b(Svc.java:13)\n\tat p.Svc.run(Svc.java:5)\n\tat p.SvcTest.runs(SvcTest.java:6)\n---\n"
                      "# test: p.SvcTest#goes\n"
                      "\tat p.Svc.b(Svc.java:13)\n\tat p.Svc.go(Svc.java:8)\n\tat p.SvcTest.goes(SvcTest.java:10)\n---\n";

RepoContext svc_context()
{
    return build_context({{"src/main/java/p/Svc.java", kSvc}, {"src/test/java/p/SvcTest.java", kSvcTest}});
}

}  // namespace

TEST(CollectStacktraceSet, RepoFixturePool)
{
    RepoA a;
    ASSERT_EQ(a.pool.entries.size(), 3u);
    EXPECT_EQ(a.pool.unattributed_blocks, 1);  // the EBT's own block
    const auto& divide = a.pool.entries[0];
    EXPECT_EQ(divide.source_test.name, "testDivide");
    EXPECT_EQ(divide.throw_site.line, 8);
    ASSERT_EQ(divide.trace.frames.size(), 1u);
    EXPECT_EQ(divide.trace.frames[0].line, 8);
    const auto& check = a.pool.entries[1];
    EXPECT_EQ(check.source_test.name, "testAdd");
    EXPECT_EQ(check.throw_site.line, 20);
    ASSERT_EQ(check.trace.frames.size(), 2u);
    EXPECT_EQ(check.trace.frames[0].method, "add");
    EXPECT_EQ(check.trace.frames[0].line, 14);  // instrumented 15
    EXPECT_EQ(a.pool.entries[2].source_test.name, "acceptsPositive");
    EXPECT_EQ(a.pool.entries[2].throw_site.file(), "src/main/java/com/example/calc/Validator.java");
}

TEST(CollectStacktraceSet, OneEntryPerReachedThrow)
{
    auto ctx = svc_context();
    auto split = split_test_suite(ctx);
    auto pool = collect_stacktrace_set(split.nonebts, ctx, parse_trace_log(kSvcLog), {});
    ASSERT_EQ(pool.entries.size(), 3u);
    int from_runs = 0;
    for (const auto& e : pool.entries) from_runs += e.source_test.name == "runs";
    EXPECT_EQ(from_runs, 2);
    // b() is reached by both tests through different callers
    std::vector<StackTrace> to_b;
    for (const auto& e : pool.entries)
        if (e.throw_site.line == 14) to_b.push_back(e.trace);
    ASSERT_EQ(to_b.size(), 2u);
    EXPECT_NE(to_b[0], to_b[1]);
}

TEST(CollectStacktraceSet, EmptyLogGivesEmptyPool)
{
    auto ctx = svc_context();
    auto pool = collect_stacktrace_set(split_test_suite(ctx).nonebts, ctx, parse_trace_log(""), {});
    EXPECT_TRUE(pool.entries.empty());
}

TEST(LoadOrBuildPool, CachedUntilMainSourcesChange)
{
    auto dir = fs::temp_directory_path() / "exbt_pool_cache_test";
    fs::remove_all(dir);
    auto ctx = svc_context();
    auto split = split_test_suite(ctx);
    bool hit = true;
    auto first = load_or_build_pool(dir, split.nonebts, ctx, kSvcLog, {}, &hit);
    EXPECT_FALSE(hit);
    auto second = load_or_build_pool(dir, split.nonebts, ctx, kSvcLog, {}, &hit);
    EXPECT_TRUE(hit);
    EXPECT_EQ(second.entries, first.entries);

    std::string edited = kSvc;
    edited.replace(edited.find("y > 9"), 5, "y > 8");
    auto ctx2 = build_context({{"src/main/java/p/Svc.java", edited}, {"src/test/java/p/SvcTest.java", kSvcTest}});
    EXPECT_NE(pool_cache_key(ctx2, kSvcLog), pool_cache_key(ctx, kSvcLog));
    load_or_build_pool(dir, split.nonebts, ctx2, kSvcLog, {}, &hit);
    EXPECT_FALSE(hit);
    fs::remove_all(dir);
}

TEST(SelectDestTestFile, NamingRulesThenCoverage)
{
    const char* foo = "package q;\npublic class Foo {\n    void f() {}\n}\n";
    const char* t = "package q;\nimport org.junit.Test;\npublic class %s {\n    @Test public void t() {}\n}\n";
    auto test_src = [&](const char* name) {
        std::string s = t;
        s.replace(s.find("%s"), 2, name);
        return s;
    };
    MethodId mut{"q.Foo", "f", 0, "src/main/java/q/Foo.java", 3};
    {
        auto ctx = build_context({{"src/main/java/q/Foo.java", foo},
                                  {"src/test/java/q/FooTest.java", test_src("FooTest")},
                                  {"src/test/java/q/TestFoo.java", test_src("TestFoo")}});
        auto d = select_dest_test_file(mut, ctx);
        ASSERT_TRUE(d);
        EXPECT_EQ(d->path, "src/test/java/q/FooTest.java");
        EXPECT_EQ(d->rule, DestRule::NamedTest);
    }
    {
        auto ctx = build_context({{"src/main/java/q/Foo.java", foo}, {"src/test/java/q/TestFoo.java", test_src("TestFoo")}});
        auto d = select_dest_test_file(mut, ctx);
        ASSERT_TRUE(d);
        EXPECT_EQ(d->path, "src/test/java/q/TestFoo.java");
        EXPECT_EQ(d->rule, DestRule::TestNamed);
    }
    {
        // same name in another package does not count
        auto ctx = build_context({{"src/main/java/q/Foo.java", foo},
                                  {"src/test/java/other/FooTest.java", "package other;\nclass FooTest {}\n"},
                                  {"src/test/java/q/BarSuite.java", test_src("BarSuite")}});
        EXPECT_FALSE(select_dest_test_file(mut, ctx));
        CoverageIndex idx;
        idx.by_class["q.Foo"].insert("src/test/java/q/BarSuite.java");
        auto d = select_dest_test_file(mut, ctx, &idx);
        ASSERT_TRUE(d);
        EXPECT_EQ(d->path, "src/test/java/q/BarSuite.java");
        EXPECT_EQ(d->rule, DestRule::Coverage);
    }
}

TEST(SelectDestTestFile, RepoFixtureUsesCoverageForValidator)
{
    RepoA a;
    auto idx = build_coverage_index(a.pool, a.ctx);
    auto calc = select_dest_test_file(a.method("com.example.calc.Calculator#divide").id, a.ctx, &idx);
    ASSERT_TRUE(calc);
    EXPECT_EQ(calc->path, kCalcTest);
    auto val = select_dest_test_file(a.method("com.example.calc.Validator#requirePositive").id, a.ctx, &idx);
    ASSERT_TRUE(val);
    EXPECT_EQ(val->path, "src/test/java/com/example/calc/ValidatorSuite.java");
    EXPECT_EQ(val->rule, DestRule::Coverage);
}

TEST(DestSkeleton, KeepsStructureAndHelpers)
{
    RepoA a;
    EXPECT_EQ(dest_skeleton(a.ctx, kCalcTest),
              "package com.example.calc;\n\n"
              "import static org.junit.Assert.assertEquals;\n"
              "import static org.junit.Assert.assertThrows;\n\n"
              "import org.junit.Test;\n\n"
              "public class CalculatorTest {\n"
              "    private final Calculator calc = new Calculator();\n\n"
              "    private int twice(int x) {\n"
              "        return x * 2;\n"
              "    }\n"
              "}\n");
}

TEST(AssemblePrompt, TwoFrameBundle)
{
    RepoA a;
    PromptRequest req{a.method("com.example.calc.Calculator#add").id, a.site_in("com.example.calc.Calculator#check"),
                      kCalcTest, std::nullopt, 42};
    auto res = assemble_prompt(req, a.ctx, a.pool, a.split.nonebts);
    ASSERT_TRUE(std::holds_alternative<PromptBundle>(res));
    const auto& b = std::get<PromptBundle>(res);
    EXPECT_EQ(b.guard.rendered, "(a + 1) == 0");
    EXPECT_EQ(b.trace.frames.size(), 2u);
    EXPECT_EQ(b.matching_traces, 1);
    ASSERT_EQ(b.nonebts.size(), 2u);
    // testAdd calls add() directly, so it ranks before the other test in the file
    EXPECT_NE(b.nonebts[0].find("testAdd()"), std::string::npos);
    EXPECT_NE(b.nonebts[1].find("testDivide()"), std::string::npos);
    EXPECT_EQ(b.variant(), "no-name");
}

TEST(AssemblePrompt, NoMatchWhenMutIsNotOnAnyTrace)
{
    RepoA a;
    PromptRequest req{a.method("com.example.calc.Calculator#divide").id, a.site_in("com.example.calc.Calculator#check"),
                      kCalcTest, std::nullopt, 42};
    auto res = assemble_prompt(req, a.ctx, a.pool, a.split.nonebts);
    ASSERT_TRUE(std::holds_alternative<NoMatch>(res));
    EXPECT_EQ(std::get<NoMatch>(res).reason, NoMatchReason::NoMatchingTrace);
}

TEST(AssemblePrompt, SeededSelectionIsDeterministic)
{
    auto ctx = svc_context();
    auto split = split_test_suite(ctx);
    // two traces reach b(); both pass through b itself
    auto pool = collect_stacktrace_set(split.nonebts, ctx, parse_trace_log(kSvcLog), {});
    const MethodInfo* b = resolve_method_spec(ctx, "p.Svc#b");
    PromptRequest req{b->id, ctx.throws_in(*b).at(0), "src/test/java/p/SvcTest.java", std::nullopt, 42};
    auto first = std::get<PromptBundle>(assemble_prompt(req, ctx, pool, split.nonebts));
    EXPECT_EQ(first.matching_traces, 2);
    for (int i = 0; i < 3; ++i)
        EXPECT_TRUE(std::get<PromptBundle>(assemble_prompt(req, ctx, pool, split.nonebts)).same_as(first));
    EXPECT_EQ(seeded_pick(42, 2), seeded_pick(42, 2));
    std::set<std::size_t> picks;
    for (std::uint64_t s = 0; s < 32; ++s) picks.insert(seeded_pick(s, 2));
    EXPECT_EQ(picks, (std::set<std::size_t>{0, 1}));
}

TEST(RenderInstruction, SectionsAndVariants)
{
    RepoA a;
    PromptRequest req{a.method("com.example.calc.Calculator#divide").id, a.site_in("com.example.calc.Calculator#divide"),
                      kCalcTest, std::nullopt, 42};
    auto b = std::get<PromptBundle>(assemble_prompt(req, a.ctx, a.pool, a.split.nonebts));
    EXPECT_EQ(b.rendered_instruction, read_file(fs::path(EXBT_FIXTURES) / "prompting/divide_no_name.txt"));

    PromptBundle named = b;
    named.test_name = "testDivideByZero";
    std::string with = render_instruction(named);
    EXPECT_EQ(with, b.rendered_instruction + "### Test method name\ntestDivideByZero\n");

    PromptBundle bare = b;
    bare.nonebts.clear();
    std::string text = render_instruction(bare);
    EXPECT_EQ(text.find("### Relevant non-exceptional tests"), std::string::npos);
    EXPECT_NE(text.find("### Guard expression\nb == 0\n"), std::string::npos);
    EXPECT_THROW(render_instruction(b, "other-template"), Error);
}

TEST(RenderInstruction, EveryFieldAppearsOnce)
{
    RepoA a;
    PromptRequest req{a.method("com.example.calc.Calculator#add").id, a.site_in("com.example.calc.Calculator#check"),
                      kCalcTest, std::string("testAddRejectsMinusOne"), 7};
    auto b = std::get<PromptBundle>(assemble_prompt(req, a.ctx, a.pool, a.split.nonebts));
    auto occurrences = [&](const std::string& needle) {
        int n = 0;
        for (auto p = b.rendered_instruction.find(needle); p != std::string::npos;
             p = b.rendered_instruction.find(needle, p + 1))
            ++n;
        return n;
    };
    EXPECT_EQ(occurrences(b.mut_source), 1);
    EXPECT_EQ(occurrences(b.throw_site.statement_text), 1);
    EXPECT_EQ(occurrences(b.guard.rendered), 1);
    EXPECT_EQ(occurrences(b.dest_skeleton), 1);
    for (const auto& t : b.nonebts) EXPECT_EQ(occurrences(t), 1);
    EXPECT_EQ(occurrences("### Test method name\ntestAddRejectsMinusOne\n"), 1);
    std::vector<std::string> order = {"### Task", "### Method under test", "### Target throw statement",
                                      "### Stack trace", "### Guard expression", "### Relevant non-exceptional tests",
                                      "### Destination test file", "### Test method name"};
    std::size_t last = 0;
    for (const auto& h : order) {
        auto p = b.rendered_instruction.find(h);
        ASSERT_NE(p, std::string::npos) << h;
        EXPECT_GE(p, last) << h;
        last = p;
    }
}
