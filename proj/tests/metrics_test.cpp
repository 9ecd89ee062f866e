#include "exbt/error.hpp"
#include "exbt/java/parser.hpp"
#include "exbt/metrics.hpp"
#include "exbt/util.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

using namespace exbt;
namespace fs = std::filesystem;

namespace {

/// Every method of every Java fixture file, as source text.
std::vector<std::string> fixture_methods()
{
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(EXBT_FIXTURES))
        if (e.path().extension() == ".java") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::vector<std::string> out;
    for (const auto& f : files) {
        auto unit = java::parse_compilation_unit(f.string(), read_file(f));
        for (const auto* t : java::all_types(unit))
            for (const auto& m : t->methods)
                if (!m->is_pseudo() && m->body) out.push_back(dedent_tail(unit.text(m->range)));
    }
    return out;
}

const char* kSum = "int sum(int[] xs) {\n    int total = 0;\n    for (int x : xs) total += x;\n    return total;\n}";
const char* kSumRenamed = "int sum(int[] xs) {\n    int acc = 0;\n    for (int v : xs) acc += v;\n    return acc;\n}";

class FakeRunner : public Runner {
public:
    explicit FakeRunner(RunOutcome o) : outcome(std::move(o)) {}
    std::string kind() const override { return "fake"; }
    RunOutcome run(const RunRequest& req) override
    {
        last = req;
        return outcome;
    }
    RunOutcome outcome;
    RunRequest last;
};

class UnavailableRunner : public Runner {
public:
    std::string kind() const override { return "none"; }
    RunOutcome run(const RunRequest&) override { throw Error(ErrorCode::RunnerUnavailable, "no jvm"); }
};

PromptBundle divide_bundle()
{
    PromptBundle b;
    b.dest_path = "src/test/java/c/CalcTest.java";
    b.dest_skeleton = "package c;\n\nimport org.junit.Test;\n\npublic class CalcTest {\n    private final Calc calc = new Calc();\n}\n";
    b.throw_site.method = {"c.Calc", "divide", 2, "src/main/java/c/Calc.java", 5};
    b.throw_site.line = 7;
    b.throw_site.exception_type = "ArithmeticException";
    return b;
}

const char* kGood = "@Test(expected = ArithmeticException.class)\npublic void divByZero() {\n    calc.divide(1, 0);\n}";

const char* kGoodLog = "# test: c.CalcTest#divByZero\n"
                       "java.lang.ArithmeticException: zero\n"
                       "\tat c.Calc.divide(Calc.java:7)\n"
                       "\tat c.CalcTest.divByZero(CalcTest.java:9)\n"
                       "---\n";

}  // namespace

TEST(MetricIdentities, FiftyFixtureMethods)
{
    auto methods = fixture_methods();
    ASSERT_GE(methods.size(), 50u);
    for (const auto& m : methods) {
        EXPECT_DOUBLE_EQ(bleu(m, m), 1.0) << m;
        auto cb = code_bleu_detail(m, m);
        EXPECT_FALSE(cb.degraded) << m;
        EXPECT_DOUBLE_EQ(cb.total, 1.0) << m;
        EXPECT_DOUBLE_EQ(edit_similarity(m, m), 1.0);
        EXPECT_TRUE(xmatch(m, m));
    }
}

TEST(MetricBounds, PairsOfFixtureMethods)
{
    auto methods = fixture_methods();
    for (std::size_t i = 0; i + 1 < methods.size(); i += 3) {
        const auto& a = methods[i];
        const auto& b = methods[i + 1];
        for (double s : {bleu(a, b), code_bleu(a, b), edit_similarity(a, b), bleu(b, a), code_bleu(b, a)}) {
            EXPECT_GE(s, 0.0);
            EXPECT_LE(s, 1.0);
        }
    }
}

TEST(EditSimilarity, HandComputed)
{
    EXPECT_NEAR(edit_similarity("ab", "abc"), 0.6667, 1e-4);
    EXPECT_DOUBLE_EQ(edit_similarity("", "x"), 0.0);
    EXPECT_DOUBLE_EQ(edit_similarity("", ""), 1.0);
    EXPECT_DOUBLE_EQ(edit_similarity("kitten", "sitting"), 1.0 - 3.0 / 7.0);
}

TEST(Bleu, HandComputedConstant)
{
    // p1 = 3/4, p2 = 3/4, p3 = 2/3, p4 = 1/2 (add-one from n = 2), equal lengths
    EXPECT_NEAR(bleu("a b c d", "a b c e"), 0.6580370064762462, 1e-6);
}

TEST(Bleu, DisjointAndBrevity)
{
    EXPECT_LT(bleu("x y z", "a b c"), 0.05);
    EXPECT_DOUBLE_EQ(bleu("", "a"), 0.0);
    // same precisions, shorter candidate pays exp(1 - 4/3)
    EXPECT_NEAR(bleu("a b c", "a b c d"), std::exp(1.0 - 4.0 / 3.0), 1e-12);
}

TEST(Bleu, IgnoresCommentsAndLayout)
{
    EXPECT_DOUBLE_EQ(bleu("int x = 1; // one", "int  x =\n 1;"), 1.0);
    EXPECT_DOUBLE_EQ(code_bleu("void f() { /* c */ g(); }", "void f() {\n    g();\n}"), 1.0);
}

TEST(Xmatch, NormalizedAndStrict)
{
    EXPECT_TRUE(xmatch("void f() { g(); }", "void f() {\n        g();\n}"));
    EXPECT_FALSE(xmatch("void f() { g(); }", "void f() { h(); }"));
    EXPECT_FALSE(xmatch_strict("void f() { g(); }", "void f() {\n        g();\n}"));
    EXPECT_TRUE(xmatch_strict("a", "a"));
}

TEST(CodeBleu, RenamedLocalsKeepStructure)
{
    auto cb = code_bleu_detail(kSumRenamed, kSum);
    EXPECT_FALSE(cb.degraded);
    EXPECT_DOUBLE_EQ(cb.syntax, 1.0);
    EXPECT_DOUBLE_EQ(cb.dataflow, 1.0);
    EXPECT_LT(cb.ngram, 1.0);
    EXPECT_LT(cb.weighted_ngram, 1.0);
    double lo = std::min({cb.ngram, cb.weighted_ngram, cb.syntax, cb.dataflow});
    double hi = std::max({cb.ngram, cb.weighted_ngram, cb.syntax, cb.dataflow});
    EXPECT_GT(cb.total, lo);
    EXPECT_LT(cb.total, hi);
    EXPECT_DOUBLE_EQ(cb.total, 0.25 * (cb.ngram + cb.weighted_ngram + 2.0));
}

TEST(CodeBleu, ChangedDataflowLowersScore)
{
    const char* swapped = "int sum(int[] xs) {\n    int total = 0;\n    for (int x : xs) total += total;\n    return x;\n}";
    auto cb = code_bleu_detail(swapped, kSum);
    EXPECT_LT(cb.dataflow, 1.0);
}

TEST(CodeBleu, UnparseableDegradesToBleu)
{
    const char* broken = "int sum(int[] xs) { int total = ; for (";
    auto cb = code_bleu_detail(broken, kSum);
    EXPECT_TRUE(cb.degraded);
    EXPECT_DOUBLE_EQ(cb.total, bleu(broken, kSum));
}

TEST(MatchedException, SimpleNameRule)
{
    EXPECT_TRUE(matched_exception("@Test(expected = IllegalStateException.class)\npublic void t() { f(); }",
                                  "IllegalStateException"));
    EXPECT_TRUE(matched_exception("@Test\npublic void t() {\n    assertThrows(java.io.IOException.class, () -> f());\n}",
                                  "IOException"));
    EXPECT_TRUE(matched_exception("@Test(expected = IOException.class)\npublic void t() { f(); }", "java.io.IOException"));
    EXPECT_FALSE(matched_exception("@Test\npublic void t() {\n    assertEquals(1, f());\n}", "IOException"));
    EXPECT_FALSE(matched_exception("not java at all", "IOException"));
    EXPECT_FALSE(matched_exception("@Test(expected = IOException.class)\npublic void t() { f(); }", "EOFException"));
}

TEST(FunctionalCheck, KnownGoodCoversTarget)
{
    FakeRunner runner({true, true, kGoodLog});
    auto r = functional_check(kGood, divide_bundle(), runner);
    EXPECT_EQ(r.compilable, true);
    EXPECT_EQ(r.runnable, true);
    EXPECT_EQ(r.covers_target, true);
    EXPECT_EQ(runner.last.test_id, "c.CalcTest#divByZero");
    EXPECT_EQ(runner.last.test_file, "src/test/java/c/CalcTest.java");
    // injected, and instrumented to print the exception
    EXPECT_NE(runner.last.test_source.find("    public void divByZero() {"), std::string::npos);
    EXPECT_NE(runner.last.test_source.find("__exbtEx"), std::string::npos);
    EXPECT_TRUE(ends_with(runner.last.test_source, "}\n"));
}

TEST(FunctionalCheck, StagesAreGated)
{
    auto b = divide_bundle();
    FakeRunner no_compile({false, false, ""});
    auto r = functional_check(kGood, b, no_compile);
    EXPECT_EQ(r.compilable, false);
    EXPECT_FALSE(r.runnable);
    EXPECT_FALSE(r.covers_target);

    FakeRunner failing({true, false, ""});
    r = functional_check(kGood, b, failing);
    EXPECT_EQ(r.runnable, false);
    EXPECT_FALSE(r.covers_target);

    // passes, but the exception came from another line
    std::string other = kGoodLog;
    other.replace(other.find("Calc.java:7"), 11, "Calc.java:9");
    FakeRunner elsewhere({true, true, other});
    EXPECT_EQ(functional_check(kGood, b, elsewhere).covers_target, false);

    UnavailableRunner none;
    r = functional_check(kGood, b, none);
    EXPECT_FALSE(r.compilable);
    EXPECT_FALSE(r.runnable);
    EXPECT_FALSE(r.covers_target);
}

TEST(RecordedRunner, DigestThenSubstring)
{
    std::string json = R"({"runs": [
        {"digest": ")" + sha256_hex(kGood) + R"(", "compiled": true, "ran_ok": true, "log": "x"},
        {"contains": "missingSymbol", "compiled": false, "ran_ok": false}]})";
    auto runner = RecordedRunner::from_json_text(json);
    RunRequest req;
    req.candidate = kGood;
    EXPECT_TRUE(runner.run(req).ran_ok);
    req.candidate = "@Test void t() { missingSymbol(); }";
    EXPECT_FALSE(runner.run(req).compiled);
    req.candidate = "other";
    try {
        runner.run(req);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::RunnerUnavailable);
    }
}

TEST(CommandRunner, ExitCodeProtocol)
{
    fs::path repo = fs::temp_directory_path() / "exbt-cmd-runner-repo";
    fs::remove_all(repo);
    write_file(repo / "marker.txt", "m");
    RunRequest req{"src/T.java", "class T {}\n", "T#t", "c"};

    CommandRunner ok("test -f marker.txt && test -f src/T.java && printf '%s' \"$EXBT_TEST\" > \"$EXBT_LOG\"", repo);
    auto out = ok.run(req);
    EXPECT_TRUE(out.compiled);
    EXPECT_TRUE(out.ran_ok);
    EXPECT_EQ(out.log, "T#t");

    EXPECT_FALSE(CommandRunner("exit 3", repo).run(req).compiled);
    auto failed = CommandRunner("exit 1", repo).run(req);
    EXPECT_TRUE(failed.compiled);
    EXPECT_FALSE(failed.ran_ok);
    EXPECT_THROW(CommandRunner("exit 127", repo).run(req), Error);
    EXPECT_THROW(CommandRunner("", repo).run(req), Error);
    // the scratch copy is gone and the repo untouched
    EXPECT_FALSE(fs::exists(repo / "src/T.java"));
    fs::remove_all(repo);
}

TEST(Aggregate, ThrowCovCountsTargets)
{
    std::vector<std::string> targets = {"A.java:3", "B.java:7", "C.java:9"};
    auto cand = [](std::string t, bool cov) {
        CandidateReport r;
        r.target = std::move(t);
        r.compilable = true;
        r.runnable = true;
        r.covers_target = cov;
        r.matched_e = true;
        return r;
    };
    std::vector<CandidateReport> rs = {cand("A.java:3", true), cand("B.java:7", true), cand("C.java:9", false)};
    auto a = aggregate(rs, targets);
    EXPECT_DOUBLE_EQ(a.throw_cov, 2.0 / 3.0);
    EXPECT_EQ(a.covered_targets, 2);
    EXPECT_DOUBLE_EQ(a.runnable, 1.0);
    EXPECT_FALSE(a.partial);

    // a second covering candidate for A still counts A once
    rs.push_back(cand("A.java:3", true));
    EXPECT_DOUBLE_EQ(aggregate(rs, targets).throw_cov, 2.0 / 3.0);
}

TEST(Aggregate, EmptyAndPartial)
{
    auto a = aggregate({}, {});
    EXPECT_EQ(a.throw_cov, 0.0);
    EXPECT_EQ(a.bleu, 0.0);
    EXPECT_EQ(a.compilable, 0.0);
    EXPECT_EQ(aggregate({}, {"A.java:1"}).throw_cov, 0.0);

    CandidateReport no_runner;
    no_runner.target = "A.java:1";
    no_runner.bleu = 0.5;
    CandidateReport no_compile;
    no_compile.target = "A.java:1";
    no_compile.compilable = false;
    a = aggregate({no_runner, no_compile}, {"A.java:1"});
    EXPECT_TRUE(a.partial);
    EXPECT_DOUBLE_EQ(a.bleu, 0.5);
    EXPECT_DOUBLE_EQ(a.compilable, 0.0);
}

TEST(Aggregate, ScoredCandidatesKeepInvariants)
{
    auto r = score_candidate("c/Calc.java:7", kGood, std::string(kGood), "ArithmeticException");
    EXPECT_EQ(r.xmatch, true);
    EXPECT_DOUBLE_EQ(*r.bleu, 1.0);
    EXPECT_TRUE(r.matched_e);
    auto unref = score_candidate("c/Calc.java:7", kGood, std::nullopt, "ArithmeticException");
    EXPECT_FALSE(unref.bleu);
    EXPECT_FALSE(unref.xmatch);
}

TEST(BestOfK, MaximizesEachMetricIndependently)
{
    CandidateReport a, b;
    a.target = b.target = "T.java:1";
    a.bleu = 0.9;
    a.compilable = false;
    b.bleu = 0.2;
    b.compilable = true;
    b.runnable = true;
    b.covers_target = true;
    auto best = best_of_k({a, b});
    ASSERT_EQ(best.size(), 1u);
    EXPECT_DOUBLE_EQ(*best[0].bleu, 0.9);
    EXPECT_EQ(best[0].covers_target, true);
    EXPECT_EQ(best[0].compilable, true);
}

TEST(RenderTable, PaperColumnOrder)
{
    AggregateReport a;
    a.throw_cov = 2.0 / 3.0;
    a.best_of_k = true;
    std::string t = render_table(a);
    std::vector<std::string> cols = {"BLEU", "CodeBLEU", "EditSim", "xMatch", "|", "Compilable%", "Matched-E%",
                                     "Runnable%", "ThrowCov%"};
    std::size_t at = 0;
    for (const auto& c : cols) {
        auto p = t.find(c, at);
        ASSERT_NE(p, std::string::npos) << c;
        at = p + c.size();
    }
    EXPECT_NE(t.find("66.7"), std::string::npos);
    EXPECT_NE(t.find("best-of-k"), std::string::npos);
}
