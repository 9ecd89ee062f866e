#include "exbt/corpus.hpp"
#include "exbt/serialize.hpp"
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
    TraceLog log = parse_trace_log(read_file(repo_a() / ".exbt/ebt.log"));
};

const CorpusExample& example(const CorpusResult& r, std::string_view name)
{
    for (const auto& e : r.examples)
        if (ends_with(e.id, "#" + std::string(name))) return e;
    throw std::runtime_error("no example " + std::string(name));
}

// Lib.parse is called by one non-EBT directly; LibTest holds two more non-EBTs.
const char* kLib = R"java(package l;
public class Lib {
    public int parse(String s) {
        if (s == null) throw new IllegalArgumentException("null");
        return s.length();
    }
    public int other() {
        return 1;
    }
}
)java";

const char* kLibTest = R"java(package l;
import org.junit.Test;
import static org.junit.Assert.*;
public class LibTest {
    private final Lib lib = new Lib();
    @Test
    public void parsesWord() {
        assertEquals(1, lib.parse("a"));
    }
    @Test
    public void otherIsOne() {
        assertEquals(1, lib.other());
    }
    @Test
    public void otherIsStillOne() {
        assertEquals(1, lib.other());
        assertEquals(1, lib.other());
    }
    @Test(expected = IllegalArgumentException.class)
    public void rejectsNull() {
        lib.parse(null);
    }
}
)java";

}  // namespace

TEST(CollectTrainingCorpus, RepoFixtureBuildsTwoExamples)
{
    RepoA a;
    ASSERT_EQ(a.split.ebts.size(), 2u);
    auto c = collect_training_corpus(a.split.ebts, a.split.nonebts, a.ctx, a.log, "repoA");
    ASSERT_EQ(c.examples.size(), 2u);
    EXPECT_TRUE(c.skipped.empty());

    const auto& div = example(c, "testDivideByZero");
    EXPECT_EQ(div.prompt.mut.name, "divide");
    EXPECT_EQ(div.prompt.throw_site.line, 8);
    EXPECT_EQ(div.prompt.guard.rendered, "b == 0");
    EXPECT_EQ(div.prompt.dest_path, "src/test/java/com/example/calc/CalculatorTest.java");
    EXPECT_EQ(div.prompt.test_name, "testDivideByZero");
    ASSERT_EQ(div.prompt.nonebts.size(), 2u);
    EXPECT_NE(div.prompt.nonebts[0].find("testDivide()"), std::string::npos);
    EXPECT_NE(div.prompt.nonebts[1].find("testAdd()"), std::string::npos);

    const auto& add = example(c, "testAddRejectsMinusOne");
    EXPECT_EQ(add.prompt.mut.name, "add");
    ASSERT_EQ(add.prompt.trace.frames.size(), 2u);
    EXPECT_EQ(add.prompt.throw_site.line, 20);
    EXPECT_EQ(add.prompt.guard.rendered, "(a + 1) == 0");
    EXPECT_NE(add.prompt.nonebts[0].find("testAdd()"), std::string::npos);
}

TEST(CollectTrainingCorpus, InvariantsHold)
{
    RepoA a;
    auto c = collect_training_corpus(a.split.ebts, a.split.nonebts, a.ctx, a.log, "repoA");
    EXPECT_LE(c.examples.size(), a.split.ebts.size());
    std::set<std::string> golds;
    for (const auto& e : c.examples) {
        EXPECT_TRUE(golds.insert(e.gold_ebt).second);
        EXPECT_EQ(e.prompt.rendered_instruction.find(e.gold_ebt), std::string::npos) << e.id;
        EXPECT_EQ(e.prompt.dest_skeleton.find("@Test"), std::string::npos);
        EXPECT_EQ(classify_test(e.gold_ebt).kind, TestKind::EBT);
    }
}

TEST(CollectTrainingCorpus, SkipsWithReasons)
{
    RepoA a;
    // only test frames: nothing left after exclusion
    auto log = parse_trace_log("# test: com.example.calc.CalculatorTest#testDivideByZero\n"
                               "\tat com.example.calc.CalculatorTest.testDivideByZero(CalculatorTest.java:24)\n---\n");
    auto c = collect_training_corpus(a.split.ebts, a.split.nonebts, a.ctx, log, "repoA");
    EXPECT_TRUE(c.examples.empty());
    ASSERT_EQ(c.skipped.size(), 2u);
    EXPECT_EQ(c.skipped[0].reason, "EmptyAfterExclusion");
    EXPECT_EQ(c.skipped[1].reason, "NoTrace");
}

TEST(CollectTrainingCorpus, NoRelevantNonEbtLeavesSlotEmpty)
{
    RepoA a;
    auto c = collect_training_corpus(a.split.ebts, {}, a.ctx, a.log, "repoA");
    ASSERT_EQ(c.examples.size(), 2u);
    for (const auto& e : c.examples) {
        EXPECT_TRUE(e.prompt.nonebts.empty());
        EXPECT_EQ(e.prompt.rendered_instruction.find("### Relevant non-exceptional tests"), std::string::npos);
    }
}

TEST(LinkRelevantNonEbts, SameMutFirstThenSameFileWithinBudget)
{
    auto ctx = build_context({{"src/main/java/l/Lib.java", kLib}, {"src/test/java/l/LibTest.java", kLibTest}});
    auto split = split_test_suite(ctx);
    ASSERT_EQ(split.nonebts.size(), 3u);
    const MethodInfo* parse = resolve_method_spec(ctx, "l.Lib#parse");
    const std::string dest = "src/test/java/l/LibTest.java";
    // each of the first two tests is 8 whitespace tokens
    auto two = relevant_nonebts(parse->id, dest, split.nonebts, ctx, {}, 16);
    ASSERT_EQ(two.size(), 2u);
    EXPECT_EQ(two[0]->id.name, "parsesWord");
    EXPECT_EQ(two[1]->id.name, "otherIsOne");
    EXPECT_EQ(relevant_nonebts(parse->id, dest, split.nonebts, ctx, {}, 1000).size(), 3u);
    EXPECT_TRUE(relevant_nonebts(parse->id, "src/test/java/l/None.java", {}, ctx, {}, 1000).empty());
    // listed by both rules, kept once
    auto once = relevant_nonebts(parse->id, dest, split.nonebts, ctx, {split.nonebts[0].id}, 1000);
    std::set<std::string> names;
    for (const auto* t : once) names.insert(t->id.name);
    EXPECT_EQ(names.size(), once.size());
}

TEST(TokenCount, Whitespace)
{
    EXPECT_EQ(token_count(""), 0);
    EXPECT_EQ(token_count("  a\tb\nc  "), 3);
}

TEST(CorpusJsonl, RoundTrip)
{
    RepoA a;
    auto c = collect_training_corpus(a.split.ebts, a.split.nonebts, a.ctx, a.log, "repoA");
    std::string text = write_corpus(c.examples);
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 2);
    auto back = read_corpus(text);
    ASSERT_EQ(back.size(), c.examples.size());
    for (std::size_t i = 0; i < back.size(); ++i) EXPECT_TRUE(back[i].same_as(c.examples[i]));
    EXPECT_EQ(write_corpus(back), text);
    auto row = json::parse(text.substr(0, text.find('\n')));
    for (const char* field : {"id", "repo", "mut", "throw", "dest", "trace", "guard", "nonebts", "gold_ebt", "variant"})
        EXPECT_TRUE(row.contains(field)) << field;
    EXPECT_EQ(row["variant"], "with-name");
}

TEST(TestIdMatches, BinaryAndDottedNames)
{
    MethodId id{"a.Outer.Inner", "t", 0, "src/test/java/a/Outer.java", 3};
    EXPECT_TRUE(test_id_matches("a.Outer$Inner#t", id));
    EXPECT_TRUE(test_id_matches("a.Outer.Inner#t", id));
    EXPECT_FALSE(test_id_matches("a.Outer$Inner#u", id));
    EXPECT_FALSE(test_id_matches("a.Outer$Inner", id));
}
