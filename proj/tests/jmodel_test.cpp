#include "exbt/error.hpp"
#include "exbt/jmodel.hpp"
#include "exbt/util.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <set>

using namespace exbt;
namespace fs = std::filesystem;

namespace {

RepoContext small_repo(std::vector<std::pair<std::string, std::string>> files)
{
    return build_context(std::move(files));
}

const char* kHcheck = R"java(package p;

public class A {
    public void h(int a) {
        check(a + 1);
    }

    void check(int v) {
        if (v == 0) {
            throw new IllegalStateException();
        }
    }
}
)java";

fs::path scratch_dir(const std::string& name)
{
    auto p = fs::temp_directory_path() / ("exbt_jmodel_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::set<std::pair<std::string, int>> site_set(const std::vector<ThrowSite>& v)
{
    std::set<std::pair<std::string, int>> out;
    for (const auto& s : v) out.emplace(s.file(), s.line);
    return out;
}

}  // namespace

TEST(LoadRepo, ThreeClassesGiveThreeUnits)
{
    auto ctx = small_repo({
        {"src/main/java/p/A.java", "package p; class A {}"},
        {"src/main/java/p/B.java", "package p; class B {}"},
        {"src/test/java/p/ATest.java", "package p; class ATest {}"},
    });
    EXPECT_EQ(ctx.units.size(), 3u);
    EXPECT_EQ(ctx.main_files.size(), 2u);
    EXPECT_EQ(ctx.test_files, std::vector<std::string>{"src/test/java/p/ATest.java"});
    EXPECT_TRUE(ctx.warnings.empty());
}

TEST(LoadRepo, BrokenFileBecomesWarning)
{
    auto dir = scratch_dir("broken");
    write_file(dir / "src/main/java/Good.java", "class Good { void f() {} }");
    write_file(dir / "src/main/java/Bad.java", "class Bad { void f( { }");
    auto ctx = load_repo(dir);
    ASSERT_EQ(ctx.warnings.size(), 1u);
    EXPECT_EQ(ctx.warnings[0].file, "src/main/java/Bad.java");
    ASSERT_EQ(ctx.units.size(), 1u);
    EXPECT_EQ(ctx.units[0].path, "src/main/java/Good.java");
    fs::remove_all(dir);
}

TEST(LoadRepo, EmptyDirectoryHasNoSources)
{
    auto dir = scratch_dir("empty");
    try {
        load_repo(dir);
        FAIL() << "expected NoJavaSources";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NoJavaSources);
    }
    fs::remove_all(dir);
}

TEST(LoadRepo, MissingRootIsIoError)
{
    try {
        load_repo("/nonexistent/exbt/root");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::IoError);
    }
}

TEST(LoadRepo, SourceRootOverride)
{
    LoadOptions opts;
    opts.roots = SourceRoots{{"lib/"}, {"checks/"}};
    auto ctx = build_context({{"lib/A.java", "class A {}"}, {"checks/ATest.java", "class ATest {}"}}, opts);
    EXPECT_EQ(ctx.main_files, std::vector<std::string>{"lib/A.java"});
    EXPECT_EQ(ctx.test_files, std::vector<std::string>{"checks/ATest.java"});
}

TEST(LoadRepo, IdenticalBytesGiveIdenticalContexts)
{
    auto a = load_repo(fs::path(EXBT_FIXTURES) / "repoA");
    auto b = load_repo(fs::path(EXBT_FIXTURES) / "repoA");
    ASSERT_EQ(a.methods().size(), b.methods().size());
    for (std::size_t i = 0; i < a.methods().size(); ++i) EXPECT_EQ(a.methods()[i].id, b.methods()[i].id);
    EXPECT_EQ(a.call_edges, b.call_edges);
    EXPECT_EQ(a.source_digest(Scope::All), b.source_digest(Scope::All));
}

TEST(FindThrowSites, TwoThrowsInOneMethod)
{
    auto ctx = small_repo({{"src/main/java/T.java", R"java(class T {
    void f(int x) {
        if (x < 0) throw new IllegalArgumentException("neg");
        if (x > 9) throw new IllegalStateException("big");
    }
}
)java"}});
    auto sites = find_throw_sites(ctx, Scope::All);
    ASSERT_EQ(sites.size(), 2u);
    EXPECT_EQ(sites[0].method, sites[1].method);
    EXPECT_EQ(sites[0].line, 3);
    EXPECT_EQ(sites[1].line, 4);
    EXPECT_EQ(sites[0].exception_type, "IllegalArgumentException");
    EXPECT_EQ(sites[1].statement_text, "throw new IllegalStateException(\"big\");");
}

TEST(FindThrowSites, LambdaThrowAttributedToEnclosingMethod)
{
    auto ctx = small_repo({{"src/main/java/T.java", R"java(class T {
    void run(java.util.List<Integer> xs) {
        xs.forEach(x -> {
            if (x == null) throw new NullPointerException();
        });
    }
}
)java"}});
    auto sites = find_throw_sites(ctx, Scope::All);
    ASSERT_EQ(sites.size(), 1u);
    EXPECT_EQ(sites[0].method.name, "run");
    EXPECT_EQ(sites[0].line, 4);
}

TEST(FindThrowSites, AnonymousClassAndInitializers)
{
    auto ctx = small_repo({{"src/main/java/T.java", R"java(class T {
    static { if (Boolean.getBoolean("x")) throw new Error(); }
    Runnable r() {
        return new Runnable() {
            public void run() { throw new UnsupportedOperationException(); }
        };
    }
}
)java"}});
    auto sites = find_throw_sites(ctx, Scope::All);
    ASSERT_EQ(sites.size(), 2u);
    EXPECT_EQ(sites[0].method.name, "<clinit>");
    EXPECT_EQ(sites[1].method.name, "r");
}

TEST(FindThrowSites, RethrowUsesDeclaredType)
{
    auto ctx = small_repo({{"src/main/java/T.java", R"java(class T {
    void f() {
        try {
            g();
        } catch (java.io.IOException e) {
            throw e;
        }
    }
    void g() throws java.io.IOException {}
}
)java"}});
    auto sites = find_throw_sites(ctx, Scope::All);
    ASSERT_EQ(sites.size(), 1u);
    EXPECT_EQ(sites[0].exception_type, "java.io.IOException");
}

TEST(FindThrowSites, NoThrows)
{
    auto ctx = small_repo({{"src/main/java/T.java", "class T { int f() { return 1; } }"}});
    EXPECT_TRUE(find_throw_sites(ctx, Scope::All).empty());
}

TEST(FindThrowSites, AllIsSupersetOfMainOnly)
{
    auto ctx = load_repo(fs::path(EXBT_FIXTURES) / "repoA");
    auto main = site_set(find_throw_sites(ctx, Scope::MainOnly));
    auto all = site_set(find_throw_sites(ctx, Scope::All));
    EXPECT_EQ(main.size(), 3u);
    EXPECT_TRUE(std::includes(all.begin(), all.end(), main.begin(), main.end()));
}

TEST(ReachableThrows, CallerReachesCalleeThrow)
{
    auto ctx = small_repo({{"src/main/java/p/A.java", kHcheck}});
    const MethodInfo* h = resolve_method_spec(ctx, "p.A#h");
    ASSERT_NE(h, nullptr);
    auto r = reachable_throws(ctx, h->id);
    ASSERT_EQ(r.size(), 1u);
    ASSERT_EQ(r[0].path.size(), 2u);
    EXPECT_EQ(r[0].path[0].name, "h");
    EXPECT_EQ(r[0].path[1].name, "check");
    EXPECT_EQ(r[0].site.line, 10);
}

TEST(ReachableThrows, OwnThrowHasPathOfOne)
{
    auto ctx = small_repo({{"src/main/java/p/A.java", kHcheck}});
    const MethodInfo* check = resolve_method_spec(ctx, "p.A.check");
    ASSERT_NE(check, nullptr);
    auto r = reachable_throws(ctx, check->id, 1);
    ASSERT_EQ(r.size(), 1u);
    EXPECT_EQ(r[0].path.size(), 1u);
}

TEST(ReachableThrows, RecursivePairTerminates)
{
    auto ctx = small_repo({{"src/main/java/R.java", R"java(class R {
    int even(int n) { return n == 0 ? 1 : odd(n - 1); }
    int odd(int n) { return n == 0 ? 0 : even(n - 1); }
}
)java"}});
    const MethodInfo* even = resolve_method_spec(ctx, "R#even/1");
    ASSERT_NE(even, nullptr);
    EXPECT_TRUE(reachable_throws(ctx, even->id, 50).empty());
}

TEST(ReachableThrows, MonotoneInDepth)
{
    auto ctx = small_repo({{"src/main/java/C.java", R"java(class C {
    void a() { b(); if (flag()) throw new IllegalStateException(); }
    void b() { c(); }
    void c() { throw new UnsupportedOperationException(); }
    boolean flag() { return true; }
}
)java"}});
    const MethodInfo* a = resolve_method_spec(ctx, "C#a");
    ASSERT_NE(a, nullptr);
    std::set<std::pair<std::string, int>> prev;
    for (int d = 1; d <= 4; ++d) {
        std::vector<ThrowSite> sites;
        for (auto& r : reachable_throws(ctx, a->id, d)) sites.push_back(r.site);
        auto cur = site_set(sites);
        EXPECT_TRUE(std::includes(cur.begin(), cur.end(), prev.begin(), prev.end())) << "depth " << d;
        prev = cur;
    }
    EXPECT_EQ(prev.size(), 2u);
}

TEST(ReachableThrows, UnknownMethod)
{
    auto ctx = small_repo({{"src/main/java/p/A.java", kHcheck}});
    MethodId ghost{"p.A", "ghost", 0, "src/main/java/p/A.java", 1};
    try {
        reachable_throws(ctx, ghost);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::UnknownMethod);
    }
}

TEST(CallGraph, ConstructorsAndOverloads)
{
    auto ctx = small_repo({{"src/main/java/q/K.java", R"java(package q;
class K {
    K() { this(1); }
    K(int x) { if (x < 0) throw new IllegalArgumentException(); }
    static K make() { return new K(); }
    void f(int a) {}
    void f(String s) {}
    void g() { f(1); }
}
)java"}});
    const MethodInfo* make = resolve_method_spec(ctx, "q.K#make");
    ASSERT_NE(make, nullptr);
    auto r = reachable_throws(ctx, make->id);
    ASSERT_EQ(r.size(), 1u);
    EXPECT_EQ(r[0].path.size(), 3u);
    int f_edges = 0;
    for (const auto& e : ctx.call_edges)
        if (e.caller.name == "g" && e.callee.name == "f") ++f_edges;
    EXPECT_EQ(f_edges, 2);
}

TEST(ResolveFrame, NestedLambdaAndAnonymousFrames)
{
    auto ctx = small_repo({{"src/main/java/p/O.java", R"java(package p;
class O {
    static class In {
        void m() {
            Runnable r = () -> {
                throw new IllegalStateException();
            };
        }
    }
}
)java"}});
    auto [res, m] = ctx.resolve_frame("p.O$In", "lambda$m$0", 6);
    ASSERT_EQ(res, FrameResolution::Ok);
    EXPECT_EQ(m->id.name, "m");
    EXPECT_EQ(ctx.resolve_frame("p.Missing", "m", 3).first, FrameResolution::UnknownClass);
    EXPECT_EQ(ctx.resolve_frame("p.O$In", "m", 99).first, FrameResolution::OutOfSpan);
}
