#include "exbt/prompting.hpp"

#include "exbt/corpus.hpp"
#include "exbt/error.hpp"
#include "exbt/serialize.hpp"
#include "exbt/stages.hpp"
#include "exbt/util.hpp"

#include <algorithm>
#include <random>
#include <set>

namespace exbt {

namespace fs = std::filesystem;

namespace {

const MethodInfo* frame_method(const RepoContext& ctx, const Frame& f)
{
    auto [res, m] = resolve_frame(ctx, f);
    return res == FrameResolution::Ok ? m : nullptr;
}

std::string file_stem(std::string_view path)
{
    std::string name = file_name(path);
    auto dot = name.rfind('.');
    return dot == std::string::npos ? name : name.substr(0, dot);
}

std::string section(std::string_view title, std::string_view body)
{
    std::string out = "### " + std::string(title) + "\n" + std::string(body);
    if (out.back() != '\n') out.push_back('\n');
    return out;
}

}  // namespace

// ---- pool ---------------------------------------------------------------------

TracePool collect_stacktrace_set(const std::vector<TestMethod>& nonebts, const RepoContext& ctx,
                                 const TraceLog& log,
                                 const std::vector<std::pair<std::string, OffsetMap>>& offsets)
{
    count_stage("collect_stacktrace_set");
    TracePool pool;
    pool.malformed_blocks = log.malformed_blocks;
    pool.warnings = log.warnings;
    std::set<std::tuple<MethodId, std::vector<std::tuple<std::string, std::string, int>>, int, std::string>> seen;
    for (const auto& entry : log.entries) {
        auto test = std::find_if(nonebts.begin(), nonebts.end(),
                                 [&](const TestMethod& t) { return test_id_matches(entry.test_id, t.id); });
        if (test == nonebts.end()) {
            ++pool.unattributed_blocks;
            continue;
        }
        StackTrace r;
        try {
            r = exclude_test_and_util_frames(normalize_lines(entry.trace, ctx, offsets), ctx, "");
        } catch (const Error& e) {
            pool.warnings.push_back(entry.test_id + ": " + e.what());
            continue;
        }
        const MethodInfo* inner = frame_method(ctx, r.frames.back());
        if (!inner) {
            pool.warnings.push_back(entry.test_id + ": innermost frame " + render_frame(r.frames.back()) +
                                    " does not resolve");
            continue;
        }
        for (const auto& site : ctx.throws_in(*inner)) {
            TracePoolEntry e{r, test->id, site};
            e.trace.frames.back().line = site.line;
            std::vector<std::tuple<std::string, std::string, int>> key;
            for (const auto& f : e.trace.frames) key.emplace_back(f.class_fqn, f.method, f.line);
            if (!seen.insert({e.source_test, key, site.line, site.file()}).second) continue;
            pool.entries.push_back(std::move(e));
        }
    }
    std::stable_sort(pool.entries.begin(), pool.entries.end(), [](const TracePoolEntry& a, const TracePoolEntry& b) {
        if (a.throw_site.file() != b.throw_site.file()) return a.throw_site.file() < b.throw_site.file();
        if (a.throw_site.line != b.throw_site.line) return a.throw_site.line < b.throw_site.line;
        return a.source_test < b.source_test;
    });
    count_stage("pool_entries", static_cast<long>(pool.entries.size()));
    return pool;
}

std::string pool_cache_key(const RepoContext& ctx, std::string_view log_text)
{
    return sha256_hex(ctx.source_digest(Scope::MainOnly) + "\n" + sha256_hex(log_text));
}

TracePool load_or_build_pool(const fs::path& cache_dir, const std::vector<TestMethod>& nonebts,
                             const RepoContext& ctx, std::string_view log_text,
                             const std::vector<std::pair<std::string, OffsetMap>>& offsets, bool* cache_hit)
{
    std::string key = pool_cache_key(ctx, log_text);
    fs::path file = cache_dir / ("pool-" + key + ".json");
    if (cache_hit) *cache_hit = false;
    if (fs::exists(file)) {
        try {
            TracePool p = pool_from_json(nlohmann::json::parse(read_file(file)));
            if (p.key == key) {
                if (cache_hit) *cache_hit = true;
                return p;
            }
        } catch (const std::exception&) {
            // unreadable cache entries are rebuilt
        }
    }
    TracePool p = collect_stacktrace_set(nonebts, ctx, parse_trace_log(log_text), offsets);
    p.key = key;
    write_file(file, to_json(p).dump(2) + "\n");
    return p;
}

CoverageIndex build_coverage_index(const TracePool& pool, const RepoContext& ctx)
{
    CoverageIndex idx;
    for (const auto& e : pool.entries) {
        for (const auto& f : e.trace.frames) {
            const MethodInfo* m = frame_method(ctx, f);
            if (!m) continue;
            idx.by_class[m->id.fqn].insert(e.source_test.decl_file);
            idx.by_method[m->id.key()].insert(e.source_test.decl_file);
        }
    }
    return idx;
}

// ---- destination file ------------------------------------------------------------

std::optional<DestChoice> select_dest_test_file(const MethodId& mut, const RepoContext& ctx,
                                                const CoverageIndex* coverage)
{
    count_stage("select_dest_test_file");
    const java::CompilationUnit* u = ctx.unit(mut.decl_file);
    std::string pkg_dir = u ? u->package_name : "";
    std::replace(pkg_dir.begin(), pkg_dir.end(), '.', '/');
    std::string fnm = file_stem(mut.decl_file);
    std::vector<std::string> tests = ctx.test_files;
    std::sort(tests.begin(), tests.end());
    auto named = [&](const std::string& file) -> std::optional<std::string> {
        std::string rel = pkg_dir.empty() ? file : pkg_dir + "/" + file;
        for (const auto& t : tests)
            if (t == rel || ends_with(t, "/" + rel)) return t;
        return std::nullopt;
    };
    if (auto p = named(fnm + "Test.java")) {
        count_stage("dest_by_name");
        return DestChoice{*p, DestRule::NamedTest};
    }
    if (auto p = named("Test" + fnm + ".java")) {
        count_stage("dest_by_name");
        return DestChoice{*p, DestRule::TestNamed};
    }
    if (coverage) {
        for (const auto* table : {&coverage->by_method, &coverage->by_class}) {
            auto it = table->find(table == &coverage->by_method ? mut.key() : mut.fqn);
            if (it != table->end() && !it->second.empty()) {
                count_stage("dest_by_coverage");
                return DestChoice{*it->second.begin(), DestRule::Coverage};
            }
        }
    }
    return std::nullopt;
}

std::string dest_skeleton(const RepoContext& ctx, std::string_view dest_path)
{
    const java::CompilationUnit* u = ctx.unit(dest_path);
    if (!u) throw Error(ErrorCode::IoError, "destination file not in repo: " + std::string(dest_path));
    const std::string& src = u->source;
    std::vector<std::pair<std::size_t, std::size_t>> cuts;
    for (const java::TypeDecl* t : java::all_types(*u)) {
        for (const auto& m : t->methods) {
            if (!is_test_method(*m)) continue;
            std::size_t b = m->range.begin, e = m->range.end;
            std::size_t ls = b;
            while (ls > 0 && (src[ls - 1] == ' ' || src[ls - 1] == '\t')) --ls;
            std::size_t le = e;
            while (le < src.size() && (src[le] == ' ' || src[le] == '\t' || src[le] == '\r')) ++le;
            if ((ls == 0 || src[ls - 1] == '\n') && (le == src.size() || src[le] == '\n')) {
                b = ls;
                e = le < src.size() ? le + 1 : le;
                // drop the blank line that separated it from the previous member
                if (b >= 1) {
                    std::size_t pb = b - 1;
                    std::size_t ps = pb;
                    while (ps > 0 && src[ps - 1] != '\n') --ps;
                    if (trim(std::string_view(src).substr(ps, pb - ps)).empty() && ps > 0) b = ps;
                }
            }
            cuts.emplace_back(b, e);
        }
    }
    std::sort(cuts.begin(), cuts.end());
    std::string out;
    std::size_t cur = 0;
    for (auto [b, e] : cuts) {
        if (b < cur) b = cur;
        if (b > cur) out.append(src, cur, b - cur);
        cur = std::max(cur, e);
    }
    out.append(src, cur, std::string::npos);
    return out;
}

// ---- prompt assembly ---------------------------------------------------------------

std::string_view no_match_reason_name(NoMatchReason r)
{
    return r == NoMatchReason::NoDestFile ? "no-dest-file" : "no-matching-trace";
}

bool PromptBundle::same_as(const PromptBundle& o) const
{
    return to_json(*this) == to_json(o);
}

std::size_t seeded_pick(std::uint64_t seed, std::size_t n)
{
    if (n == 0) throw std::invalid_argument("seeded_pick over an empty range");
    std::mt19937_64 rng(seed);
    return static_cast<std::size_t>(rng() % n);
}

std::optional<StackTrace> trace_from_mut(const StackTrace& t, const MethodId& mut, const RepoContext& ctx)
{
    for (std::size_t i = 0; i < t.frames.size(); ++i) {
        const MethodInfo* m = frame_method(ctx, t.frames[i]);
        if (m && m->id == mut) {
            StackTrace out;
            out.frames.assign(t.frames.begin() + static_cast<std::ptrdiff_t>(i), t.frames.end());
            return out;
        }
    }
    return std::nullopt;
}

PromptResult assemble_prompt(const PromptRequest& req, const RepoContext& ctx, const TracePool& pool,
                             const std::vector<TestMethod>& nonebts)
{
    count_stage("assemble_prompt");
    const MethodInfo* mut = ctx.find(req.mut);
    if (!mut) throw Error(ErrorCode::UnknownMethod, "method under test not in repo: " + req.mut.key());

    std::vector<StackTrace> matching;
    std::set<MethodId> same_mut;
    for (const auto& e : pool.entries) {
        const MethodInfo* first = frame_method(ctx, e.trace.frames.front());
        if (first && first->id == req.mut) same_mut.insert(e.source_test);
        if (!(e.throw_site == req.throw_site)) continue;
        if (auto cut = trace_from_mut(e.trace, req.mut, ctx)) matching.push_back(std::move(*cut));
    }
    if (matching.empty())
        return NoMatch{NoMatchReason::NoMatchingTrace,
                       "no pool trace reaches " + req.throw_site.file() + ":" + std::to_string(req.throw_site.line) +
                           " through " + req.mut.key()};

    PromptBundle b;
    b.mut = req.mut;
    b.mut_source = dedent_tail(ctx.unit_of(*mut).text(mut->decl->range));
    b.throw_site = req.throw_site;
    b.dest_path = req.dest_path;
    b.dest_skeleton = dest_skeleton(ctx, req.dest_path);
    b.trace = matching[seeded_pick(req.seed, matching.size())];
    b.guard = compute_guard_expression(b.trace, ctx);
    for (const TestMethod* t : relevant_nonebts(req.mut, req.dest_path, nonebts, ctx, same_mut, req.nonebt_budget))
        b.nonebts.push_back(dedent_tail(t->body_text));
    b.test_name = req.test_name;
    b.seed = req.seed;
    b.matching_traces = static_cast<int>(matching.size());
    b.rendered_instruction = render_instruction(b, b.template_id);
    count_stage("prompt_bundles");
    return b;
}

std::string render_instruction(const PromptBundle& b, std::string_view template_id)
{
    if (template_id != kTemplateId) throw Error(ErrorCode::ConfigError, "unknown template " + std::string(template_id));
    std::string out = "[" + std::string(template_id) + "]\n";
    out += section("Task",
                   "Write one JUnit test method that calls the method under test so that the target throw statement "
                   "is executed, and assert that its exception is thrown. Follow the conventions of the "
                   "destination test file and return only the test method.");
    out += section("Method under test", b.mut.qualified_name() + "\n" + b.mut_source);
    out += section("Target throw statement", b.throw_site.file() + ":" + std::to_string(b.throw_site.line) + "\n" +
                                                 b.throw_site.statement_text + "\nException: " +
                                                 b.throw_site.exception_type);
    if (!b.trace.empty()) {
        std::string frames;
        for (const auto& f : b.trace.frames) frames += render_frame(f) + "\n";
        out += section("Stack trace (method under test first)", frames);
    }
    if (!b.guard.conditions.empty()) out += section("Guard expression", b.guard.rendered);
    if (!b.nonebts.empty()) {
        std::string tests;
        for (std::size_t i = 0; i < b.nonebts.size(); ++i) tests += (i ? "\n\n" : "") + b.nonebts[i];
        out += section("Relevant non-exceptional tests", tests);
    }
    if (!b.dest_skeleton.empty()) out += section("Destination test file", b.dest_path + "\n" + b.dest_skeleton);
    if (b.test_name) out += section("Test method name", *b.test_name);
    return out;
}

}  // namespace exbt
