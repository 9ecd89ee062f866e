#pragma once

#include "exbt/classifier.hpp"
#include "exbt/guardexpr.hpp"
#include "exbt/instrument.hpp"
#include "exbt/jmodel.hpp"
#include "exbt/stacktrace.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace exbt {

inline constexpr std::string_view kTemplateId = "exbt-ebt-v1";
inline constexpr std::string_view kRngName = "mt19937_64";
inline constexpr int kDefaultNonEbtBudget = 2048;

/// One stack trace observed while running a non-EBT, paired with a throw
/// statement in its innermost method.
struct TracePoolEntry {
    StackTrace trace;  // MUT first, last frame at the throw line
    MethodId source_test;
    ThrowSite throw_site;

    bool operator==(const TracePoolEntry&) const = default;
};

struct TracePool {
    std::vector<TracePoolEntry> entries;
    int malformed_blocks = 0;
    int unattributed_blocks = 0;  // blocks whose test id matches no non-EBT
    std::vector<std::string> warnings;
    std::string key;  // digest of main sources and the log the pool was built from
};

/// Builds the pool from a trace log written by instrumented non-EBT runs.
/// Frame lines are mapped back through `offsets` (instrumented -> original).
TracePool collect_stacktrace_set(const std::vector<TestMethod>& nonebts, const RepoContext& ctx,
                                 const TraceLog& log,
                                 const std::vector<std::pair<std::string, OffsetMap>>& offsets);

/// Reads the pool from `cache_dir` when a file for the same key exists,
/// otherwise builds and stores it. The key covers every main source, so any
/// edit to main code rebuilds the pool.
TracePool load_or_build_pool(const std::filesystem::path& cache_dir, const std::vector<TestMethod>& nonebts,
                             const RepoContext& ctx, std::string_view log_text,
                             const std::vector<std::pair<std::string, OffsetMap>>& offsets,
                             bool* cache_hit = nullptr);

std::string pool_cache_key(const RepoContext& ctx, std::string_view log_text);

/// Test files that executed each main class and method, from pool traces.
struct CoverageIndex {
    std::map<std::string, std::set<std::string>> by_class;   // dotted fqn -> test files
    std::map<std::string, std::set<std::string>> by_method;  // MethodId::key() -> test files

    bool empty() const { return by_class.empty() && by_method.empty(); }
};

CoverageIndex build_coverage_index(const TracePool& pool, const RepoContext& ctx);

enum class DestRule { NamedTest, TestNamed, Coverage };

struct DestChoice {
    std::string path;
    DestRule rule;
};

/// `<FNM>Test.java`, then `Test<FNM>.java` in the MUT's package under a test
/// root, then a test file covering the MUT (or its class) per `coverage`.
std::optional<DestChoice> select_dest_test_file(const MethodId& mut, const RepoContext& ctx,
                                                const CoverageIndex* coverage = nullptr);

/// The test file with every test method removed; fields, helpers and
/// setup methods stay.
std::string dest_skeleton(const RepoContext& ctx, std::string_view dest_path);

struct PromptBundle {
    MethodId mut;
    std::string mut_source;
    ThrowSite throw_site;
    std::string dest_path;
    std::string dest_skeleton;
    StackTrace trace;
    GuardExpression guard;
    std::vector<std::string> nonebts;  // sources
    std::optional<std::string> test_name;  // with-name variant
    std::string template_id{kTemplateId};
    std::uint64_t seed = 0;
    int matching_traces = 0;
    std::string rendered_instruction;

    std::string variant() const { return test_name ? "with-name" : "no-name"; }
    /// Compares every field; guards compare by rendered text and conditions.
    bool same_as(const PromptBundle& o) const;
};

enum class NoMatchReason { NoDestFile, NoMatchingTrace };

std::string_view no_match_reason_name(NoMatchReason r);

struct NoMatch {
    NoMatchReason reason;
    std::string detail;
};

using PromptResult = std::variant<PromptBundle, NoMatch>;

struct PromptRequest {
    MethodId mut;
    ThrowSite throw_site;
    std::string dest_path;
    std::optional<std::string> test_name;
    std::uint64_t seed = 0;
    int nonebt_budget = kDefaultNonEbtBudget;
};

/// Picks one pool trace that passes through the MUT and ends at the throw
/// site, computes its guard, attaches relevant non-EBTs and renders the
/// instruction. NoMatch when no trace qualifies.
PromptResult assemble_prompt(const PromptRequest& req, const RepoContext& ctx, const TracePool& pool,
                             const std::vector<TestMethod>& nonebts);

/// The pool trace cut so that it starts at `mut`; nullopt when `mut` is absent.
std::optional<StackTrace> trace_from_mut(const StackTrace& t, const MethodId& mut, const RepoContext& ctx);

std::string render_instruction(const PromptBundle& b, std::string_view template_id = kTemplateId);

/// Same seed, same pick; spreads picks uniformly over [0, n).
std::size_t seeded_pick(std::uint64_t seed, std::size_t n);

}  // namespace exbt
