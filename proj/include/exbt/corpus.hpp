#pragma once

#include "exbt/classifier.hpp"
#include "exbt/instrument.hpp"
#include "exbt/jmodel.hpp"
#include "exbt/prompting.hpp"

#include <set>
#include <string>
#include <vector>

namespace exbt {

struct CorpusExample {
    std::string id;    // "<test fqn>#<name>"
    std::string repo;
    PromptBundle prompt;
    std::string gold_ebt;

    bool same_as(const CorpusExample& o) const;
};

struct SkippedExample {
    std::string test;
    std::string reason;  // error code name, or "NoTrace"
};

struct CorpusResult {
    std::vector<CorpusExample> examples;
    std::vector<SkippedExample> skipped;
};

/// Builds one example per EBT whose exception trace is in `ebt_log`. The trace
/// loses test and out-of-repo frames, r[0] becomes the MUT, the last frame the
/// throw statement; EBTs without a usable trace are skipped with a reason.
CorpusResult collect_training_corpus(const std::vector<TestMethod>& ebts, const std::vector<TestMethod>& nonebts,
                                     const RepoContext& ctx, const TraceLog& ebt_log, const std::string& repo_name,
                                     int nonebt_budget = kDefaultNonEbtBudget);

/// Whitespace-separated token count.
int token_count(std::string_view text);

/// Non-EBTs that call `mut` directly (or whose pool trace starts at it), then
/// non-EBTs declared in `dest`, each group in (file, line) order, without
/// duplicates, cut where the next source would exceed `budget` tokens.
std::vector<const TestMethod*> relevant_nonebts(const MethodId& mut, std::string_view dest,
                                                const std::vector<TestMethod>& nonebts, const RepoContext& ctx,
                                                const std::set<MethodId>& also_same_mut, int budget);

/// Recomputes the example's non-EBT slot from `nonebts`.
void link_relevant_nonebts(CorpusExample& ex, const std::vector<TestMethod>& nonebts, const RepoContext& ctx,
                           int budget = kDefaultNonEbtBudget);

/// True when a test id from a log ("pkg.Outer$Inner#m") names `id`.
bool test_id_matches(std::string_view test_id, const MethodId& id);

}  // namespace exbt
