#pragma once

#include "exbt/classifier.hpp"
#include "exbt/corpus.hpp"
#include "exbt/genbackend.hpp"
#include "exbt/jmodel.hpp"
#include "exbt/metrics.hpp"
#include "exbt/prompting.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace exbt {

/// "file:line" of a throw statement; the key every sweep artifact uses.
std::string target_id(const ThrowSite& site);

/// Default locations of the recorded inputs inside a repo.
struct RepoInputs {
    std::filesystem::path pool_log;  // trace log of instrumented non-EBT runs
    std::filesystem::path ebt_log;   // exception traces printed by instrumented EBTs
    std::filesystem::path stub;      // canned completions
    std::filesystem::path runs;      // recorded functional-check outcomes
    static RepoInputs defaults(const std::filesystem::path& repo);
};

/// Everything the per-target stages read. Missing logs count as empty.
struct SweepContext {
    RepoContext ctx;
    SuiteSplit split;
    TracePool pool;
    CoverageIndex coverage;
    CorpusResult corpus;
    std::string pool_log_text;
    std::string ebt_log_text;
};

SweepContext prepare_sweep(const std::filesystem::path& repo, const RepoInputs& inputs);

struct BundleRow {
    std::string target;
    ThrowSite site;
    std::optional<PromptBundle> bundle;
    std::optional<NoMatch> no_match;
};

/// The method whose pool traces reach `site`: the smallest MUT among matching
/// entries, else the declaring method.
MethodId machine_mut(const ThrowSite& site, const SweepContext& s);

/// One row per main-source throw statement, in (file, line) order.
std::vector<BundleRow> plan_bundles(const SweepContext& s, std::uint64_t seed,
                                    int nonebt_budget = kDefaultNonEbtBudget);

struct CandidateRow {
    std::string target;
    std::string exception_type;
    std::string completion_digest;
    std::optional<std::string> candidate;  // extracted test method
    std::optional<std::string> error;      // backend error code
};

/// Generates for every bundle row, at most `max_in_flight` requests at once.
/// Rows and the request log come out in target order.
std::vector<CandidateRow> generate_candidates(const std::vector<BundleRow>& rows, Backend& backend,
                                              const GenParams& params, int max_in_flight,
                                              std::string* request_log = nullptr);

struct EvalResult {
    std::vector<CandidateReport> reports;
    AggregateReport aggregate;
    std::vector<std::pair<std::string, std::string>> no_match;  // target, reason
};

/// Scores candidates against references (keyed by target) and, when a runner
/// is given, runs the functional check against the target's bundle.
EvalResult evaluate(const std::vector<CandidateRow>& candidates, const std::map<std::string, std::string>& refs,
                    const std::vector<BundleRow>& bundles, Runner* runner, bool best_of_k = false);

/// Gold EBTs of the training corpus keyed by the target they exercise.
std::map<std::string, std::string> references_from_corpus(const std::vector<CorpusExample>& corpus);

// ---- artifact rows -----------------------------------------------------------

nlohmann::json to_json(const BundleRow& r);
BundleRow bundle_row_from_json(const nlohmann::json& j);
nlohmann::json to_json(const CandidateRow& r);
CandidateRow candidate_row_from_json(const nlohmann::json& j);
nlohmann::json to_json(const EvalResult& r);

// ---- end to end --------------------------------------------------------------

struct SweepOptions {
    std::filesystem::path repo;
    std::filesystem::path out;
    RepoInputs inputs;
    std::uint64_t seed = 42;
    std::string backend_kind = "stub";
    std::string backend_target;  // url, stub file or request log; defaults per kind
    std::string backend_token;
    std::string runner_kind = "recorded";  // recorded, command, none
    std::string runner_target;             // runs file or shell command
    GenParams gen;
    int max_in_flight = 4;
    int nonebt_budget = kDefaultNonEbtBudget;
};

struct SweepResult {
    EvalResult eval;
    nlohmann::json manifest;
};

/// Writes bundles.jsonl, corpus.jsonl, requests.jsonl, candidates.jsonl,
/// report.json, report.txt and manifest.json into `out`. Nothing written
/// depends on the clock or on absolute paths.
SweepResult run_sweep(const SweepOptions& opts);

/// Writes `name` into `out` and records its digest in `manifest["artifacts"]`.
void write_artifact(const std::filesystem::path& out, const std::string& name, const std::string& data,
                    nlohmann::json& manifest);

/// Checks that every artifact a manifest lists exists with the recorded
/// digest; returns the names that do not.
std::vector<std::string> verify_manifest(const std::filesystem::path& out, const nlohmann::json& manifest);

inline constexpr std::string_view kToolVersion = "0.1.0";

}  // namespace exbt
