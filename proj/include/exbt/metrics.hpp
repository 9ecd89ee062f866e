#pragma once

#include "exbt/prompting.hpp"

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace exbt {

// ---- similarity ------------------------------------------------------------

/// Java token texts with comments dropped; falls back to whitespace splitting
/// when the text does not lex.
std::vector<std::string> code_tokens(std::string_view code);

/// Token streams equal after comment and whitespace normalization.
bool xmatch(std::string_view candidate, std::string_view reference);
/// Byte equality.
bool xmatch_strict(std::string_view candidate, std::string_view reference);

/// Sentence BLEU over code tokens: geometric mean of clipped n-gram
/// precisions (add-one smoothing for n >= 2) times the brevity penalty.
double bleu(std::string_view candidate, std::string_view reference, int max_n = 4);

struct CodeBleu {
    double ngram = 0;
    double weighted_ngram = 0;
    double syntax = 0;
    double dataflow = 0;
    double total = 0;
    bool degraded = false;  // a side did not parse; total == ngram
};

CodeBleu code_bleu_detail(std::string_view candidate, std::string_view reference);
double code_bleu(std::string_view candidate, std::string_view reference);

/// 1 - levenshtein / max length, over bytes.
double edit_similarity(std::string_view candidate, std::string_view reference);

/// The candidate's expected exception equals `target` by simple name. False for
/// anything that is not an exceptional test.
bool matched_exception(std::string_view candidate, std::string_view target);

// ---- functional check ------------------------------------------------------

struct RunRequest {
    std::string test_file;    // repo-relative destination path
    std::string test_source;  // destination file with the candidate injected
    std::string test_id;      // "pkg.Class#method"
    std::string candidate;    // the candidate method as generated
};

struct RunOutcome {
    bool compiled = false;
    bool ran_ok = false;  // the test passed
    std::string log;      // trace log the instrumented test printed
};

/// Compiles and runs one test. Throws Error(RunnerUnavailable) when it cannot.
class Runner {
public:
    virtual ~Runner() = default;
    virtual std::string kind() const = 0;
    virtual RunOutcome run(const RunRequest& req) = 0;
};

/// Replays outcomes recorded earlier, keyed by candidate digest or by a
/// substring of the candidate:
/// {"runs": [{"digest"|"contains": ..., "compiled": b, "ran_ok": b, "log": s}]}
class RecordedRunner : public Runner {
public:
    static RecordedRunner from_json_text(std::string_view text);
    static RecordedRunner load(const std::filesystem::path& file);
    std::string kind() const override { return "recorded"; }
    RunOutcome run(const RunRequest& req) override;

private:
    struct Entry {
        std::string digest;
        std::string contains;
        RunOutcome outcome;
    };
    std::vector<Entry> entries_;
};

/// Copies the repo to a scratch directory, writes the injected test file and
/// runs `command` there through the shell with EXBT_REPO, EXBT_TEST and
/// EXBT_LOG set. Exit 0 means the test passed, 3 a compile failure, 127 that
/// the toolchain is missing; anything else is a failing run.
class CommandRunner : public Runner {
public:
    CommandRunner(std::string command, std::filesystem::path repo);
    std::string kind() const override { return "command"; }
    RunOutcome run(const RunRequest& req) override;

private:
    std::string command_;
    std::filesystem::path repo_;
    std::mutex mutex_;  // one working copy at a time
};

struct FunctionalResult {
    std::optional<bool> compilable;
    std::optional<bool> runnable;
    std::optional<bool> covers_target;
};

/// Inserts `method` before the closing brace of the skeleton's last type.
std::string inject_test(std::string_view skeleton, std::string_view method);

/// Instruments the candidate to print its exception, injects it into the
/// destination skeleton and runs it. Each field is present only when the
/// previous stage succeeded; all are absent when the runner is unavailable.
FunctionalResult functional_check(std::string_view candidate, const PromptBundle& bundle, Runner& runner);

// ---- reports ---------------------------------------------------------------

struct CandidateReport {
    std::string target;  // "file:line" of the target throw
    std::string candidate_digest;
    bool extracted = false;  // a test method was found in the completion
    std::optional<bool> xmatch;  // similarity fields need a reference
    std::optional<double> bleu;
    std::optional<double> code_bleu;
    std::optional<double> edit_sim;
    bool code_bleu_degraded = false;
    bool matched_e = false;
    std::optional<bool> compilable;
    std::optional<bool> runnable;
    std::optional<bool> covers_target;
};

/// Similarity and exception-match fields for one candidate.
CandidateReport score_candidate(std::string target, std::string_view candidate,
                                const std::optional<std::string>& reference, std::string_view target_exception);

struct AggregateReport {
    int candidates = 0;
    int targets = 0;
    int covered_targets = 0;
    double bleu = 0;
    double code_bleu = 0;
    double edit_sim = 0;
    double xmatch = 0;      // fractions in [0,1]
    double compilable = 0;
    double matched_e = 0;
    double runnable = 0;
    double throw_cov = 0;
    bool partial = false;  // some functional fields were absent
    bool best_of_k = false;
};

/// Means over candidates (absent values skipped); throw_cov over `targets`.
AggregateReport aggregate(const std::vector<CandidateReport>& reports, const std::vector<std::string>& targets);

/// Per target, the maximum of each metric over its candidates, taken
/// independently.
std::vector<CandidateReport> best_of_k(const std::vector<CandidateReport>& reports);

/// Paper-order table: BLEU, CodeBLEU, EditSim, xMatch | Compilable%, Matched-E%, Runnable%, ThrowCov%.
std::string render_table(const AggregateReport& a);

}  // namespace exbt
