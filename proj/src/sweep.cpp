#include "exbt/sweep.hpp"

#include "exbt/error.hpp"
#include "exbt/serialize.hpp"
#include "exbt/stages.hpp"
#include "exbt/util.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

namespace exbt {

namespace fs = std::filesystem;
using nlohmann::json;

std::string target_id(const ThrowSite& site)
{
    return site.file() + ":" + std::to_string(site.line);
}

RepoInputs RepoInputs::defaults(const fs::path& repo)
{
    fs::path d = repo / ".exbt";
    return {d / "pool.log", d / "ebt.log", d / "stub.json", d / "runs.json"};
}

namespace {

std::string read_if_exists(const fs::path& p)
{
    return !p.empty() && fs::exists(p) ? read_file(p) : std::string();
}

std::string repo_name(const fs::path& repo)
{
    fs::path p = repo.lexically_normal();
    if (p.filename().empty()) p = p.parent_path();
    return p.filename().string();
}

}  // namespace

SweepContext prepare_sweep(const fs::path& repo, const RepoInputs& inputs)
{
    SweepContext s;
    s.ctx = load_repo(repo);
    s.split = split_test_suite(s.ctx);
    s.pool_log_text = read_if_exists(inputs.pool_log);
    s.ebt_log_text = read_if_exists(inputs.ebt_log);
    // pool logs come from the instrumented copy; map their lines back
    std::vector<std::pair<std::string, OffsetMap>> offsets;
    for (const auto& f : instrument_print_trace(s.ctx).files) offsets.emplace_back(f.path, f.offsets);
    s.pool = collect_stacktrace_set(s.split.nonebts, s.ctx, parse_trace_log(s.pool_log_text), offsets);
    s.pool.key = pool_cache_key(s.ctx, s.pool_log_text);
    s.coverage = build_coverage_index(s.pool, s.ctx);
    s.corpus = collect_training_corpus(s.split.ebts, s.split.nonebts, s.ctx, parse_trace_log(s.ebt_log_text),
                                       repo_name(repo));
    return s;
}

MethodId machine_mut(const ThrowSite& site, const SweepContext& s)
{
    std::optional<MethodId> best;
    for (const auto& e : s.pool.entries) {
        if (e.throw_site.file() != site.file() || e.throw_site.line != site.line || e.trace.frames.empty()) continue;
        const Frame& f = e.trace.frames.front();
        auto [res, mi] = s.ctx.resolve_frame(f.class_fqn, f.method, f.line);
        if (res != FrameResolution::Ok || !mi) continue;
        if (!best || mi->id < *best) best = mi->id;
    }
    return best ? *best : site.method;
}

std::vector<BundleRow> plan_bundles(const SweepContext& s, std::uint64_t seed, int nonebt_budget)
{
    std::vector<BundleRow> rows;
    for (const ThrowSite& site : find_throw_sites(s.ctx, Scope::MainOnly)) {
        BundleRow row;
        row.target = target_id(site);
        row.site = site;
        MethodId mut = machine_mut(site, s);
        auto dest = select_dest_test_file(mut, s.ctx, &s.coverage);
        if (!dest) {
            row.no_match = NoMatch{NoMatchReason::NoDestFile, "no test file for " + mut.qualified_name()};
        } else {
            PromptRequest req;
            req.mut = mut;
            req.throw_site = site;
            req.dest_path = dest->path;
            req.seed = seed;
            req.nonebt_budget = nonebt_budget;
            PromptResult r = assemble_prompt(req, s.ctx, s.pool, s.split.nonebts);
            if (auto* b = std::get_if<PromptBundle>(&r))
                row.bundle = std::move(*b);
            else
                row.no_match = std::get<NoMatch>(r);
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<CandidateRow> generate_candidates(const std::vector<BundleRow>& rows, Backend& backend,
                                              const GenParams& params, int max_in_flight, std::string* request_log)
{
    std::vector<const BundleRow*> work;
    for (const auto& r : rows)
        if (r.bundle) work.push_back(&r);
    std::vector<CandidateRow> out(work.size());
    Generator gen(backend, max_in_flight);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < work.size(); i = next++) {
            const BundleRow& row = *work[i];
            CandidateRow& c = out[i];
            c.target = row.target;
            c.exception_type = row.site.exception_type;
            try {
                std::string completion = gen.generate(row.bundle->rendered_instruction, params, static_cast<int>(i));
                c.completion_digest = sha256_hex(completion);
                c.candidate = extract_candidate(completion);
            } catch (const Error& e) {
                c.error = std::string(e.code_name());
            }
        }
    };
    int n = std::clamp(max_in_flight, 1, static_cast<int>(std::max<std::size_t>(work.size(), 1)));
    std::vector<std::thread> threads;
    for (int t = 0; t < n; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    count_stage("generate", static_cast<long>(work.size()));
    if (request_log) *request_log = gen.log_jsonl();
    return out;
}

std::map<std::string, std::string> references_from_corpus(const std::vector<CorpusExample>& corpus)
{
    std::map<std::string, std::string> refs;
    for (const auto& e : corpus) refs.emplace(target_id(e.prompt.throw_site), dedent_tail(e.gold_ebt));
    return refs;
}

EvalResult evaluate(const std::vector<CandidateRow>& candidates, const std::map<std::string, std::string>& refs,
                    const std::vector<BundleRow>& bundles, Runner* runner, bool best_of_k_flag)
{
    EvalResult out;
    std::map<std::string, const PromptBundle*> by_target;
    std::vector<std::string> targets;
    for (const auto& b : bundles) {
        targets.push_back(b.target);
        if (b.bundle) by_target[b.target] = &*b.bundle;
        if (b.no_match) out.no_match.emplace_back(b.target, std::string(no_match_reason_name(b.no_match->reason)));
    }
    for (const auto& c : candidates) {
        if (std::find(targets.begin(), targets.end(), c.target) == targets.end()) targets.push_back(c.target);
        auto ref = refs.find(c.target);
        std::optional<std::string> reference;
        if (ref != refs.end()) reference = ref->second;
        CandidateReport r = score_candidate(c.target, c.candidate.value_or(""), reference, c.exception_type);
        r.extracted = c.candidate.has_value();
        auto bundle = by_target.find(c.target);
        if (runner && bundle != by_target.end()) {
            if (c.candidate) {
                FunctionalResult f = functional_check(*c.candidate, *bundle->second, *runner);
                r.compilable = f.compilable;
                r.runnable = f.runnable;
                r.covers_target = f.covers_target;
            } else {
                r.compilable = false;  // nothing to compile
            }
        }
        count_stage("evaluate");
        out.reports.push_back(std::move(r));
    }
    if (best_of_k_flag) out.reports = best_of_k(out.reports);
    out.aggregate = aggregate(out.reports, targets);
    out.aggregate.best_of_k = best_of_k_flag;
    return out;
}

// ---- artifact rows -----------------------------------------------------------

json to_json(const BundleRow& r)
{
    json j;
    if (r.bundle)
        j = to_json(*r.bundle);
    else
        j = to_json(*r.no_match);
    j["target"] = r.target;
    j["throw"] = to_json(r.site);
    return j;
}

BundleRow bundle_row_from_json(const json& j)
{
    try {
        BundleRow r;
        r.target = j.at("target").get<std::string>();
        r.site = throw_site_from_json(j.at("throw"));
        if (j.contains("no_match")) {
            std::string reason = j.at("no_match").get<std::string>();
            NoMatchReason nr = reason == no_match_reason_name(NoMatchReason::NoDestFile) ? NoMatchReason::NoDestFile
                                                                                         : NoMatchReason::NoMatchingTrace;
            r.no_match = NoMatch{nr, j.value("detail", "")};
        } else {
            r.bundle = bundle_from_json(j);
        }
        return r;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::IoError, std::string("bad bundle row: ") + e.what());
    }
}

json to_json(const CandidateRow& r)
{
    return {{"target", r.target},
            {"exception_type", r.exception_type},
            {"completion_digest", r.completion_digest},
            {"candidate", r.candidate ? json(*r.candidate) : json(nullptr)},
            {"error", r.error ? json(*r.error) : json(nullptr)}};
}

CandidateRow candidate_row_from_json(const json& j)
{
    try {
        CandidateRow r;
        r.target = j.at("target").get<std::string>();
        r.exception_type = j.value("exception_type", "");
        r.completion_digest = j.value("completion_digest", "");
        if (j.contains("candidate") && !j["candidate"].is_null()) r.candidate = j["candidate"].get<std::string>();
        if (j.contains("error") && !j["error"].is_null()) r.error = j["error"].get<std::string>();
        return r;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::IoError, std::string("bad candidate row: ") + e.what());
    }
}

json to_json(const EvalResult& r)
{
    json per = json::array();
    for (const auto& c : r.reports) per.push_back(to_json(c));
    json nm = json::array();
    for (const auto& [t, reason] : r.no_match) nm.push_back({{"target", t}, {"reason", reason}});
    json header = {{"columns", {"BLEU", "CodeBLEU", "EditSim", "xMatch", "Compilable%", "Matched-E%", "Runnable%",
                                "ThrowCov%"}},
                   {"partial", r.aggregate.partial},
                   {"best_of_k", r.aggregate.best_of_k}};
    if (r.aggregate.best_of_k) header["best_of_k_scope"] = "each metric maximized independently per target";
    return {{"header", header}, {"aggregate", to_json(r.aggregate)}, {"candidates", per}, {"no_match", nm}};
}

// ---- end to end --------------------------------------------------------------

void write_artifact(const fs::path& out, const std::string& name, const std::string& data, json& manifest)
{
    write_file(out / name, data);
    manifest["artifacts"][name] = sha256_hex(data);
}

std::vector<std::string> verify_manifest(const fs::path& out, const json& manifest)
{
    std::vector<std::string> bad;
    if (!manifest.contains("artifacts")) return bad;
    for (const auto& [name, digest] : manifest["artifacts"].items()) {
        fs::path p = out / name;
        if (!fs::exists(p) || sha256_hex(read_file(p)) != digest.get<std::string>()) bad.push_back(name);
    }
    return bad;
}

namespace {

json input_digest(const fs::path& p)
{
    if (p.empty() || !fs::exists(p)) return nullptr;
    return sha256_hex(read_file(p));
}

}  // namespace

SweepResult run_sweep(const SweepOptions& opts)
{
    reset_stage_counts();
    SweepContext s = prepare_sweep(opts.repo, opts.inputs);
    std::vector<BundleRow> rows = plan_bundles(s, opts.seed, opts.nonebt_budget);

    std::string backend_target = opts.backend_target;
    if (backend_target.empty() && opts.backend_kind == "stub") backend_target = opts.inputs.stub.string();
    std::string request_log;
    GenParams gen = opts.gen;
    gen.seed = opts.seed;
    std::vector<CandidateRow> candidates;
    // a repo without matchable targets needs no backend at all
    if (std::any_of(rows.begin(), rows.end(), [](const BundleRow& r) { return r.bundle.has_value(); })) {
        std::unique_ptr<Backend> backend = make_backend(opts.backend_kind, backend_target, opts.backend_token);
        candidates = generate_candidates(rows, *backend, gen, opts.max_in_flight, &request_log);
    }

    std::unique_ptr<Runner> runner;
    std::string runner_target = opts.runner_target;
    if (opts.runner_kind == "recorded") {
        if (runner_target.empty()) runner_target = opts.inputs.runs.string();
        if (fs::exists(runner_target)) runner = std::make_unique<RecordedRunner>(RecordedRunner::load(runner_target));
    } else if (opts.runner_kind == "command") {
        runner = std::make_unique<CommandRunner>(runner_target, opts.repo);
    } else if (opts.runner_kind != "none") {
        throw Error(ErrorCode::ConfigError, "unknown runner kind: " + opts.runner_kind);
    }

    SweepResult result;
    result.eval = evaluate(candidates, references_from_corpus(s.corpus.examples), rows, runner.get());

    json& m = result.manifest;
    m["tool"] = "exbt";
    m["version"] = kToolVersion;
    m["repo"] = repo_name(opts.repo);
    m["seed"] = opts.seed;
    m["template_id"] = kTemplateId;
    m["rng"] = kRngName;
    m["backend"] = {{"kind", opts.backend_kind},
                    {"max_new_tokens", gen.max_new_tokens},
                    {"temperature", gen.temperature},
                    {"max_in_flight", opts.max_in_flight}};
    m["runner"] = runner ? runner->kind() : "none";
    m["inputs"] = {{"main_sources", s.ctx.source_digest(Scope::MainOnly)},
                   {"all_sources", s.ctx.source_digest(Scope::All)},
                   {"pool_log", input_digest(opts.inputs.pool_log)},
                   {"ebt_log", input_digest(opts.inputs.ebt_log)},
                   {"stub", opts.backend_kind == "stub" ? input_digest(backend_target) : json(nullptr)},
                   {"runs", opts.runner_kind == "recorded" ? input_digest(runner_target) : json(nullptr)}};
    m["pool"] = {{"key", s.pool.key},
                 {"entries", s.pool.entries.size()},
                 {"malformed_blocks", s.pool.malformed_blocks},
                 {"unattributed_blocks", s.pool.unattributed_blocks}};
    m["targets"] = rows.size();

    std::vector<json> bundle_rows, corpus_rows, candidate_rows;
    for (const auto& r : rows) bundle_rows.push_back(to_json(r));
    for (const auto& e : s.corpus.examples) corpus_rows.push_back(to_json(e));
    for (const auto& c : candidates) candidate_rows.push_back(to_json(c));
    fs::create_directories(opts.out);
    write_artifact(opts.out, "bundles.jsonl", write_jsonl(bundle_rows), m);
    write_artifact(opts.out, "corpus.jsonl", write_jsonl(corpus_rows), m);
    write_artifact(opts.out, "requests.jsonl", request_log, m);
    write_artifact(opts.out, "candidates.jsonl", write_jsonl(candidate_rows), m);
    write_artifact(opts.out, "report.json", to_json(result.eval).dump(2) + "\n", m);
    write_artifact(opts.out, "report.txt", render_table(result.eval.aggregate), m);
    json counts = json::object();
    for (const auto& [k, v] : stage_counts()) counts[k] = v;
    m["stage_counts"] = counts;
    write_file(opts.out / "manifest.json", m.dump(2) + "\n");
    return result;
}

}  // namespace exbt
