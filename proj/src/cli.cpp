#include "exbt/cli.hpp"

#include "exbt/classifier.hpp"
#include "exbt/error.hpp"
#include "exbt/guardexpr.hpp"
#include "exbt/instrument.hpp"
#include "exbt/java/parser.hpp"
#include "exbt/serialize.hpp"
#include "exbt/stages.hpp"
#include "exbt/sweep.hpp"
#include "exbt/util.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <set>

namespace exbt {

namespace fs = std::filesystem;
using nlohmann::json;

std::optional<std::string> process_env(const std::string& name)
{
    const char* v = std::getenv(name.c_str());
    if (!v) return std::nullopt;
    return std::string(v);
}

namespace {

// Settings that may come from defaults, a config file, flags or the environment.
const std::map<std::string, std::string> kDefaults = {
    {"seed", "42"},
    {"backend", "stub"},
    {"backend-url", ""},
    {"stub", ""},
    {"token", ""},
    {"runner", "recorded"},
    {"runs", ""},
    {"runner-cmd", ""},
    {"max-in-flight", "4"},
    {"timeout-ms", "60000"},
    {"max-new-tokens", "512"},
    {"nonebt-budget", "2048"},
    {"pool-log", ""},
    {"ebt-log", ""},
    {"out", ""},
};

const std::map<std::string, std::string> kEnvKeys = {
    {"BACKEND_URL", "backend-url"},
    {"BACKEND_KIND", "backend"},
    {"BACKEND_TOKEN", "token"},
};

}  // namespace

std::map<std::string, std::string> parse_config_text(std::string_view text)
{
    std::map<std::string, std::string> out;
    int n = 0;
    for (const auto& raw : split_lines(text)) {
        ++n;
        std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw Error(ErrorCode::ConfigError, "config line " + std::to_string(n) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::replace(key.begin(), key.end(), '_', '-');
        if (!kDefaults.count(key))
            throw Error(ErrorCode::ConfigError, "config line " + std::to_string(n) + ": unknown key " + key);
        out[key] = trim(line.substr(eq + 1));
    }
    return out;
}

namespace {

/// Flag values bound by CLI11 plus the layering that resolves them.
class Settings {
public:
    void bind(CLI::App* app, const std::string& name, const std::string& help)
    {
        opts_.emplace(name, app->add_option("--" + name, flags_[name], help));
    }

    void resolve(const std::string& config_file, const EnvLookup& env)
    {
        values_ = kDefaults;
        if (!config_file.empty())
            for (const auto& [k, v] : parse_config_text(read_file(config_file))) values_[k] = v;
        for (const auto& [name, opt] : opts_)
            if (opt->count() > 0) values_[name] = flags_[name];
        for (const auto& [var, key] : kEnvKeys)
            if (auto v = env(var)) values_[key] = *v;
    }

    const std::string& str(const std::string& name) const { return values_.at(name); }

    long long num(const std::string& name) const
    {
        const std::string& v = str(name);
        try {
            std::size_t used = 0;
            long long n = std::stoll(v, &used);
            if (used != v.size()) throw std::invalid_argument(v);
            return n;
        } catch (const std::exception&) {
            throw Error(ErrorCode::UsageError, "--" + name + " expects a number, got '" + v + "'");
        }
    }

private:
    std::map<std::string, std::string> flags_;
    std::multimap<std::string, CLI::Option*> opts_;
    std::map<std::string, std::string> values_;
};

struct Globals {
    std::string repo;
    std::string config;
    bool json = false;
};

fs::path need_repo(const Globals& g)
{
    if (g.repo.empty()) throw Error(ErrorCode::UsageError, "--repo is required");
    return g.repo;
}

RepoInputs repo_inputs(const fs::path& repo, const Settings& s)
{
    RepoInputs in = RepoInputs::defaults(repo);
    if (!s.str("pool-log").empty()) in.pool_log = s.str("pool-log");
    if (!s.str("ebt-log").empty()) in.ebt_log = s.str("ebt-log");
    if (!s.str("stub").empty()) in.stub = s.str("stub");
    if (!s.str("runs").empty()) in.runs = s.str("runs");
    return in;
}

std::string backend_target(const Settings& s, const RepoInputs* in)
{
    const std::string& kind = s.str("backend");
    if (kind == "http") return s.str("backend-url");
    if (kind == "stub") return !s.str("stub").empty() ? s.str("stub") : in ? in->stub.string() : "";
    return s.str("backend-url");  // replay: path of a request log
}

GenParams gen_params(const Settings& s)
{
    GenParams p;
    p.seed = static_cast<std::uint64_t>(s.num("seed"));
    p.timeout_ms = static_cast<int>(s.num("timeout-ms"));
    p.max_new_tokens = static_cast<int>(s.num("max-new-tokens"));
    return p;
}

std::vector<json> read_rows(const std::string& path)
{
    return read_jsonl(read_file(path));
}

// ---- subcommands ---------------------------------------------------------------

json test_json(const TestMethod& t)
{
    return {{"id", t.id.fqn + "#" + t.id.name},
            {"file", t.id.decl_file},
            {"line", t.id.decl_line},
            {"kind", test_kind_name(t.kind)},
            {"pattern", pattern_name(t.pattern)},
            {"expected_exception", t.expected_exception ? json(*t.expected_exception) : json(nullptr)}};
}

void cmd_classify(const Globals& g, const std::vector<std::string>& files, std::ostream& out)
{
    std::vector<TestMethod> tests;
    if (!files.empty()) {
        for (const auto& f : files) {
            auto unit = java::parse_compilation_unit(f, read_file(f));
            for (const auto* t : java::all_types(unit))
                for (const auto& m : t->methods) {
                    if (!is_test_method(*m)) continue;
                    TestMethod tm = classify_decl(*m, unit.text(m->range));
                    tm.id = {t->qualified, m->name, static_cast<int>(m->params.size()), f, m->name_line};
                    tests.push_back(std::move(tm));
                }
        }
    } else {
        auto ctx = load_repo(need_repo(g));
        auto split = split_test_suite(ctx);
        tests = split.ebts;
        tests.insert(tests.end(), split.nonebts.begin(), split.nonebts.end());
        std::sort(tests.begin(), tests.end(), [](const TestMethod& a, const TestMethod& b) { return a.id < b.id; });
    }
    if (g.json) {
        json arr = json::array();
        for (const auto& t : tests) arr.push_back(test_json(t));
        out << arr.dump(2) << "\n";
        return;
    }
    for (const auto& t : tests)
        out << t.id.fqn << "#" << t.id.name << "\t" << test_kind_name(t.kind) << "\t" << pattern_name(t.pattern)
            << "\t" << t.expected_exception.value_or("-") << "\n";
}

void cmd_find_throws(const Globals& g, const std::string& mut_spec, int depth, std::ostream& out)
{
    auto ctx = load_repo(need_repo(g));
    json arr = json::array();
    if (mut_spec.empty()) {
        for (const auto& s : find_throw_sites(ctx, Scope::MainOnly)) {
            if (g.json)
                arr.push_back(to_json(s));
            else
                out << target_id(s) << "\t" << s.exception_type << "\t" << s.method.qualified_name() << "\n";
        }
    } else {
        const MethodInfo* mut = resolve_method_spec(ctx, mut_spec);
        if (!mut) throw Error(ErrorCode::UnknownMethod, "unknown method " + mut_spec);
        for (const auto& r : reachable_throws(ctx, mut->id, depth)) {
            std::vector<std::string> path;
            for (const auto& m : r.path) path.push_back(m.qualified_name());
            if (g.json) {
                json j = to_json(r.site);
                j["path"] = path;
                arr.push_back(j);
            } else {
                std::string chain;
                for (const auto& p : path) chain += (chain.empty() ? "" : " -> ") + p;
                out << target_id(r.site) << "\t" << r.site.exception_type << "\t" << chain << "\n";
            }
        }
    }
    if (g.json) out << arr.dump(2) << "\n";
}

void cmd_instrument(const Globals& g, const std::string& mode, const std::string& out_dir, std::ostream& out)
{
    if (out_dir.empty()) throw Error(ErrorCode::UsageError, "--out is required");
    auto ctx = load_repo(need_repo(g));
    fs::path dst = out_dir;
    json summary;
    if (mode == "trace") {
        auto r = instrument_print_trace(ctx);
        for (const auto& f : r.files) {
            write_file(dst / f.path, f.source);
            if (f.insertions > 0) write_file(dst / (f.path + ".offsets"), f.offsets.serialize());
        }
        for (const auto& [path, src] : r.runtime_sources) write_file(dst / path, src);
        summary = {{"mode", mode}, {"methods_instrumented", r.methods_instrumented}, {"warnings", r.warnings}};
    } else if (mode == "ebt") {
        auto split = split_test_suite(ctx);
        std::map<std::string, std::vector<TestMethod>> by_file;
        for (const auto& t : split.ebts) by_file[t.id.decl_file].push_back(t);
        int n = 0;
        for (const auto& unit : ctx.units) {
            auto it = by_file.find(unit.path);
            if (it == by_file.end()) {
                write_file(dst / unit.path, unit.source);
                continue;
            }
            Rewrite rw = instrument_test_file(unit.source, it->second);
            write_file(dst / unit.path, rw.text);
            write_file(dst / (unit.path + ".offsets"), rw.offsets.serialize());
            n += static_cast<int>(it->second.size());
        }
        summary = {{"mode", mode}, {"tests_instrumented", n}, {"warnings", json::array()}};
    } else {
        throw Error(ErrorCode::UsageError, "--mode must be trace or ebt");
    }
    if (g.json)
        out << summary.dump(2) << "\n";
    else
        out << "instrumented (" << mode << ") into " << out_dir << "\n";
}

void cmd_pool(const Globals& g, const Settings& s, const std::string& cache, std::ostream& out)
{
    fs::path repo = need_repo(g);
    RepoInputs in = repo_inputs(repo, s);
    auto ctx = load_repo(repo);
    auto split = split_test_suite(ctx);
    std::vector<std::pair<std::string, OffsetMap>> offsets;
    for (const auto& f : instrument_print_trace(ctx).files) offsets.emplace_back(f.path, f.offsets);
    std::string log = read_file(in.pool_log);
    TracePool pool;
    bool hit = false;
    if (!cache.empty())
        pool = load_or_build_pool(cache, split.nonebts, ctx, log, offsets, &hit);
    else
        pool = collect_stacktrace_set(split.nonebts, ctx, parse_trace_log(log), offsets);
    if (g.json) {
        out << to_json(pool).dump(2) << "\n";
        return;
    }
    for (const auto& e : pool.entries)
        out << target_id(e.throw_site) << "\t" << e.source_test.fqn << "#" << e.source_test.name << "\t"
            << e.trace.frames.size() << " frames\n";
    out << pool.entries.size() << " entries, " << pool.malformed_blocks << " malformed, " << pool.unattributed_blocks
        << " unattributed" << (hit ? ", from cache" : "") << "\n";
}

void cmd_guard(const Globals& g, const std::string& trace_file, const std::string& dest, std::ostream& out)
{
    if (trace_file.empty()) throw Error(ErrorCode::UsageError, "--trace is required");
    auto ctx = load_repo(need_repo(g));
    StackTrace r = exclude_test_and_util_frames(parse_stack_trace(read_file(trace_file)), ctx, dest);
    GuardExpression guard = compute_guard_expression(r, ctx);
    if (g.json)
        out << to_json(guard).dump(2) << "\n";
    else
        out << guard.rendered << "\n";
}

void cmd_prompt(const Globals& g, const Settings& s, const std::string& target, const std::string& test_name,
                std::ostream& out)
{
    fs::path repo = need_repo(g);
    auto ctx = prepare_sweep(repo, repo_inputs(repo, s));
    auto rows = plan_bundles(ctx, static_cast<std::uint64_t>(s.num("seed")),
                             static_cast<int>(s.num("nonebt-budget")));
    if (!target.empty()) {
        rows.erase(std::remove_if(rows.begin(), rows.end(), [&](const BundleRow& r) { return r.target != target; }),
                   rows.end());
        if (rows.empty()) throw Error(ErrorCode::UsageError, "no throw statement at " + target);
    }
    if (!test_name.empty())
        for (auto& r : rows)
            if (r.bundle) {
                r.bundle->test_name = test_name;
                r.bundle->rendered_instruction = render_instruction(*r.bundle, r.bundle->template_id);
            }
    std::vector<json> lines;
    for (const auto& r : rows) lines.push_back(to_json(r));
    if (!s.str("out").empty()) write_file(s.str("out"), write_jsonl(lines));
    if (g.json) {
        out << write_jsonl(lines);
        return;
    }
    for (const auto& r : rows) {
        if (r.no_match)
            out << "# " << r.target << ": " << no_match_reason_name(r.no_match->reason) << " (" << r.no_match->detail
                << ")\n";
        else
            out << r.bundle->rendered_instruction << "\n";
    }
}

void cmd_sweep(const Globals& g, const Settings& s, std::ostream& out)
{
    SweepOptions o;
    o.repo = need_repo(g);
    o.inputs = repo_inputs(o.repo, s);
    o.out = s.str("out").empty() ? fs::path("exbt-out") : fs::path(s.str("out"));
    o.seed = static_cast<std::uint64_t>(s.num("seed"));
    o.backend_kind = s.str("backend");
    o.backend_target = backend_target(s, &o.inputs);
    o.backend_token = s.str("token");
    o.runner_kind = s.str("runner");
    o.runner_target = o.runner_kind == "command" ? s.str("runner-cmd") : o.inputs.runs.string();
    o.gen = gen_params(s);
    o.max_in_flight = static_cast<int>(s.num("max-in-flight"));
    o.nonebt_budget = static_cast<int>(s.num("nonebt-budget"));
    auto r = run_sweep(o);
    if (g.json) {
        out << to_json(r.eval).dump(2) << "\n";
        return;
    }
    out << render_table(r.eval.aggregate);
    for (const auto& [t, reason] : r.eval.no_match) out << "no match: " << t << " (" << reason << ")\n";
    out << "artifacts in " << o.out.string() << "\n";
}

void cmd_generate(const Globals& g, const Settings& s, const std::string& bundles, std::ostream& out)
{
    if (bundles.empty()) throw Error(ErrorCode::UsageError, "--bundles is required");
    if (s.str("out").empty()) throw Error(ErrorCode::UsageError, "--out is required");
    reset_stage_counts();
    std::vector<BundleRow> rows;
    for (const auto& j : read_rows(bundles)) rows.push_back(bundle_row_from_json(j));
    auto backend = make_backend(s.str("backend"), backend_target(s, nullptr), s.str("token"));
    std::string log;
    auto cands = generate_candidates(rows, *backend, gen_params(s), static_cast<int>(s.num("max-in-flight")), &log);
    std::vector<json> lines;
    for (const auto& c : cands) lines.push_back(to_json(c));
    fs::path dir = s.str("out");
    json m = {{"tool", "exbt"},
              {"version", kToolVersion},
              {"seed", s.num("seed")},
              {"backend", {{"kind", backend->kind()}}},
              {"inputs", {{"bundles", sha256_hex(read_file(bundles))}}}};
    write_artifact(dir, "candidates.jsonl", write_jsonl(lines), m);
    write_artifact(dir, "requests.jsonl", log, m);
    write_file(dir / "manifest.json", m.dump(2) + "\n");
    if (g.json)
        out << write_jsonl(lines);
    else
        out << cands.size() << " candidates in " << dir.string() << "\n";
}

void cmd_eval(const Globals& g, const Settings& s, const std::string& cands_file, const std::string& refs_file,
              const std::string& bundles_file, const std::string& runner_cmd, bool best, std::ostream& out)
{
    if (cands_file.empty() || refs_file.empty())
        throw Error(ErrorCode::UsageError, "--candidates and --refs are required");
    reset_stage_counts();
    std::vector<CandidateRow> cands;
    for (const auto& j : read_rows(cands_file)) cands.push_back(candidate_row_from_json(j));
    // references: corpus rows or {target, reference} rows
    std::map<std::string, std::string> refs;
    for (const auto& j : read_rows(refs_file)) {
        if (j.contains("gold_ebt")) {
            auto ex = corpus_example_from_json(j);
            refs.emplace(target_id(ex.prompt.throw_site), dedent_tail(ex.gold_ebt));
        } else {
            refs.emplace(j.at("target").get<std::string>(), j.at("reference").get<std::string>());
        }
    }
    std::vector<BundleRow> bundles;
    if (!bundles_file.empty())
        for (const auto& j : read_rows(bundles_file)) bundles.push_back(bundle_row_from_json(j));
    std::unique_ptr<Runner> runner;
    if (!runner_cmd.empty())
        runner = std::make_unique<CommandRunner>(runner_cmd, need_repo(g));
    else if (!s.str("runs").empty())
        runner = std::make_unique<RecordedRunner>(RecordedRunner::load(s.str("runs")));
    EvalResult r = evaluate(cands, refs, bundles, runner.get(), best);
    std::string report = to_json(r).dump(2) + "\n";
    if (!s.str("out").empty()) {
        json m = {{"tool", "exbt"}, {"version", kToolVersion}};
        write_artifact(s.str("out"), "report.json", report, m);
        write_artifact(s.str("out"), "report.txt", render_table(r.aggregate), m);
        write_file(fs::path(s.str("out")) / "manifest.json", m.dump(2) + "\n");
    }
    if (g.json)
        out << report;
    else
        out << render_table(r.aggregate);
}

void print_error(std::ostream& err, std::string_view code, const std::string& message)
{
    err << json({{"error", code}, {"message", message}}).dump() << "\n";
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const EnvLookup& env)
{
    CLI::App app{"Exceptional behavior test generation toolkit", "exbt"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    Settings s;
    app.add_option("--repo", g.repo, "Repository root");
    app.add_option("--config", g.config, "key = value settings file");
    app.add_flag("--json", g.json, "Machine-readable output");
    s.bind(&app, "seed", "Sampling and selection seed (default 42)");

    auto* classify = app.add_subcommand("classify", "Classify test methods as EBT or non-EBT");
    std::vector<std::string> classify_files;
    classify->add_option("files", classify_files, "Java files (default: every test in --repo)");

    auto* find = app.add_subcommand("find-throws", "List throw statements, or those reachable from --mut");
    std::string mut_spec;
    int depth = kDefaultMaxDepth;
    find->add_option("--mut", mut_spec, "pkg.Class#method");
    find->add_option("--depth", depth, "Maximum call-chain length");

    auto* instrument = app.add_subcommand("instrument", "Write an instrumented copy of the repository");
    std::string mode = "trace", out_dir;
    instrument->add_option("--mode", mode, "trace (non-EBT logging) or ebt (print exceptions)");
    instrument->add_option("--out", out_dir, "Destination directory");

    auto* pool = app.add_subcommand("pool", "Build the stack-trace pool from a trace log");
    std::string cache;
    s.bind(pool, "pool-log", "Trace log (default <repo>/.exbt/pool.log)");
    pool->add_option("--cache", cache, "Pool cache directory");

    auto* guard = app.add_subcommand("guard", "Guard expression along a stack trace");
    std::string trace_file, dest;
    guard->add_option("--trace", trace_file, "JVM stack trace text file");
    guard->add_option("--dest", dest, "Destination test file whose frames are dropped");

    auto* prompt = app.add_subcommand("prompt", "Assemble prompts for throw statements");
    std::string target, test_name;
    prompt->add_option("--target", target, "file:line of one throw statement");
    prompt->add_option("--test-name", test_name, "Test method name to request");
    for (const char* k : {"pool-log", "ebt-log", "nonebt-budget", "out"}) s.bind(prompt, k, "");

    auto* sweep = app.add_subcommand("sweep", "Prompt, generate and evaluate for every throw statement");
    std::string sweep_repo;
    sweep->add_option("repo", sweep_repo, "Repository root (same as --repo)");
    for (const char* k : {"out", "backend", "backend-url", "stub", "token", "runner", "runs", "runner-cmd",
                          "max-in-flight", "timeout-ms", "max-new-tokens", "nonebt-budget", "pool-log", "ebt-log"})
        s.bind(sweep, k, "");

    auto* generate = app.add_subcommand("generate", "Generate candidates for prompt bundles");
    std::string bundles;
    generate->add_option("--bundles", bundles, "bundles.jsonl");
    for (const char* k : {"out", "backend", "backend-url", "stub", "token", "max-in-flight", "timeout-ms",
                          "max-new-tokens"})
        s.bind(generate, k, "");

    auto* eval = app.add_subcommand("eval", "Score candidates against references");
    std::string cands_file, refs_file, eval_bundles, runner_cmd;
    bool best = false;
    eval->add_option("--candidates", cands_file, "candidates.jsonl");
    eval->add_option("--refs", refs_file, "corpus.jsonl or {target, reference} rows");
    eval->add_option("--bundles", eval_bundles, "bundles.jsonl, needed for functional checks");
    eval->add_option("--runner", runner_cmd, "Shell command that compiles and runs one test");
    eval->add_flag("--best-of-k", best, "Maximize each metric per target");
    for (const char* k : {"runs", "out"}) s.bind(eval, k, "");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        print_error(err, "UsageError", e.what());
        return 2;
    }

    try {
        if (!sweep_repo.empty()) g.repo = sweep_repo;
        s.resolve(g.config, env);
        if (classify->parsed()) cmd_classify(g, classify_files, out);
        if (find->parsed()) cmd_find_throws(g, mut_spec, depth, out);
        if (instrument->parsed()) cmd_instrument(g, mode, out_dir, out);
        if (pool->parsed()) cmd_pool(g, s, cache, out);
        if (guard->parsed()) cmd_guard(g, trace_file, dest, out);
        if (prompt->parsed()) cmd_prompt(g, s, target, test_name, out);
        if (sweep->parsed()) cmd_sweep(g, s, out);
        if (generate->parsed()) cmd_generate(g, s, bundles, out);
        if (eval->parsed()) cmd_eval(g, s, cands_file, refs_file, eval_bundles, runner_cmd, best, out);
    } catch (const Error& e) {
        print_error(err, e.code_name(), e.what());
        return e.code() == ErrorCode::UsageError ? 2 : 1;
    } catch (const std::exception& e) {
        print_error(err, "Internal", e.what());
        return 1;
    }
    return 0;
}

}  // namespace exbt
