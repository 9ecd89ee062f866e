#include "exbt/metrics.hpp"

#include "exbt/classifier.hpp"
#include "exbt/error.hpp"
#include "exbt/instrument.hpp"
#include "exbt/java/lexer.hpp"
#include "exbt/java/parser.hpp"
#include "exbt/util.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <sys/wait.h>

namespace exbt {

using nlohmann::json;

// ---- tokens ----------------------------------------------------------------

std::vector<std::string> code_tokens(std::string_view code)
{
    std::vector<std::string> out;
    try {
        for (const auto& t : java::lex(code).tokens)
            if (t.kind != java::TokenKind::End) out.push_back(t.text);
    } catch (const java::LexError&) {
        out.clear();
        std::istringstream in{std::string(code)};
        std::string w;
        while (in >> w) out.push_back(w);
    }
    return out;
}

bool xmatch(std::string_view candidate, std::string_view reference)
{
    return code_tokens(candidate) == code_tokens(reference);
}

bool xmatch_strict(std::string_view candidate, std::string_view reference)
{
    return candidate == reference;
}

// ---- BLEU ------------------------------------------------------------------

namespace {

using Tokens = std::vector<std::string>;
using NgramCounts = std::map<std::vector<std::string>, int>;

NgramCounts ngrams(const Tokens& t, int n)
{
    NgramCounts out;
    for (std::size_t i = 0; i + n <= t.size(); ++i) ++out[Tokens(t.begin() + i, t.begin() + i + n)];
    return out;
}

double brevity_penalty(std::size_t c, std::size_t r)
{
    if (c == 0) return 0;
    if (c >= r) return 1;
    return std::exp(1.0 - static_cast<double>(r) / static_cast<double>(c));
}

double bleu_tokens(const Tokens& c, const Tokens& r, int max_n)
{
    if (c.empty() && r.empty()) return 1;
    if (c.empty() || r.empty()) return 0;
    double log_sum = 0;
    for (int n = 1; n <= max_n; ++n) {
        NgramCounts cn = ngrams(c, n), rn = ngrams(r, n);
        int matched = 0, total = 0;
        for (const auto& [g, k] : cn) {
            total += k;
            auto it = rn.find(g);
            if (it != rn.end()) matched += std::min(k, it->second);
        }
        double p;
        if (n == 1) {
            if (matched == 0) return 0;
            p = static_cast<double>(matched) / total;
        } else {
            p = (matched + 1.0) / (total + 1.0);
        }
        log_sum += std::log(p);
    }
    return brevity_penalty(c.size(), r.size()) * std::exp(log_sum / max_n);
}

double weighted_unigram(const Tokens& c, const Tokens& r)
{
    if (c.empty() && r.empty()) return 1;
    if (c.empty() || r.empty()) return 0;
    auto weight = [](const std::string& t) { return java::is_java_keyword(t) ? 5.0 : 1.0; };
    NgramCounts cn = ngrams(c, 1), rn = ngrams(r, 1);
    double matched = 0, total = 0;
    for (const auto& [g, k] : cn) {
        double w = weight(g[0]);
        total += w * k;
        auto it = rn.find(g);
        if (it != rn.end()) matched += w * std::min(k, it->second);
    }
    return brevity_penalty(c.size(), r.size()) * matched / total;
}

}  // namespace

double bleu(std::string_view candidate, std::string_view reference, int max_n)
{
    return bleu_tokens(code_tokens(candidate), code_tokens(reference), max_n);
}

// ---- CodeBLEU --------------------------------------------------------------

namespace {

struct Shape {
    std::multiset<std::string> subtrees;
    std::multiset<std::string> edges;
};

/// Kind-only s-expressions of every subtree, so identifiers and literals do
/// not matter.
class SubtreeCollector {
public:
    explicit SubtreeCollector(std::multiset<std::string>& out) : out_(out) {}

    std::string expr(const java::ExprPtr& e)
    {
        if (!e) return "";
        std::string s = "(e" + std::to_string(static_cast<int>(e->kind));
        if (e->kind == java::ExprKind::Binary || e->kind == java::ExprKind::Unary ||
            e->kind == java::ExprKind::Postfix || e->kind == java::ExprKind::Assign)
            s += e->text;
        if (e->target) s += " " + expr(e->target);
        for (const auto& o : e->operands) s += " " + expr(o);
        if (e->body) s += " " + stmt(*e->body);
        s += ")";
        out_.insert(s);
        return s;
    }

    std::string stmt(const java::Stmt& st)
    {
        std::string s = "(s" + std::to_string(static_cast<int>(st.kind));
        if (st.expr) s += " " + expr(st.expr);
        for (const auto& v : st.vars)
            if (v.init) s += " " + expr(v.init);
        for (const auto& e : st.init) s += " " + expr(e);
        for (const auto& e : st.labels) s += " " + expr(e);
        for (const auto& e : st.update) s += " " + expr(e);
        for (const auto& c : st.children) s += " " + stmt(*c);
        if (st.then_branch) s += " " + stmt(*st.then_branch);
        if (st.else_branch) s += " " + stmt(*st.else_branch);
        s += ")";
        out_.insert(s);
        return s;
    }

private:
    std::multiset<std::string>& out_;
};

void names_in(const java::ExprPtr& e, std::vector<std::string>& out)
{
    if (!e) return;
    java::visit_expr(
        e, [&](const java::Expr& x) { if (x.kind == java::ExprKind::Name) out.push_back(x.text); },
        [](const java::Stmt&) {});
}

/// Def-use edges "defined <- used" with variables renamed by first occurrence.
std::multiset<std::string> dataflow_edges(const java::MethodDecl& m)
{
    std::map<std::string, int> ids;
    auto norm = [&](const std::string& n) {
        auto [it, fresh] = ids.emplace(n, static_cast<int>(ids.size()));
        return "v" + std::to_string(it->second);
    };
    for (const auto& p : m.params) norm(p.name);
    std::multiset<std::string> edges;
    auto def = [&](const std::string& name, const java::ExprPtr& value, bool compound) {
        std::string lhs = norm(name);
        std::vector<std::string> used;
        if (compound) used.push_back(name);
        names_in(value, used);
        for (const auto& u : used) edges.insert(lhs + "<-" + norm(u));
    };
    java::visit_method(
        m,
        [&](const java::Expr& e) {
            if (e.kind == java::ExprKind::Assign && e.operands.size() == 2 && e.operands[0] &&
                e.operands[0]->kind == java::ExprKind::Name)
                def(e.operands[0]->text, e.operands[1], e.text != "=");
        },
        [&](const java::Stmt& s) {
            if (s.kind == java::StmtKind::LocalVar)
                for (const auto& v : s.vars) def(v.name, v.init, false);
            if (s.kind == java::StmtKind::ForEach && !s.vars.empty()) def(s.vars[0].name, s.expr, false);
        });
    return edges;
}

java::CompilationUnit parse_method(std::string_view code)
{
    try {
        return java::parse_members(std::string(code));
    } catch (const std::exception&) {
        // constructors only parse inside a class of the same name
        auto paren = code.find('(');
        if (paren == std::string_view::npos) throw;
        auto space = code.find_last_of(" \t\n", paren);
        std::size_t start = space == std::string_view::npos ? 0 : space + 1;
        std::string name(code.substr(start, paren - start));
        return java::parse_compilation_unit("", "class " + name + " {\n" + std::string(code) + "\n}\n");
    }
}

std::optional<Shape> method_shape(std::string_view code)
{
    try {
        auto unit = parse_method(code);
        if (unit.types.empty() || unit.types[0]->methods.size() != 1) return std::nullopt;
        const java::MethodDecl& m = *unit.types[0]->methods[0];
        Shape s;
        SubtreeCollector collect(s.subtrees);
        if (m.body) collect.stmt(*m.body);
        s.edges = dataflow_edges(m);
        return s;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

/// Fraction of the reference's items found in the candidate, clipped by count.
double clipped_recall(const std::multiset<std::string>& cand, const std::multiset<std::string>& ref)
{
    if (ref.empty()) return cand.empty() ? 1.0 : 0.0;
    int hit = 0;
    for (auto it = ref.begin(); it != ref.end(); it = ref.upper_bound(*it))
        hit += static_cast<int>(std::min(ref.count(*it), cand.count(*it)));
    return static_cast<double>(hit) / static_cast<double>(ref.size());
}

}  // namespace

CodeBleu code_bleu_detail(std::string_view candidate, std::string_view reference)
{
    Tokens c = code_tokens(candidate), r = code_tokens(reference);
    CodeBleu out;
    out.ngram = bleu_tokens(c, r, 4);
    auto cs = method_shape(candidate);
    auto rs = method_shape(reference);
    if (!cs || !rs) {
        out.degraded = true;
        out.total = out.ngram;
        return out;
    }
    out.weighted_ngram = weighted_unigram(c, r);
    out.syntax = clipped_recall(cs->subtrees, rs->subtrees);
    out.dataflow = clipped_recall(cs->edges, rs->edges);
    out.total = 0.25 * (out.ngram + out.weighted_ngram + out.syntax + out.dataflow);
    return out;
}

double code_bleu(std::string_view candidate, std::string_view reference)
{
    return code_bleu_detail(candidate, reference).total;
}

// ---- edit similarity -------------------------------------------------------

double edit_similarity(std::string_view a, std::string_view b)
{
    if (a.empty() && b.empty()) return 1;
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j)
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
        std::swap(prev, cur);
    }
    return 1.0 - static_cast<double>(prev[b.size()]) / static_cast<double>(std::max(a.size(), b.size()));
}

bool matched_exception(std::string_view candidate, std::string_view target)
{
    if (trim(target).empty()) return false;
    try {
        TestMethod t = classify_test(candidate);
        if (t.kind != TestKind::EBT) return false;
        return simple_type_name(extract_expected_exception(t)) == simple_type_name(trim(target));
    } catch (const std::exception&) {
        return false;
    }
}

// ---- runners ---------------------------------------------------------------

RecordedRunner RecordedRunner::from_json_text(std::string_view text)
{
    RecordedRunner r;
    try {
        json j = json::parse(text);
        for (const auto& e : j.at("runs")) {
            Entry en;
            en.digest = e.value("digest", "");
            en.contains = e.value("contains", "");
            en.outcome.compiled = e.at("compiled").get<bool>();
            en.outcome.ran_ok = e.at("ran_ok").get<bool>();
            en.outcome.log = e.value("log", "");
            r.entries_.push_back(std::move(en));
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ConfigError, std::string("recorded runs: ") + e.what());
    }
    return r;
}

RecordedRunner RecordedRunner::load(const std::filesystem::path& file)
{
    return from_json_text(read_file(file));
}

RunOutcome RecordedRunner::run(const RunRequest& req)
{
    std::string digest = sha256_hex(req.candidate);
    for (const auto& e : entries_)
        if (!e.digest.empty() && e.digest == digest) return e.outcome;
    for (const auto& e : entries_)
        if (!e.contains.empty() && req.candidate.find(e.contains) != std::string::npos) return e.outcome;
    throw Error(ErrorCode::RunnerUnavailable, "no recorded run for candidate " + digest);
}

CommandRunner::CommandRunner(std::string command, std::filesystem::path repo)
    : command_(std::move(command)), repo_(std::move(repo))
{
}

namespace {

std::string shell_quote(const std::string& s)
{
    std::string out = "'";
    for (char c : s) out += c == '\'' ? std::string("'\\''") : std::string(1, c);
    return out + "'";
}

}  // namespace

RunOutcome CommandRunner::run(const RunRequest& req)
{
    namespace fs = std::filesystem;
    if (trim(command_).empty()) throw Error(ErrorCode::RunnerUnavailable, "no runner command configured");
    std::lock_guard lock(mutex_);
    fs::path work = fs::temp_directory_path() / ("exbt-run-" + sha256_hex(req.test_source).substr(0, 16));
    std::error_code ec;
    fs::remove_all(work, ec);
    fs::copy(repo_, work, fs::copy_options::recursive, ec);
    if (ec) throw Error(ErrorCode::RunnerUnavailable, "cannot copy repo: " + ec.message());
    write_file(work / req.test_file, req.test_source);
    fs::path log = work / "exbt-run.log";
    std::string cmd = "cd " + shell_quote(work.string()) + " && export EXBT_REPO=" + shell_quote(work.string()) +
                      " EXBT_TEST=" + shell_quote(req.test_id) + " EXBT_LOG=" + shell_quote(log.string()) + " && (" +
                      command_ + ") >/dev/null 2>&1";
    int status = std::system(cmd.c_str());
    int code = status == -1 ? 127 : WIFEXITED(status) ? WEXITSTATUS(status) : 1;
    RunOutcome out;
    if (fs::exists(log)) out.log = read_file(log);
    fs::remove_all(work, ec);
    if (code == 127) throw Error(ErrorCode::RunnerUnavailable, "runner command not available: " + command_);
    out.compiled = code != 3;
    out.ran_ok = code == 0;
    return out;
}

// ---- functional check ------------------------------------------------------

std::string inject_test(std::string_view skeleton, std::string_view method)
{
    auto close = skeleton.rfind('}');
    if (close == std::string_view::npos) throw Error(ErrorCode::IoError, "destination skeleton has no class body");
    std::string body;
    for (const auto& line : split_lines(method)) body += line.empty() ? "\n" : "    " + line + "\n";
    std::string out(skeleton.substr(0, close));
    if (!out.empty() && out.back() != '\n') out += "\n";
    out += "\n" + body;
    out.append(skeleton.substr(close));
    return out;
}

namespace {

std::string test_class_of(const PromptBundle& b)
{
    try {
        auto unit = java::parse_compilation_unit(b.dest_path, b.dest_skeleton);
        if (!unit.types.empty()) return unit.types.back()->qualified;
    } catch (const std::exception&) {
    }
    std::string name = file_name(b.dest_path);
    return name.substr(0, name.rfind('.'));
}

bool log_covers(std::string_view log, const ThrowSite& site, std::string_view expected)
{
    std::string want = simple_type_name(trim(expected));
    for (const auto& e : parse_trace_log(log).entries) {
        if (e.trace.frames.empty() || !e.exception_type) continue;
        const Frame& inner = e.trace.frames.back();
        if (inner.file == file_name(site.file()) && inner.line == site.line &&
            simple_type_name(*e.exception_type) == want)
            return true;
    }
    return false;
}

}  // namespace

FunctionalResult functional_check(std::string_view candidate, const PromptBundle& bundle, Runner& runner)
{
    RunRequest req;
    req.test_file = bundle.dest_path;
    req.candidate = std::string(candidate);
    std::string method(candidate);
    std::string name;
    try {
        TestMethod t = classify_test(candidate);
        name = t.id.name;
        if (t.kind == TestKind::EBT) method = instrument_print_exception(t);
    } catch (const std::exception&) {
        // let the compiler reject it
    }
    req.test_source = inject_test(bundle.dest_skeleton, method);
    req.test_id = test_class_of(bundle) + "#" + name;

    FunctionalResult out;
    RunOutcome run;
    try {
        run = runner.run(req);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::RunnerUnavailable) return out;
        throw;
    }
    out.compilable = run.compiled;
    if (!run.compiled) return out;
    out.runnable = run.ran_ok;
    if (!run.ran_ok) return out;
    std::string expected = bundle.throw_site.exception_type;
    out.covers_target = matched_exception(candidate, expected) && log_covers(run.log, bundle.throw_site, expected);
    return out;
}

// ---- reports ---------------------------------------------------------------

CandidateReport score_candidate(std::string target, std::string_view candidate,
                                const std::optional<std::string>& reference, std::string_view target_exception)
{
    CandidateReport r;
    r.target = std::move(target);
    r.candidate_digest = sha256_hex(candidate);
    r.extracted = !candidate.empty();
    if (reference) {
        r.xmatch = xmatch(candidate, *reference);
        CodeBleu cb = code_bleu_detail(candidate, *reference);
        r.bleu = cb.ngram;
        r.code_bleu = cb.total;
        r.code_bleu_degraded = cb.degraded;
        r.edit_sim = edit_similarity(candidate, *reference);
    }
    r.matched_e = matched_exception(candidate, target_exception);
    return r;
}

AggregateReport aggregate(const std::vector<CandidateReport>& reports, const std::vector<std::string>& targets)
{
    AggregateReport a;
    a.candidates = static_cast<int>(reports.size());
    a.targets = static_cast<int>(targets.size());
    auto mean = [&](auto get) {
        double sum = 0;
        int n = 0;
        for (const auto& r : reports) {
            auto v = get(r);
            if (!v) continue;
            sum += static_cast<double>(*v);
            ++n;
        }
        return n ? sum / n : 0.0;
    };
    a.bleu = mean([](const CandidateReport& r) { return r.bleu; });
    a.code_bleu = mean([](const CandidateReport& r) { return r.code_bleu; });
    a.edit_sim = mean([](const CandidateReport& r) { return r.edit_sim; });
    a.xmatch = mean([](const CandidateReport& r) { return r.xmatch; });
    a.matched_e = mean([](const CandidateReport& r) { return std::optional<bool>(r.matched_e); });
    // functional rates are over candidates the runner handled; a missing later
    // stage after a failed earlier one counts as false
    int ran = 0, compiled = 0, runnable = 0;
    std::set<std::string> covered;
    for (const auto& r : reports) {
        if (!r.compilable) {
            a.partial = true;
            continue;
        }
        ++ran;
        compiled += *r.compilable;
        runnable += r.runnable.value_or(false);
        if (r.covers_target.value_or(false)) covered.insert(r.target);
    }
    if (ran) {
        a.compilable = static_cast<double>(compiled) / ran;
        a.runnable = static_cast<double>(runnable) / ran;
    }
    for (const auto& t : targets) a.covered_targets += static_cast<int>(covered.count(t));
    a.throw_cov = targets.empty() ? 0.0 : static_cast<double>(a.covered_targets) / a.targets;
    return a;
}

namespace {

template <typename T>
void keep_max(std::optional<T>& into, const std::optional<T>& v)
{
    if (v && (!into || *v > *into)) into = v;
}

}  // namespace

std::vector<CandidateReport> best_of_k(const std::vector<CandidateReport>& reports)
{
    std::vector<CandidateReport> out;
    std::map<std::string, std::size_t> index;
    for (const auto& r : reports) {
        auto [it, fresh] = index.emplace(r.target, out.size());
        if (fresh) {
            out.push_back(r);
            continue;
        }
        CandidateReport& b = out[it->second];
        b.extracted = b.extracted || r.extracted;
        keep_max(b.xmatch, r.xmatch);
        keep_max(b.bleu, r.bleu);
        keep_max(b.code_bleu, r.code_bleu);
        keep_max(b.edit_sim, r.edit_sim);
        b.code_bleu_degraded = b.code_bleu_degraded && r.code_bleu_degraded;
        b.matched_e = b.matched_e || r.matched_e;
        keep_max(b.compilable, r.compilable);
        keep_max(b.runnable, r.runnable);
        keep_max(b.covers_target, r.covers_target);
    }
    return out;
}

std::string render_table(const AggregateReport& a)
{
    char buf[512];
    std::snprintf(buf, sizeof buf,
                  "%-8s %-8s %-8s %-8s | %-11s %-10s %-9s %-9s\n"
                  "%-8.4f %-8.4f %-8.4f %-8.4f | %-11.1f %-10.1f %-9.1f %-9.1f\n",
                  "BLEU", "CodeBLEU", "EditSim", "xMatch", "Compilable%", "Matched-E%", "Runnable%", "ThrowCov%",
                  a.bleu, a.code_bleu, a.edit_sim, a.xmatch, 100 * a.compilable, 100 * a.matched_e,
                  100 * a.runnable, 100 * a.throw_cov);
    std::string out = buf;
    out += "candidates " + std::to_string(a.candidates) + ", targets " + std::to_string(a.targets) + ", covered " +
           std::to_string(a.covered_targets) + "\n";
    if (a.partial) out += "partial: functional checks did not run for every candidate\n";
    if (a.best_of_k) out += "best-of-k: each metric maximized independently per target\n";
    return out;
}

}  // namespace exbt
