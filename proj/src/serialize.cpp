#include "exbt/serialize.hpp"

#include "exbt/error.hpp"
#include "exbt/util.hpp"

namespace exbt {

json to_json(const MethodId& m)
{
    return {{"fqn", m.fqn}, {"name", m.name}, {"arity", m.param_arity}, {"file", m.decl_file}, {"line", m.decl_line}};
}

MethodId method_id_from_json(const json& j)
{
    return {j.at("fqn").get<std::string>(), j.at("name").get<std::string>(), j.at("arity").get<int>(),
            j.at("file").get<std::string>(), j.at("line").get<int>()};
}

json to_json(const ThrowSite& s)
{
    return {{"file", s.file()},
            {"line", s.line},
            {"statement", s.statement_text},
            {"exception_type", s.exception_type},
            {"method", to_json(s.method)}};
}

ThrowSite throw_site_from_json(const json& j)
{
    ThrowSite s;
    s.method = method_id_from_json(j.at("method"));
    s.line = j.at("line").get<int>();
    s.statement_text = j.at("statement").get<std::string>();
    s.exception_type = j.at("exception_type").get<std::string>();
    return s;
}

json to_json(const Frame& f)
{
    return {{"class", f.class_fqn}, {"method", f.method}, {"file", f.file}, {"line", f.line}};
}

Frame frame_from_json(const json& j)
{
    return {j.at("class").get<std::string>(), j.at("method").get<std::string>(), j.at("file").get<std::string>(),
            j.at("line").get<int>()};
}

json to_json(const StackTrace& t)
{
    json a = json::array();
    for (const auto& f : t.frames) a.push_back(to_json(f));
    return a;
}

StackTrace trace_from_json(const json& j)
{
    StackTrace t;
    for (const auto& f : j) t.frames.push_back(frame_from_json(f));
    return t;
}

json to_json(const GuardExpression& g)
{
    return {{"rendered", g.rendered},
            {"conditions", g.condition_texts()},
            {"original_conditions", g.original_texts()},
            {"unresolved", g.unresolved_names}};
}

GuardExpression guard_from_json(const json& j)
{
    GuardExpression g;
    g.rendered = j.at("rendered").get<std::string>();
    auto texts = j.at("conditions").get<std::vector<std::string>>();
    auto originals = j.value("original_conditions", std::vector<std::string>{});
    for (std::size_t i = 0; i < texts.size(); ++i) {
        Condition c = parse_condition(texts[i]);
        if (i < originals.size()) c.original = originals[i];
        g.conditions.push_back(std::move(c));
    }
    g.unresolved_names = j.value("unresolved", std::vector<std::string>{});
    return g;
}

json to_json(const TracePoolEntry& e)
{
    return {{"trace", to_json(e.trace)}, {"source_test", to_json(e.source_test)}, {"throw", to_json(e.throw_site)}};
}

json to_json(const TracePool& p)
{
    json entries = json::array();
    for (const auto& e : p.entries) entries.push_back(to_json(e));
    return {{"key", p.key},
            {"malformed_blocks", p.malformed_blocks},
            {"unattributed_blocks", p.unattributed_blocks},
            {"warnings", p.warnings},
            {"entries", entries}};
}

TracePool pool_from_json(const json& j)
{
    TracePool p;
    p.key = j.at("key").get<std::string>();
    p.malformed_blocks = j.value("malformed_blocks", 0);
    p.unattributed_blocks = j.value("unattributed_blocks", 0);
    p.warnings = j.value("warnings", std::vector<std::string>{});
    for (const auto& e : j.at("entries"))
        p.entries.push_back({trace_from_json(e.at("trace")), method_id_from_json(e.at("source_test")),
                             throw_site_from_json(e.at("throw"))});
    return p;
}

json to_json(const PromptBundle& b)
{
    json j = {{"template_id", b.template_id},
              {"mut", to_json(b.mut)},
              {"throw", to_json(b.throw_site)},
              {"dest", {{"path", b.dest_path}, {"skeleton", b.dest_skeleton}}},
              {"trace", to_json(b.trace)},
              {"guard", to_json(b.guard)},
              {"nonebts", b.nonebts},
              {"variant", b.variant()},
              {"seed", b.seed},
              {"rng", kRngName},
              {"matching_traces", b.matching_traces},
              {"instruction", b.rendered_instruction}};
    j["mut"]["source"] = b.mut_source;
    if (b.test_name) j["test_name"] = *b.test_name;
    return j;
}

PromptBundle bundle_from_json(const json& j)
{
    PromptBundle b;
    b.template_id = j.at("template_id").get<std::string>();
    b.mut = method_id_from_json(j.at("mut"));
    b.mut_source = j.at("mut").at("source").get<std::string>();
    b.throw_site = throw_site_from_json(j.at("throw"));
    b.dest_path = j.at("dest").at("path").get<std::string>();
    b.dest_skeleton = j.at("dest").at("skeleton").get<std::string>();
    b.trace = trace_from_json(j.at("trace"));
    b.guard = guard_from_json(j.at("guard"));
    b.nonebts = j.at("nonebts").get<std::vector<std::string>>();
    if (j.contains("test_name")) b.test_name = j.at("test_name").get<std::string>();
    b.seed = j.value("seed", std::uint64_t{0});
    b.matching_traces = j.value("matching_traces", 0);
    b.rendered_instruction = j.at("instruction").get<std::string>();
    return b;
}

json to_json(const NoMatch& n)
{
    return {{"no_match", no_match_reason_name(n.reason)}, {"detail", n.detail}};
}

json to_json(const CorpusExample& e)
{
    json j = to_json(e.prompt);
    j["id"] = e.id;
    j["repo"] = e.repo;
    j["gold_ebt"] = e.gold_ebt;
    return j;
}

CorpusExample corpus_example_from_json(const json& j)
{
    CorpusExample e;
    e.id = j.at("id").get<std::string>();
    e.repo = j.at("repo").get<std::string>();
    e.gold_ebt = j.at("gold_ebt").get<std::string>();
    e.prompt = bundle_from_json(j);
    return e;
}

std::string write_jsonl(const std::vector<json>& rows)
{
    std::string out;
    for (const auto& r : rows) out += r.dump() + "\n";
    return out;
}

std::vector<json> read_jsonl(std::string_view text)
{
    std::vector<json> rows;
    int n = 0;
    for (const auto& line : split_lines(text)) {
        ++n;
        if (trim(line).empty()) continue;
        try {
            rows.push_back(json::parse(line));
        } catch (const json::exception& e) {
            throw Error(ErrorCode::IoError, "line " + std::to_string(n) + ": " + e.what());
        }
    }
    return rows;
}

std::string write_corpus(const std::vector<CorpusExample>& c)
{
    std::vector<json> rows;
    for (const auto& e : c) rows.push_back(to_json(e));
    return write_jsonl(rows);
}

std::vector<CorpusExample> read_corpus(std::string_view text)
{
    std::vector<CorpusExample> out;
    for (const auto& j : read_jsonl(text)) out.push_back(corpus_example_from_json(j));
    return out;
}

namespace {

template <typename T>
json opt(const std::optional<T>& v)
{
    return v ? json(*v) : json(nullptr);
}

template <typename T>
std::optional<T> opt_from(const json& j, const char* key)
{
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<T>();
}

}  // namespace

json to_json(const CandidateReport& r)
{
    return {{"target", r.target},
            {"candidate_digest", r.candidate_digest},
            {"extracted", r.extracted},
            {"xmatch", opt(r.xmatch)},
            {"bleu", opt(r.bleu)},
            {"code_bleu", opt(r.code_bleu)},
            {"code_bleu_degraded", r.code_bleu_degraded},
            {"edit_sim", opt(r.edit_sim)},
            {"matched_e", r.matched_e},
            {"compilable", opt(r.compilable)},
            {"runnable", opt(r.runnable)},
            {"covers_target", opt(r.covers_target)}};
}

CandidateReport candidate_report_from_json(const json& j)
{
    CandidateReport r;
    r.target = j.at("target").get<std::string>();
    r.candidate_digest = j.value("candidate_digest", "");
    r.extracted = j.value("extracted", false);
    r.xmatch = opt_from<bool>(j, "xmatch");
    r.bleu = opt_from<double>(j, "bleu");
    r.code_bleu = opt_from<double>(j, "code_bleu");
    r.code_bleu_degraded = j.value("code_bleu_degraded", false);
    r.edit_sim = opt_from<double>(j, "edit_sim");
    r.matched_e = j.value("matched_e", false);
    r.compilable = opt_from<bool>(j, "compilable");
    r.runnable = opt_from<bool>(j, "runnable");
    r.covers_target = opt_from<bool>(j, "covers_target");
    return r;
}

json to_json(const AggregateReport& a)
{
    return {{"candidates", a.candidates},
            {"targets", a.targets},
            {"covered_targets", a.covered_targets},
            {"bleu", a.bleu},
            {"code_bleu", a.code_bleu},
            {"edit_sim", a.edit_sim},
            {"xmatch", a.xmatch},
            {"compilable", a.compilable},
            {"matched_e", a.matched_e},
            {"runnable", a.runnable},
            {"throw_cov", a.throw_cov},
            {"partial", a.partial},
            {"best_of_k", a.best_of_k}};
}

}  // namespace exbt
