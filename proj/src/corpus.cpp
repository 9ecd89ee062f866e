#include "exbt/corpus.hpp"

#include "exbt/error.hpp"
#include "exbt/serialize.hpp"
#include "exbt/stages.hpp"
#include "exbt/util.hpp"

#include <algorithm>
#include <sstream>

namespace exbt {

int token_count(std::string_view text)
{
    std::istringstream in{std::string(text)};
    std::string w;
    int n = 0;
    while (in >> w) ++n;
    return n;
}

bool test_id_matches(std::string_view test_id, const MethodId& id)
{
    auto hash = test_id.rfind('#');
    if (hash == std::string_view::npos) return false;
    std::string cls(test_id.substr(0, hash));
    std::replace(cls.begin(), cls.end(), '$', '.');
    return cls == id.fqn && test_id.substr(hash + 1) == id.name;
}

std::vector<const TestMethod*> relevant_nonebts(const MethodId& mut, std::string_view dest,
                                                const std::vector<TestMethod>& nonebts, const RepoContext& ctx,
                                                const std::set<MethodId>& also_same_mut, int budget)
{
    std::set<MethodId> callers = also_same_mut;
    for (const auto& e : ctx.call_edges)
        if (e.callee == mut) callers.insert(e.caller);
    std::vector<const TestMethod*> same_mut, same_file;
    for (const auto& t : nonebts) {
        if (callers.count(t.id))
            same_mut.push_back(&t);
        else if (t.id.decl_file == dest)
            same_file.push_back(&t);
    }
    auto by_id = [](const TestMethod* a, const TestMethod* b) { return a->id < b->id; };
    std::sort(same_mut.begin(), same_mut.end(), by_id);
    std::sort(same_file.begin(), same_file.end(), by_id);
    std::vector<const TestMethod*> out;
    int used = 0;
    for (const auto* group : {&same_mut, &same_file}) {
        for (const TestMethod* t : *group) {
            int n = token_count(t->body_text);
            if (used + n > budget) return out;
            used += n;
            out.push_back(t);
        }
    }
    return out;
}

void link_relevant_nonebts(CorpusExample& ex, const std::vector<TestMethod>& nonebts, const RepoContext& ctx,
                           int budget)
{
    ex.prompt.nonebts.clear();
    for (const TestMethod* t : relevant_nonebts(ex.prompt.mut, ex.prompt.dest_path, nonebts, ctx, {}, budget))
        ex.prompt.nonebts.push_back(dedent_tail(t->body_text));
    ex.prompt.rendered_instruction = render_instruction(ex.prompt, ex.prompt.template_id);
}

bool CorpusExample::same_as(const CorpusExample& o) const
{
    return to_json(*this) == to_json(o);
}

CorpusResult collect_training_corpus(const std::vector<TestMethod>& ebts, const std::vector<TestMethod>& nonebts,
                                     const RepoContext& ctx, const TraceLog& ebt_log, const std::string& repo_name,
                                     int nonebt_budget)
{
    count_stage("collect_training_corpus");
    CorpusResult out;
    std::set<std::string> golds;
    for (const auto& ebt : ebts) {
        std::string id = ebt.id.fqn + "#" + ebt.id.name;
        auto entry = std::find_if(ebt_log.entries.begin(), ebt_log.entries.end(),
                                  [&](const TraceLogEntry& e) { return test_id_matches(e.test_id, ebt.id); });
        if (entry == ebt_log.entries.end()) {
            out.skipped.push_back({id, "NoTrace"});
            continue;
        }
        if (golds.count(ebt.body_text)) {
            out.skipped.push_back({id, "DuplicateGold"});
            continue;
        }
        try {
            StackTrace r = exclude_test_and_util_frames(entry->trace, ctx, ebt.id.decl_file);
            Endpoints ep = endpoints(r, ctx);
            const MethodInfo* mut = ctx.find(ep.mut);
            CorpusExample ex;
            ex.id = id;
            ex.repo = repo_name;
            PromptBundle& b = ex.prompt;
            b.mut = ep.mut;
            b.mut_source = dedent_tail(ctx.unit_of(*mut).text(mut->decl->range));
            b.throw_site = ep.site;
            b.dest_path = ebt.id.decl_file;
            b.dest_skeleton = dest_skeleton(ctx, b.dest_path);
            b.trace = r;
            b.guard = compute_guard_expression(r, ctx);
            b.test_name = ebt.id.name;
            b.matching_traces = 1;
            ex.gold_ebt = ebt.body_text;
            link_relevant_nonebts(ex, nonebts, ctx, nonebt_budget);
            golds.insert(ebt.body_text);
            out.examples.push_back(std::move(ex));
            count_stage("corpus_examples");
        } catch (const Error& e) {
            out.skipped.push_back({id, std::string(e.code_name())});
        }
    }
    return out;
}

}  // namespace exbt
