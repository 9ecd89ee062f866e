#include "exbt/guardexpr.hpp"

#include "exbt/error.hpp"
#include "exbt/java/parser.hpp"
#include "exbt/java/render.hpp"
#include "exbt/stages.hpp"
#include "exbt/util.hpp"

#include <algorithm>
#include <set>

namespace exbt {

using namespace java;

std::string_view node_tag_name(NodeTag t)
{
    switch (t) {
    case NodeTag::StartStatement: return "StartStatement";
    case NodeTag::Condition: return "Condition";
    case NodeTag::NegatedCondition: return "NegatedCondition";
    case NodeTag::Assignment: return "Assignment";
    case NodeTag::MethodDecl: return "MethodDecl";
    case NodeTag::MethodCall: return "MethodCall";
    }
    return "?";
}

std::string Condition::text() const { return render_expr(expr); }

std::vector<std::string> GuardExpression::condition_texts() const
{
    std::vector<std::string> out;
    for (const auto& c : conditions) out.push_back(c.text());
    return out;
}

std::vector<std::string> GuardExpression::original_texts() const
{
    std::vector<std::string> out;
    for (const auto& c : conditions) out.push_back(c.original);
    return out;
}

namespace {

int depth_of(const Stmt& s)
{
    int d = 0;
    for (const Stmt* p = s.parent; p; p = p->parent) ++d;
    return d;
}

bool arity_fits(const MethodDecl& m, std::size_t n)
{
    if (m.params.size() == n) return true;
    return !m.params.empty() && m.params.back().varargs && n + 1 >= m.params.size();
}

bool call_matches(const Expr& e, const MethodInfo& callee)
{
    const MethodDecl& d = *callee.decl;
    if (d.kind == MethodKind::Constructor) {
        if (e.kind == ExprKind::New && simple_type_name(e.type) == callee.type->name) return arity_fits(d, e.operands.size());
        if (e.kind == ExprKind::Call && (e.text == "this" || e.text == "super")) return arity_fits(d, e.operands.size());
        return false;
    }
    return e.kind == ExprKind::Call && e.text == d.name && arity_fits(d, e.operands.size());
}

void each_expr(const ExprPtr& e, const std::function<void(const ExprPtr&)>& fn);

void each_expr(const Stmt& s, const std::function<void(const ExprPtr&)>& fn)
{
    each_expr(s.expr, fn);
    for (const auto& v : s.vars) each_expr(v.init, fn);
    for (const auto& e : s.init) each_expr(e, fn);
    for (const auto& e : s.update) each_expr(e, fn);
    for_each_child(s, [&](const Stmt& c) { each_expr(c, fn); });
}

void each_expr(const ExprPtr& e, const std::function<void(const ExprPtr&)>& fn)
{
    if (!e) return;
    fn(e);
    each_expr(e->target, fn);
    for (const auto& op : e->operands) each_expr(op, fn);
    if (e->body) each_expr(*e->body, fn);
}

/// The call expression in `where` (or the field initializer) that invokes `callee`.
ExprPtr find_call(const Stmt* where, const MethodDecl& caller, const MethodInfo& callee, int line)
{
    ExprPtr on_line, any;
    auto probe = [&](const ExprPtr& e) {
        if (!call_matches(*e, callee)) return;
        if (!any) any = e;
        if (!on_line && e->range.contains_line(line)) on_line = e;
    };
    if (where)
        each_expr(*where, probe);
    else
        each_expr(caller.field_init, probe);
    return on_line ? on_line : any;
}

const Stmt* locate_statement(const MethodDecl& m, int line, bool want_throw, const MethodInfo* callee)
{
    std::vector<const Stmt*> hits;
    visit_method(
        m, [](const Expr&) {},
        [&](const Stmt& s) {
            if (s.kind != StmtKind::Block && s.range.contains_line(line)) hits.push_back(&s);
        });
    if (hits.empty()) return nullptr;
    auto deepest = [&](auto pred) -> const Stmt* {
        const Stmt* best = nullptr;
        int best_depth = -1;
        for (const Stmt* s : hits) {
            if (!pred(*s)) continue;
            int d = depth_of(*s);
            if (d > best_depth) {
                best = s;
                best_depth = d;
            }
        }
        return best;
    };
    if (want_throw) {
        if (const Stmt* t = deepest([](const Stmt& s) { return s.kind == StmtKind::Throw; })) return t;
    }
    if (callee) {
        auto has_call = [&](const Stmt& s) {
            bool found = false;
            auto check = [&](const ExprPtr& root) {
                visit_expr(root, [&](const Expr& e) { found = found || call_matches(e, *callee); }, [](const Stmt&) {});
            };
            check(s.expr);
            for (const auto& v : s.vars) check(v.init);
            for (const auto& e : s.init) check(e);
            for (const auto& e : s.update) check(e);
            return found;
        };
        if (const Stmt* c = deepest(has_call)) return c;
    }
    return deepest([](const Stmt&) { return true; });
}

std::string collapse(std::string_view s)
{
    std::string out;
    bool space = false;
    for (char c : s) {
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
            space = !out.empty();
        } else {
            if (space) out.push_back(' ');
            space = false;
            out.push_back(c);
        }
    }
    return out;
}

/// Assignments a statement makes to plain local names, last effect first.
std::vector<std::pair<std::string, ExprPtr>> assignments_of(const Stmt& s)
{
    std::vector<std::pair<std::string, ExprPtr>> out;
    if (s.kind == StmtKind::LocalVar) {
        for (auto it = s.vars.rbegin(); it != s.vars.rend(); ++it)
            if (it->init && it->init->kind != ExprKind::ArrayInit) out.emplace_back(it->name, it->init);
        return out;
    }
    if (s.kind != StmtKind::ExprStmt || !s.expr) return out;
    const Expr& e = *s.expr;
    if (e.kind == ExprKind::Assign && e.operands[0]->kind == ExprKind::Name) {
        const std::string& name = e.operands[0]->text;
        if (e.text == "=") {
            out.emplace_back(name, e.operands[1]);
        } else {
            std::string op = e.text.substr(0, e.text.size() - 1);
            out.emplace_back(name, make_binary(op, e.operands[0], e.operands[1]));
        }
    } else if ((e.kind == ExprKind::Postfix || e.kind == ExprKind::Unary) && (e.text == "++" || e.text == "--") &&
               e.operands[0]->kind == ExprKind::Name) {
        out.emplace_back(e.operands[0]->text,
                         make_binary(e.text == "++" ? "+" : "-", e.operands[0], make_literal("1")));
    }
    return out;
}

ExprPtr case_condition(const ExprPtr& selector, const std::vector<ExprPtr>& labels)
{
    ExprPtr acc;
    for (const auto& l : labels) {
        if (l->kind == ExprKind::Raw) continue;  // type patterns carry no equality
        ExprPtr eq = make_binary("==", selector, l);
        acc = acc ? make_binary("||", acc, eq) : eq;
    }
    return acc;
}

class Collector {
public:
    Collector(NodeList& out, const MethodInfo& m) : out_(out), m_(m) {}

    void push(NodeTag tag, ExprPtr e, int line)
    {
        GuardNode n;
        n.tag = tag;
        n.method = m_.id;
        n.line = line;
        n.text = tag == NodeTag::NegatedCondition ? render_expr(negate(e)) : render_expr(e);
        n.expr = std::move(e);
        out_.nodes.push_back(std::move(n));
    }

    void walk(const Stmt* start)
    {
        const Stmt* cur = start;
        for (const Stmt* par = cur->parent; par; cur = par, par = par->parent) {
            switch (par->kind) {
            case StmtKind::If:
                if (par->then_branch.get() == cur)
                    push(NodeTag::Condition, par->expr, par->range.begin_line);
                else if (par->else_branch.get() == cur)
                    push(NodeTag::NegatedCondition, par->expr, par->range.begin_line);
                break;
            case StmtKind::For:
            case StmtKind::While:
                if (par->then_branch.get() == cur && par->expr)
                    push(NodeTag::Condition, par->expr, par->range.begin_line);
                break;
            case StmtKind::Switch:
                if (cur->kind == StmtKind::Case) switch_case(*par, *cur);
                break;
            case StmtKind::Block:
            case StmtKind::Case:
                preceding_assignments(*par, *cur);
                break;
            default:
                break;
            }
        }
    }

private:
    void switch_case(const Stmt& sw, const Stmt& c)
    {
        if (!c.is_default) {
            if (ExprPtr cond = case_condition(sw.expr, c.labels)) push(NodeTag::Condition, cond, c.range.begin_line);
            return;
        }
        for (const auto& other : sw.children) {
            if (other.get() == &c || other->is_default) continue;
            for (const auto& l : other->labels) {
                if (l->kind == ExprKind::Raw) continue;
                push(NodeTag::NegatedCondition, make_binary("==", sw.expr, l), other->range.begin_line);
            }
        }
    }

    void preceding_assignments(const Stmt& block, const Stmt& cur)
    {
        auto it = std::find_if(block.children.begin(), block.children.end(),
                               [&](const auto& c) { return c.get() == &cur; });
        if (it == block.children.end()) return;
        while (it != block.children.begin()) {
            --it;
            for (auto& [name, rhs] : assignments_of(**it)) {
                GuardNode n;
                n.tag = NodeTag::Assignment;
                n.method = m_.id;
                n.line = (*it)->range.begin_line;
                n.target = name;
                n.expr = rhs;
                n.text = name + " = " + render_expr(rhs);
                out_.nodes.push_back(std::move(n));
            }
        }
    }

    NodeList& out_;
    const MethodInfo& m_;
};

const MethodInfo& resolve_or_throw(const RepoContext& ctx, const Frame& f)
{
    auto [res, m] = resolve_frame(ctx, f);
    if (res == FrameResolution::OutOfSpan)
        throw Error(ErrorCode::FrameOutOfSpan,
                    "line " + std::to_string(f.line) + " is outside " + f.class_fqn + "." + f.method);
    if (!m) throw Error(ErrorCode::UnknownMethod, "frame does not resolve in repo: " + render_frame(f));
    if (!m->decl->range.contains_line(f.line))
        throw Error(ErrorCode::FrameOutOfSpan, "line " + std::to_string(f.line) + " is outside " + m->id.key());
    return *m;
}

std::set<std::string> local_names(const MethodInfo& m, bool include_params)
{
    std::set<std::string> out;
    if (include_params)
        for (const auto& p : m.decl->params) out.insert(p.name);
    visit_method(
        *m.decl,
        [&](const Expr& e) {
            if (e.kind == ExprKind::Lambda) out.insert(e.params.begin(), e.params.end());
            if (e.kind == ExprKind::InstanceOf && !e.text.empty()) out.insert(e.text);
        },
        [&](const Stmt& s) {
            for (const auto& v : s.vars) out.insert(v.name);
        });
    return out;
}

}  // namespace

NodeList collect_nodes(const StackTrace& r, const RepoContext& ctx)
{
    if (r.empty()) throw Error(ErrorCode::EmptyAfterExclusion, "empty stack trace");
    count_stage("collect_nodes");
    NodeList out;
    std::vector<const MethodInfo*> resolved;
    for (const auto& f : r.frames) resolved.push_back(&resolve_or_throw(ctx, f));

    for (std::size_t k = r.frames.size(); k-- > 0;) {
        const MethodInfo& m = *resolved[k];
        const Frame& f = r.frames[k];
        const CompilationUnit& unit = ctx.unit_of(m);
        bool innermost = k + 1 == r.frames.size();
        const MethodInfo* callee = innermost ? nullptr : resolved[k + 1];
        const Stmt* start = m.decl->body ? locate_statement(*m.decl, f.line, innermost, callee) : nullptr;

        if (callee) {
            GuardNode decl;
            decl.tag = NodeTag::MethodDecl;
            decl.method = callee->id;
            decl.line = callee->id.decl_line;
            for (const auto& p : callee->decl->params) decl.params.push_back(p.name);
            decl.text = callee->id.qualified_name() + "(" + [&] {
                std::string s;
                for (std::size_t i = 0; i < decl.params.size(); ++i) s += (i ? ", " : "") + decl.params[i];
                return s;
            }() + ")";
            out.nodes.push_back(std::move(decl));

            GuardNode call;
            call.tag = NodeTag::MethodCall;
            call.method = m.id;
            call.line = f.line;
            call.expr = find_call(start, *m.decl, *callee, f.line);
            call.text = call.expr ? render_expr(call.expr) : "";
            out.nodes.push_back(std::move(call));
        }

        GuardNode st;
        st.tag = NodeTag::StartStatement;
        st.method = m.id;
        st.line = f.line;
        if (start) st.text = collapse(unit.text(start->range));
        out.nodes.push_back(std::move(st));

        if (start) Collector(out, m).walk(start);
        out.methods.push_back(m);
    }
    return out;
}

std::vector<Condition> merge(const std::vector<Condition>& e, const Bindings& m)
{
    std::vector<Condition> out;
    out.reserve(e.size());
    for (const auto& c : e) out.push_back({substitute(c.expr, m), c.original});
    return out;
}

std::string render_conjunction(const std::vector<Condition>& e)
{
    std::string out;
    for (const auto& c : e) {
        if (!out.empty()) out += " && ";
        out += (e.size() > 1 && precedence(*c.expr) < 4) ? "(" + c.text() + ")" : c.text();
    }
    return out;
}

GuardExpression guard_from_nodes(const NodeList& n)
{
    count_stage("compute_guard");
    GuardExpression g;
    std::vector<Condition> e;
    const GuardNode* pending_decl = nullptr;
    for (const auto& node : n.nodes) {
        switch (node.tag) {
        case NodeTag::Condition:
            e.push_back({node.expr, render_expr(node.expr)});
            break;
        case NodeTag::NegatedCondition: {
            ExprPtr neg = negate(node.expr);
            e.push_back({neg, render_expr(neg)});
            break;
        }
        case NodeTag::Assignment:
            e = merge(e, {{node.target, node.expr}});
            break;
        case NodeTag::MethodDecl:
            pending_decl = &node;
            break;
        case NodeTag::MethodCall:
            if (pending_decl && node.expr) {
                Bindings argmap;
                const auto& args = node.expr->operands;
                std::size_t count = std::min(pending_decl->params.size(), args.size());
                if (pending_decl->params.size() != args.size() && count > 0) --count;  // varargs tail
                for (std::size_t i = 0; i < count; ++i) argmap[pending_decl->params[i]] = args[i];
                e = merge(e, argmap);
            }
            pending_decl = nullptr;
            break;
        case NodeTag::StartStatement:
            break;
        }
    }
    // set semantics: keep the first occurrence of each rendered condition
    std::set<std::string> seen;
    for (auto& c : e)
        if (seen.insert(c.text()).second) g.conditions.push_back(std::move(c));
    g.rendered = render_conjunction(g.conditions);

    if (!n.methods.empty()) {
        std::set<std::string> locals;
        for (std::size_t i = 0; i < n.methods.size(); ++i) {
            bool is_mut = i + 1 == n.methods.size();
            auto names = local_names(n.methods[i], !is_mut);
            locals.insert(names.begin(), names.end());
        }
        for (const auto& p : n.methods.back().decl->params) locals.erase(p.name);
        std::set<std::string> unresolved;
        for (const auto& c : g.conditions)
            for (const auto& name : free_names(c.expr))
                if (locals.count(name)) unresolved.insert(name);
        g.unresolved_names.assign(unresolved.begin(), unresolved.end());
    }
    return g;
}

GuardExpression compute_guard_expression(const StackTrace& r, const RepoContext& ctx)
{
    return guard_from_nodes(collect_nodes(r, ctx));
}

namespace {

std::int64_t as_int(const Value& v)
{
    if (auto p = std::get_if<std::int64_t>(&v)) return *p;
    throw Error(ErrorCode::UnsupportedConstruct, "expected an integer operand");
}

bool as_bool(const Value& v)
{
    if (auto p = std::get_if<bool>(&v)) return *p;
    throw Error(ErrorCode::UnsupportedConstruct, "expected a boolean operand");
}

std::int64_t parse_int_literal(std::string text)
{
    text.erase(std::remove(text.begin(), text.end(), '_'), text.end());
    if (!text.empty() && (text.back() == 'L' || text.back() == 'l')) text.pop_back();
    try {
        std::size_t used = 0;
        std::int64_t v = std::stoll(text, &used, 0);
        if (used == text.size()) return v;
    } catch (const std::exception&) {
    }
    throw Error(ErrorCode::UnsupportedConstruct, "unsupported literal: " + text);
}

}  // namespace

Value evaluate(const ExprPtr& ep, const Env& env)
{
    const Expr& e = *ep;
    switch (e.kind) {
    case ExprKind::Literal:
        if (e.text == "true") return true;
        if (e.text == "false") return false;
        return parse_int_literal(e.text);
    case ExprKind::Name: {
        auto it = env.find(e.text);
        if (it == env.end()) throw Error(ErrorCode::UnboundName, "unbound name: " + e.text);
        return it->second;
    }
    case ExprKind::Paren:
        return evaluate(e.operands[0], env);
    case ExprKind::Unary: {
        Value v = evaluate(e.operands[0], env);
        if (e.text == "!") return !as_bool(v);
        if (e.text == "-") return -as_int(v);
        if (e.text == "+") return as_int(v);
        break;
    }
    case ExprKind::Binary: {
        const std::string& op = e.text;
        if (op == "&&") return as_bool(evaluate(e.operands[0], env)) && as_bool(evaluate(e.operands[1], env));
        if (op == "||") return as_bool(evaluate(e.operands[0], env)) || as_bool(evaluate(e.operands[1], env));
        Value a = evaluate(e.operands[0], env);
        Value b = evaluate(e.operands[1], env);
        if (op == "==" || op == "!=") {
            if (a.index() != b.index()) throw Error(ErrorCode::UnsupportedConstruct, "mixed-type comparison");
            return (a == b) == (op == "==");
        }
        std::int64_t x = as_int(a), y = as_int(b);
        if (op == "+") return x + y;
        if (op == "-") return x - y;
        if (op == "*") return x * y;
        if (op == "/" || op == "%") {
            if (y == 0) throw Error(ErrorCode::DivisionByZero, "division by zero in guard");
            return op == "/" ? x / y : x % y;
        }
        if (op == "<") return x < y;
        if (op == "<=") return x <= y;
        if (op == ">") return x > y;
        if (op == ">=") return x >= y;
        break;
    }
    default:
        break;
    }
    throw Error(ErrorCode::UnsupportedConstruct, "cannot evaluate: " + render_expr(ep));
}

bool evaluate_guard(const GuardExpression& g, const Env& env)
{
    for (const auto& c : g.conditions)
        if (!as_bool(evaluate(c.expr, env))) return false;
    return true;
}

Condition parse_condition(std::string_view text)
{
    ExprPtr e = parse_expression(text, true);
    return {e, render_expr(e)};
}

}  // namespace exbt
