#include "exbt/java/render.hpp"

#include <algorithm>

namespace exbt::java {

namespace {

int binary_op_precedence(std::string_view op)
{
    if (op == "||") return 3;
    if (op == "&&") return 4;
    if (op == "|") return 5;
    if (op == "^") return 6;
    if (op == "&") return 7;
    if (op == "==" || op == "!=") return 8;
    if (op == "<" || op == ">" || op == "<=" || op == ">=") return 9;
    if (op == "<<" || op == ">>" || op == ">>>") return 10;
    if (op == "+" || op == "-") return 11;
    if (op == "*" || op == "/" || op == "%") return 12;
    return 15;
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

std::string wrap_if(const ExprPtr& e, bool cond)
{
    std::string s = render_expr(e);
    return cond ? "(" + s + ")" : s;
}

std::string join_args(const std::vector<ExprPtr>& args)
{
    std::string out;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (i) out += ", ";
        out += render_expr(args[i]);
    }
    return out;
}

bool atomic_replacement(const Expr& e)
{
    return precedence(e) >= 13 && e.kind != ExprKind::Cast && e.kind != ExprKind::Unary;
}

ExprPtr subst(const ExprPtr& e, const std::map<std::string, ExprPtr>& b, const std::set<std::string>& shadow)
{
    if (!e) return e;
    switch (e->kind) {
    case ExprKind::Name: {
        if (shadow.count(e->text)) return e;
        auto it = b.find(e->text);
        if (it == b.end()) return e;
        if (it->second->kind == ExprKind::Paren || atomic_replacement(*it->second)) return it->second;
        auto p = std::make_shared<Expr>();
        p->kind = ExprKind::Paren;
        p->operands = {it->second};
        return p;
    }
    // rendered from verbatim source; left alone
    case ExprKind::NewArray:
    case ExprKind::SwitchExpr:
    case ExprKind::MethodRef:
    case ExprKind::Raw:
        return e;
    case ExprKind::New:
        if (e->anon) return e;
        break;
    case ExprKind::Lambda:
        if (e->body) return e;
        break;
    default:
        break;
    }
    std::set<std::string> inner_shadow = shadow;
    if (e->kind == ExprKind::Lambda) inner_shadow.insert(e->params.begin(), e->params.end());
    bool changed = false;
    ExprPtr target = subst(e->target, b, shadow);
    changed |= target != e->target;
    std::vector<ExprPtr> ops;
    ops.reserve(e->operands.size());
    for (const auto& op : e->operands) {
        ops.push_back(subst(op, b, inner_shadow));
        changed |= ops.back() != op;
    }
    if (!changed) return e;
    auto copy = std::make_shared<Expr>(*e);
    copy->target = std::move(target);
    copy->operands = std::move(ops);
    copy->source.clear();
    return copy;
}

void collect_free(const ExprPtr& e, std::set<std::string>& shadow, std::set<std::string>& out)
{
    if (!e) return;
    if (e->kind == ExprKind::Name) {
        if (!shadow.count(e->text)) out.insert(e->text);
        return;
    }
    if (e->kind == ExprKind::Lambda) {
        auto saved = shadow;
        shadow.insert(e->params.begin(), e->params.end());
        for (const auto& op : e->operands) collect_free(op, shadow, out);
        shadow = std::move(saved);
        return;
    }
    collect_free(e->target, shadow, out);
    for (const auto& op : e->operands) collect_free(op, shadow, out);
}

}  // namespace

int precedence(const Expr& e)
{
    switch (e.kind) {
    case ExprKind::Lambda: return 0;
    case ExprKind::Assign: return 1;
    case ExprKind::Conditional: return 2;
    case ExprKind::Binary: return binary_op_precedence(e.text);
    case ExprKind::InstanceOf: return 9;
    case ExprKind::Unary:
    case ExprKind::Cast: return 13;
    case ExprKind::Postfix: return 14;
    case ExprKind::SwitchExpr: return 2;
    default: return 15;
    }
}

std::string render_expr(const ExprPtr& ep)
{
    if (!ep) return "";
    const Expr& e = *ep;
    switch (e.kind) {
    case ExprKind::Name:
    case ExprKind::Literal:
        return e.text;
    case ExprKind::This: return "this";
    case ExprKind::Super: return "super";
    case ExprKind::Binary: {
        int p = precedence(e);
        return wrap_if(e.operands[0], precedence(*e.operands[0]) < p) + " " + e.text + " " +
               wrap_if(e.operands[1], precedence(*e.operands[1]) <= p);
    }
    case ExprKind::Unary: {
        std::string inner = wrap_if(e.operands[0], precedence(*e.operands[0]) < 13);
        bool clash = (e.text == "-" || e.text == "+") && !inner.empty() && inner[0] == e.text[0];
        return e.text + (clash ? " " : "") + inner;
    }
    case ExprKind::Postfix:
        return wrap_if(e.operands[0], precedence(*e.operands[0]) < 14) + e.text;
    case ExprKind::Assign:
        return wrap_if(e.operands[0], precedence(*e.operands[0]) < 14) + " " + e.text + " " +
               wrap_if(e.operands[1], precedence(*e.operands[1]) < 1);
    case ExprKind::Conditional:
        return wrap_if(e.operands[0], precedence(*e.operands[0]) <= 2) + " ? " +
               wrap_if(e.operands[1], precedence(*e.operands[1]) < 2) + " : " +
               wrap_if(e.operands[2], precedence(*e.operands[2]) < 2);
    case ExprKind::Call: {
        std::string head;
        if (e.target) head = wrap_if(e.target, precedence(*e.target) < 14) + ".";
        return head + e.text + "(" + join_args(e.operands) + ")";
    }
    case ExprKind::FieldAccess:
        return wrap_if(e.target, precedence(*e.target) < 14) + "." + e.text;
    case ExprKind::ArrayAccess:
        return wrap_if(e.target, precedence(*e.target) < 14) + "[" + render_expr(e.operands[0]) + "]";
    case ExprKind::New: {
        if (e.anon && !e.source.empty()) return collapse(e.source);
        std::string head;
        if (e.target) head = wrap_if(e.target, precedence(*e.target) < 14) + ".";
        return head + "new " + e.type + "(" + join_args(e.operands) + ")";
    }
    case ExprKind::ArrayInit:
        return "{" + join_args(e.operands) + "}";
    case ExprKind::Cast:
        return "(" + e.type + ") " + wrap_if(e.operands[0], precedence(*e.operands[0]) < 13);
    case ExprKind::InstanceOf:
        return wrap_if(e.operands[0], precedence(*e.operands[0]) < 9) + " instanceof " + e.type +
               (e.text.empty() ? "" : " " + e.text);
    case ExprKind::Lambda: {
        if (e.body) return collapse(e.source);
        std::string params;
        if (e.params.size() == 1) {
            params = e.params[0];
        } else {
            params = "(";
            for (std::size_t i = 0; i < e.params.size(); ++i) params += (i ? ", " : "") + e.params[i];
            params += ")";
        }
        return params + " -> " + render_expr(e.operands[0]);
    }
    case ExprKind::ClassLit:
        return e.type + ".class";
    case ExprKind::Paren:
        return "(" + render_expr(e.operands[0]) + ")";
    case ExprKind::NewArray:
    case ExprKind::MethodRef:
    case ExprKind::SwitchExpr:
    case ExprKind::Raw:
        return collapse(e.source.empty() ? e.text : e.source);
    }
    return collapse(e.source);
}

ExprPtr substitute(const ExprPtr& e, const std::map<std::string, ExprPtr>& bindings)
{
    if (bindings.empty()) return e;
    return subst(e, bindings, {});
}

ExprPtr negate(const ExprPtr& e)
{
    if (e->kind == ExprKind::Unary && e->text == "!") return e->operands[0];
    if (e->kind == ExprKind::Paren && e->operands[0]->kind == ExprKind::Unary && e->operands[0]->text == "!")
        return e->operands[0]->operands[0];
    auto n = std::make_shared<Expr>();
    n->kind = ExprKind::Unary;
    n->text = "!";
    n->operands = {e};
    return n;
}

ExprPtr make_binary(std::string op, ExprPtr lhs, ExprPtr rhs)
{
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::Binary;
    e->text = std::move(op);
    e->operands = {std::move(lhs), std::move(rhs)};
    return e;
}

ExprPtr make_name(std::string name)
{
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::Name;
    e->text = std::move(name);
    return e;
}

ExprPtr make_literal(std::string text)
{
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::Literal;
    e->text = std::move(text);
    return e;
}

std::set<std::string> free_names(const ExprPtr& e)
{
    std::set<std::string> shadow, out;
    collect_free(e, shadow, out);
    return out;
}

}  // namespace exbt::java
