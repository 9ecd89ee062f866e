#include "exbt/java/ast.hpp"

#include <algorithm>

namespace exbt::java {

std::string Annotation::simple_name() const
{
    auto dot = name.rfind('.');
    return dot == std::string::npos ? name : name.substr(dot + 1);
}

bool MethodDecl::has_modifier(std::string_view m) const
{
    return std::find(modifiers.begin(), modifiers.end(), m) != modifiers.end();
}

const Annotation* MethodDecl::annotation(std::string_view simple) const
{
    for (const auto& a : annotations)
        if (a.simple_name() == simple) return &a;
    return nullptr;
}

namespace {

void visit_type(const TypeDecl& t, const std::function<void(const Expr&)>& on_expr,
                const std::function<void(const Stmt&)>& on_stmt)
{
    for (const auto& m : t.methods) visit_method(*m, on_expr, on_stmt);
    for (const auto& n : t.nested) visit_type(*n, on_expr, on_stmt);
}

}  // namespace

void visit_expr(const ExprPtr& e, const std::function<void(const Expr&)>& on_expr,
                const std::function<void(const Stmt&)>& on_stmt)
{
    if (!e) return;
    on_expr(*e);
    visit_expr(e->target, on_expr, on_stmt);
    for (const auto& op : e->operands) visit_expr(op, on_expr, on_stmt);
    if (e->body) visit_stmt(*e->body, on_expr, on_stmt);
    if (e->anon) visit_type(*e->anon, on_expr, on_stmt);
}

void visit_stmt(const Stmt& s, const std::function<void(const Expr&)>& on_expr,
                const std::function<void(const Stmt&)>& on_stmt)
{
    on_stmt(s);
    visit_expr(s.expr, on_expr, on_stmt);
    for (const auto& v : s.vars) visit_expr(v.init, on_expr, on_stmt);
    for (const auto& e : s.init) visit_expr(e, on_expr, on_stmt);
    for (const auto& e : s.update) visit_expr(e, on_expr, on_stmt);
    for (const auto& e : s.labels) visit_expr(e, on_expr, on_stmt);
    if (s.local_type) visit_type(*s.local_type, on_expr, on_stmt);
    for_each_child(s, [&](const Stmt& c) { visit_stmt(c, on_expr, on_stmt); });
}

void visit_method(const MethodDecl& m, const std::function<void(const Expr&)>& on_expr,
                  const std::function<void(const Stmt&)>& on_stmt)
{
    if (m.body) visit_stmt(*m.body, on_expr, on_stmt);
    visit_expr(m.field_init, on_expr, on_stmt);
}

void for_each_child(const Stmt& s, const std::function<void(const Stmt&)>& fn)
{
    // source order: try block / then, catches or block children, else / finally
    if (s.kind == StmtKind::Try) {
        if (s.then_branch) fn(*s.then_branch);
        for (const auto& c : s.children) fn(*c);
        if (s.else_branch) fn(*s.else_branch);
        return;
    }
    for (const auto& c : s.children) fn(*c);
    if (s.then_branch) fn(*s.then_branch);
    if (s.else_branch) fn(*s.else_branch);
}

std::vector<const TypeDecl*> all_types(const CompilationUnit& unit)
{
    std::vector<const TypeDecl*> out;
    std::function<void(const TypeDecl&)> rec = [&](const TypeDecl& t) {
        out.push_back(&t);
        for (const auto& n : t.nested) rec(*n);
    };
    for (const auto& t : unit.types) rec(*t);
    return out;
}

}  // namespace exbt::java
