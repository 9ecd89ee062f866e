#pragma once

#include "exbt/java/ast.hpp"

#include <map>
#include <set>
#include <string>

namespace exbt::java {

/// Binding strength of an expression's top-level operator (1 = assignment,
/// 15 = primary). Higher binds tighter.
int precedence(const Expr& e);

/// Renders with canonical spacing and the fewest parentheses that keep the
/// tree's structure. Paren nodes always render their parentheses.
std::string render_expr(const ExprPtr& e);

/// Simultaneous substitution of Name nodes. A non-atomic replacement is
/// wrapped in a Paren node. Returns `e` itself when nothing changed.
ExprPtr substitute(const ExprPtr& e, const std::map<std::string, ExprPtr>& bindings);

/// Logical negation; negating `!x` yields `x`.
ExprPtr negate(const ExprPtr& e);

ExprPtr make_binary(std::string op, ExprPtr lhs, ExprPtr rhs);
ExprPtr make_name(std::string name);
ExprPtr make_literal(std::string text);

/// Variable-like names an expression reads: Name nodes, with lambda
/// parameters excluded.
std::set<std::string> free_names(const ExprPtr& e);

}  // namespace exbt::java
