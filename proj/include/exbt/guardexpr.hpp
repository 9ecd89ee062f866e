#pragma once

#include "exbt/java/ast.hpp"
#include "exbt/jmodel.hpp"
#include "exbt/stacktrace.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace exbt {

enum class NodeTag { StartStatement, Condition, NegatedCondition, Assignment, MethodDecl, MethodCall };

std::string_view node_tag_name(NodeTag t);

struct GuardNode {
    NodeTag tag = NodeTag::StartStatement;
    MethodId method;                 // method the node was found in; the callee for MethodDecl
    int line = 0;
    java::ExprPtr expr;              // condition as written, assignment rhs, or the call expression
    std::string target;              // assignment lhs
    std::vector<std::string> params; // MethodDecl parameter names
    std::string text;                // display form
};

/// Nodes collected from the throw site back to the MUT.
struct NodeList {
    std::vector<GuardNode> nodes;
    std::vector<MethodInfo> methods;  // traversed methods, throw frame first
};

struct Condition {
    java::ExprPtr expr;
    std::string original;  // rendered before any substitution

    std::string text() const;
};

struct GuardExpression {
    std::vector<Condition> conditions;
    std::string rendered;
    std::vector<std::string> unresolved_names;

    std::vector<std::string> condition_texts() const;
    std::vector<std::string> original_texts() const;
};

/// Walks every frame of `r` (throw frame first) from the located statement up
/// to the method root. Throws Error(UnknownMethod) or Error(FrameOutOfSpan).
NodeList collect_nodes(const StackTrace& r, const RepoContext& ctx);

/// Replays the nodes: conditions accumulate, assignments and call pairs
/// substitute into the conditions collected so far.
GuardExpression guard_from_nodes(const NodeList& n);

GuardExpression compute_guard_expression(const StackTrace& r, const RepoContext& ctx);

using Bindings = std::map<std::string, java::ExprPtr>;

/// Simultaneous identifier-boundary substitution over every condition.
std::vector<Condition> merge(const std::vector<Condition>& e, const Bindings& m);

/// Conjunction with ` && `; conditions with a top-level `||` or `?:` are parenthesized.
std::string render_conjunction(const std::vector<Condition>& e);

using Value = std::variant<std::int64_t, bool>;
using Env = std::map<std::string, Value>;

/// Evaluates one expression over int/bool values. Throws Error(UnboundName),
/// Error(UnsupportedConstruct) or Error(DivisionByZero).
Value evaluate(const java::ExprPtr& e, const Env& env);

/// Conjunction of all conditions, short-circuiting left to right.
bool evaluate_guard(const GuardExpression& g, const Env& env);

/// Parses a rendered condition back into a Condition (for guards read from disk).
Condition parse_condition(std::string_view text);

}  // namespace exbt
