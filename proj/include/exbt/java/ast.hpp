#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace exbt::java {

struct SourceRange {
    std::size_t begin = 0;  // byte offsets
    std::size_t end = 0;
    int begin_line = 1;
    int end_line = 1;

    bool contains_line(int line) const { return begin_line <= line && line <= end_line; }
};

struct Stmt;
struct TypeDecl;
struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

enum class ExprKind {
    Name,
    Literal,
    This,
    Super,
    Binary,
    Unary,    // prefix
    Postfix,  // x++ / x--
    Assign,
    Conditional,
    Call,
    FieldAccess,
    ArrayAccess,
    New,
    NewArray,
    ArrayInit,
    Cast,
    InstanceOf,
    Lambda,
    MethodRef,
    ClassLit,
    Paren,  // only created by substitution; parsed parentheses are not kept
    SwitchExpr,
    Raw,    // verbatim text the parser keeps without structure (patterns, annotations)
};

/// Immutable expression node. Substitution builds new trees that share
/// unchanged subtrees.
struct Expr {
    ExprKind kind = ExprKind::Raw;
    std::string text;                // identifier, literal, operator, member name
    std::string type;                // Cast/New/NewArray/InstanceOf/ClassLit/MethodRef target type
    ExprPtr target;                  // receiver for Call/FieldAccess/MethodRef, array for ArrayAccess
    std::vector<ExprPtr> operands;   // operands or call arguments
    std::vector<std::string> params; // lambda parameter names
    std::shared_ptr<Stmt> body;      // lambda block body or switch-expression statement
    std::shared_ptr<TypeDecl> anon;  // anonymous class body of a New
    SourceRange range;
    std::string source;              // verbatim source text
};

enum class StmtKind {
    Block,
    LocalVar,
    LocalClass,
    ExprStmt,
    If,
    For,
    ForEach,
    While,
    DoWhile,
    Switch,
    Case,
    Try,
    Catch,
    Throw,
    Return,
    Break,
    Continue,
    Yield,
    Labeled,
    Synchronized,
    Assert,
    Empty,
};

struct VarDecl {
    std::string type;
    std::string name;
    ExprPtr init;  // may be null
    int line = 1;
};

struct Stmt {
    StmtKind kind = StmtKind::Empty;
    SourceRange range;
    Stmt* parent = nullptr;  // non-owning; null at a body root

    ExprPtr expr;                     // condition, selector, thrown/returned value, expression
    std::vector<VarDecl> vars;        // LocalVar, ForEach variable, Catch parameter, Try resources
    std::vector<ExprPtr> init;        // For init expressions (when not a declaration)
    std::vector<ExprPtr> update;      // For update
    std::vector<std::unique_ptr<Stmt>> children;  // Block/Case statements, Switch cases, Try catches
    std::unique_ptr<Stmt> then_branch;  // If then; loop/labeled/synchronized body; Try block
    std::unique_ptr<Stmt> else_branch;  // If else; Try finally
    std::vector<ExprPtr> labels;      // Case labels
    bool is_default = false;          // Case
    bool arrow = false;               // Case uses `->`
    std::string label;                // Labeled/Break/Continue
    std::string catch_type;           // Catch: type as written (alternatives joined by " | ")
    std::shared_ptr<TypeDecl> local_type;
};

struct AnnotationElement {
    std::string name;  // "value" for single-element annotations
    ExprPtr value;
};

struct Annotation {
    std::string name;  // as written, e.g. "Test" or "org.junit.Test"
    std::vector<AnnotationElement> elements;
    SourceRange range;

    std::string simple_name() const;
};

struct Param {
    std::string type;
    std::string name;
    bool varargs = false;
};

enum class MethodKind { Method, Constructor, StaticInit, InstanceInit, FieldInit };

struct MethodDecl {
    MethodKind kind = MethodKind::Method;
    std::string name;  // "<init>" for constructors and instance initializers, "<clinit>" for static init
    std::string return_type;
    std::vector<std::string> modifiers;
    std::vector<Annotation> annotations;
    std::vector<Param> params;
    std::vector<std::string> throws_types;
    std::unique_ptr<Stmt> body;  // Block, or null for abstract/native
    ExprPtr field_init;          // FieldInit pseudo-methods carry the initializer instead of a body
    SourceRange range;           // from first modifier/annotation to closing brace
    int name_line = 1;
    std::size_t body_open = 0;   // offset of the body `{`, when present
    const TypeDecl* owner = nullptr;

    bool has_modifier(std::string_view m) const;
    const Annotation* annotation(std::string_view simple_name) const;
    bool is_pseudo() const { return kind == MethodKind::StaticInit || kind == MethodKind::InstanceInit || kind == MethodKind::FieldInit; }
};

enum class TypeKind { Class, Interface, Enum, Record, Annotation, Anonymous };

struct FieldDecl {
    std::string type;
    std::string name;
    std::vector<std::string> modifiers;
    ExprPtr init;
    int line = 1;
};

struct TypeDecl {
    TypeKind kind = TypeKind::Class;
    std::string name;         // simple name
    std::string qualified;    // dotted, e.g. com.foo.Outer.Inner
    std::string binary_name;  // JVM form, e.g. com.foo.Outer$Inner
    std::vector<std::string> modifiers;
    std::vector<Annotation> annotations;
    std::vector<std::string> supertypes;
    std::vector<Param> record_components;
    std::vector<std::unique_ptr<MethodDecl>> methods;  // includes initializer pseudo-methods
    std::vector<FieldDecl> fields;
    std::vector<std::unique_ptr<TypeDecl>> nested;
    SourceRange range;
    const TypeDecl* outer = nullptr;
};

struct CompilationUnit {
    std::string path;
    std::string source;
    std::string package_name;
    std::vector<std::string> imports;
    std::vector<std::unique_ptr<TypeDecl>> types;

    std::string_view text(const SourceRange& r) const
    {
        return std::string_view(source).substr(r.begin, r.end - r.begin);
    }
};

// ---- traversal helpers ---------------------------------------------------

/// Visits every expression reachable from `e` (pre-order), descending into
/// lambda bodies, switch expressions, and anonymous class bodies.
void visit_expr(const ExprPtr& e, const std::function<void(const Expr&)>& on_expr,
                const std::function<void(const Stmt&)>& on_stmt);

/// Visits `s` and every nested statement and expression (pre-order).
void visit_stmt(const Stmt& s, const std::function<void(const Expr&)>& on_expr,
                const std::function<void(const Stmt&)>& on_stmt);

/// Visits every statement and expression inside a method, including field
/// initializers of FieldInit pseudo-methods.
void visit_method(const MethodDecl& m, const std::function<void(const Expr&)>& on_expr,
                  const std::function<void(const Stmt&)>& on_stmt);

/// Calls `fn` for every direct child statement of `s`.
void for_each_child(const Stmt& s, const std::function<void(const Stmt&)>& fn);

/// All type declarations in `unit`, outer before nested, in source order.
std::vector<const TypeDecl*> all_types(const CompilationUnit& unit);

}  // namespace exbt::java
