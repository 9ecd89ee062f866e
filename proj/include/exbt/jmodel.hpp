#pragma once

#include "exbt/java/ast.hpp"

#include <compare>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace exbt {

/// Identity of a declared method (or initializer pseudo-method) in a repo.
struct MethodId {
    std::string fqn;   // declaring class, dotted (nested classes joined with '.')
    std::string name;  // "<init>" for constructors, "<clinit>" for static initializers
    int param_arity = 0;
    std::string decl_file;  // repo-relative, forward slashes
    int decl_line = 1;

    bool operator==(const MethodId&) const = default;
    /// Orders by (decl_file, decl_line, fqn, name, arity).
    std::strong_ordering operator<=>(const MethodId& o) const;

    /// "fqn#name/arity"
    std::string key() const;
    /// "fqn.name"
    std::string qualified_name() const { return fqn + "." + name; }
};

struct ThrowSite {
    MethodId method;
    int line = 1;
    std::string exception_type;  // as written
    std::string statement_text;  // verbatim

    const std::string& file() const { return method.decl_file; }
    bool operator==(const ThrowSite&) const = default;
};

struct CallEdge {
    MethodId caller;
    MethodId callee;
    bool operator==(const CallEdge&) const = default;
};

struct SourceRoots {
    std::vector<std::string> main;  // repo-relative path prefixes
    std::vector<std::string> test;
};

struct LoadOptions {
    std::optional<SourceRoots> roots;  // overrides the src/main vs src/test convention
};

struct LoadWarning {
    std::string file;
    std::string message;
};

enum class Scope { MainOnly, All };

/// One indexed method with back-pointers into the owning unit.
struct MethodInfo {
    MethodId id;
    const java::MethodDecl* decl = nullptr;
    const java::TypeDecl* type = nullptr;
    std::size_t unit_index = 0;
    bool in_test = false;
};

enum class FrameResolution { Ok, UnknownClass, UnknownMethod, OutOfSpan };

/// Parsed model of one Java repository. Immutable after construction.
class RepoContext {
public:
    RepoContext() = default;
    RepoContext(RepoContext&&) = default;
    RepoContext& operator=(RepoContext&&) = default;
    RepoContext(const RepoContext&) = delete;
    RepoContext& operator=(const RepoContext&) = delete;

    std::filesystem::path root_path;
    std::vector<java::CompilationUnit> units;  // unit.path is repo-relative
    std::vector<CallEdge> call_edges;
    std::vector<std::string> main_files;
    std::vector<std::string> test_files;
    std::vector<LoadWarning> warnings;

    const std::vector<MethodInfo>& methods() const { return methods_; }
    const java::CompilationUnit* unit(std::string_view rel_path) const;
    const java::CompilationUnit& unit_of(const MethodInfo& m) const { return units[m.unit_index]; }
    bool is_test_file(std::string_view rel_path) const;

    const MethodInfo* find(const MethodId& id) const;
    /// All methods named `name` declared in class `fqn` (dotted or binary form).
    std::vector<const MethodInfo*> find_by_name(std::string_view fqn, std::string_view name) const;
    /// The method whose span contains `line` in the file of `m`'s declaring unit.
    const MethodInfo* method_at(std::string_view rel_file, int line) const;
    /// Resolves a JVM frame (binary class name, method name, line) to a declared method.
    std::pair<FrameResolution, const MethodInfo*> resolve_frame(std::string_view binary_class,
                                                                std::string_view method,
                                                                int line) const;
    /// Type declared with this binary or dotted name; anonymous/local suffixes ($1, $1Local) are stripped.
    const java::TypeDecl* find_type(std::string_view class_name) const;
    std::optional<std::size_t> unit_index_of_type(const java::TypeDecl* t) const;

    /// Throw sites directly inside `m` (including lambdas and anonymous classes it encloses).
    std::vector<ThrowSite> throws_in(const MethodInfo& m) const;

    /// SHA-256 over (path, bytes) of every unit in scope, in path order.
    std::string source_digest(Scope scope) const;

    /// Rebuilds the method index and call graph; called once by the loaders.
    void index();

private:
    std::vector<MethodInfo> methods_;
    std::map<std::string, const java::TypeDecl*> types_by_name_;
    std::map<const java::TypeDecl*, std::size_t> type_unit_;
};

/// Loads every .java file under `root`. Unparseable files become warnings.
/// Throws Error(IoError) for an unreadable root and Error(NoJavaSources) when
/// no .java file exists.
RepoContext load_repo(const std::filesystem::path& root, const LoadOptions& options = {});

/// Builds a context from in-memory (relative path, source) pairs.
RepoContext build_context(std::vector<std::pair<std::string, std::string>> files,
                          const LoadOptions& options = {});

/// Every throw statement in scope exactly once, ordered by (file, line).
std::vector<ThrowSite> find_throw_sites(const RepoContext& ctx, Scope scope);

struct ReachableThrow {
    ThrowSite site;
    std::vector<MethodId> path;  // mut first, declaring method of the throw last
};

inline constexpr int kDefaultMaxDepth = 5;

/// Breadth-first search over call edges from `mut`. `max_depth` bounds the
/// witness path length in methods (1 = throws in `mut` itself). Throws
/// Error(UnknownMethod) when `mut` is not declared in the repo.
std::vector<ReachableThrow> reachable_throws(const RepoContext& ctx, const MethodId& mut,
                                             int max_depth = kDefaultMaxDepth);

/// Parses "pkg.Class#method", "pkg.Class#method/2" or "pkg.Class.method" and
/// resolves it; ambiguous overloads pick the earliest declaration.
const MethodInfo* resolve_method_spec(const RepoContext& ctx, std::string_view spec);

}  // namespace exbt
