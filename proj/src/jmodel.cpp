#include "exbt/jmodel.hpp"

#include "exbt/error.hpp"
#include "exbt/java/lexer.hpp"
#include "exbt/java/parser.hpp"
#include "exbt/util.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <set>

namespace exbt {

using namespace java;

std::strong_ordering MethodId::operator<=>(const MethodId& o) const
{
    if (auto c = decl_file <=> o.decl_file; c != 0) return c;
    if (auto c = decl_line <=> o.decl_line; c != 0) return c;
    if (auto c = fqn <=> o.fqn; c != 0) return c;
    if (auto c = name <=> o.name; c != 0) return c;
    return param_arity <=> o.param_arity;
}

std::string MethodId::key() const { return fqn + "#" + name + "/" + std::to_string(param_arity); }

namespace {

bool path_has_component(std::string_view path, std::string_view comp)
{
    std::size_t start = 0;
    while (start <= path.size()) {
        auto slash = path.find('/', start);
        auto part = path.substr(start, slash == std::string_view::npos ? std::string_view::npos
                                                                       : slash - start);
        if (part == comp) return true;
        if (slash == std::string_view::npos) break;
        start = slash + 1;
    }
    return false;
}

bool classify_as_test(std::string_view rel, const LoadOptions& opts)
{
    if (opts.roots) {
        for (const auto& p : opts.roots->test)
            if (starts_with(rel, p)) return true;
        return false;
    }
    if (rel.find("src/test/") != std::string_view::npos) return true;
    if (rel.find("src/main/") != std::string_view::npos) return false;
    return path_has_component(rel, "test") || path_has_component(rel, "tests");
}

/// Normalizes JVM synthetic method names: lambda$foo$0 -> foo.
std::string normalize_frame_method(std::string_view m)
{
    if (starts_with(m, "lambda$")) {
        auto rest = m.substr(7);
        auto dollar = rest.find('$');
        std::string base(rest.substr(0, dollar));
        if (base == "static") return "<clinit>";
        if (base == "new") return "<init>";
        return base;
    }
    if (starts_with(m, "access$")) return std::string(m);
    return std::string(m);
}

std::string strip_synthetic_suffix(std::string_view binary)
{
    std::string out;
    std::size_t start = 0;
    bool first = true;
    while (start <= binary.size()) {
        auto d = binary.find('$', start);
        auto part = binary.substr(start, d == std::string_view::npos ? std::string_view::npos : d - start);
        if (!first && (part.empty() || std::isdigit(static_cast<unsigned char>(part[0])))) break;
        if (!first) out += '$';
        out += part;
        first = false;
        if (d == std::string_view::npos) break;
        start = d + 1;
    }
    return out;
}

bool arity_matches(const MethodDecl& m, std::size_t n)
{
    if (m.params.size() == n) return true;
    if (!m.params.empty() && m.params.back().varargs && n + 1 >= m.params.size()) return true;
    return false;
}

std::string declared_type_of(const std::string& name, const Stmt* from, const MethodDecl& m)
{
    for (const Stmt* s = from; s; s = s->parent) {
        if (s->kind == StmtKind::Catch && !s->vars.empty() && s->vars[0].name == name)
            return s->vars[0].type;
    }
    std::string found;
    visit_method(
        m, [](const Expr&) {},
        [&](const Stmt& s) {
            if (!found.empty()) return;
            if (s.kind == StmtKind::LocalVar || s.kind == StmtKind::Catch ||
                s.kind == StmtKind::ForEach) {
                for (const auto& v : s.vars)
                    if (v.name == name && !v.type.empty() && v.type != "var") found = v.type;
            }
        });
    if (!found.empty()) return found;
    for (const auto& p : m.params)
        if (p.name == name) return p.type;
    return name;
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

}  // namespace

const CompilationUnit* RepoContext::unit(std::string_view rel_path) const
{
    for (const auto& u : units)
        if (u.path == rel_path) return &u;
    return nullptr;
}

bool RepoContext::is_test_file(std::string_view rel_path) const
{
    return std::find(test_files.begin(), test_files.end(), rel_path) != test_files.end();
}

const MethodInfo* RepoContext::find(const MethodId& id) const
{
    for (const auto& m : methods_)
        if (m.id == id) return &m;
    return nullptr;
}

std::vector<const MethodInfo*> RepoContext::find_by_name(std::string_view fqn, std::string_view name) const
{
    std::vector<const MethodInfo*> out;
    const TypeDecl* t = find_type(fqn);
    for (const auto& m : methods_)
        if ((m.type == t || m.id.fqn == fqn) && m.id.name == name) out.push_back(&m);
    return out;
}

const MethodInfo* RepoContext::method_at(std::string_view rel_file, int line) const
{
    const MethodInfo* best = nullptr;
    for (const auto& m : methods_) {
        if (m.id.decl_file != rel_file || !m.decl->range.contains_line(line)) continue;
        if (!best || (m.decl->range.end - m.decl->range.begin) <
                         (best->decl->range.end - best->decl->range.begin))
            best = &m;
    }
    return best;
}

const TypeDecl* RepoContext::find_type(std::string_view class_name) const
{
    std::string stripped = strip_synthetic_suffix(class_name);
    if (auto it = types_by_name_.find(stripped); it != types_by_name_.end()) return it->second;
    std::string dotted = stripped;
    std::replace(dotted.begin(), dotted.end(), '$', '.');
    if (auto it = types_by_name_.find(dotted); it != types_by_name_.end()) return it->second;
    return nullptr;
}

std::optional<std::size_t> RepoContext::unit_index_of_type(const TypeDecl* t) const
{
    if (auto it = type_unit_.find(t); it != type_unit_.end()) return it->second;
    return std::nullopt;
}

std::pair<FrameResolution, const MethodInfo*> RepoContext::resolve_frame(std::string_view binary_class,
                                                                         std::string_view method,
                                                                         int line) const
{
    const TypeDecl* t = find_type(binary_class);
    if (!t) return {FrameResolution::UnknownClass, nullptr};
    std::string name = normalize_frame_method(method);
    const MethodInfo* named = nullptr;
    const MethodInfo* any = nullptr;
    bool name_exists = false;
    for (const auto& m : methods_) {
        if (m.type != t) continue;
        if (m.id.name == name) name_exists = true;
        if (!m.decl->range.contains_line(line)) continue;
        if (m.id.name == name && !named) named = &m;
        if (!any) any = &m;
    }
    if (named) return {FrameResolution::Ok, named};
    if (any) return {FrameResolution::Ok, any};
    return {name_exists ? FrameResolution::OutOfSpan : FrameResolution::UnknownMethod, nullptr};
}

std::vector<ThrowSite> RepoContext::throws_in(const MethodInfo& m) const
{
    std::vector<std::pair<std::size_t, ThrowSite>> found;
    const CompilationUnit& u = units[m.unit_index];
    visit_method(
        *m.decl, [](const Expr&) {},
        [&](const Stmt& s) {
            if (s.kind != StmtKind::Throw) return;
            ThrowSite site;
            site.method = m.id;
            site.line = s.range.begin_line;
            site.statement_text = std::string(u.text(s.range));
            if (s.expr && s.expr->kind == ExprKind::New) {
                site.exception_type = s.expr->type;
            } else if (s.expr && s.expr->kind == ExprKind::Name) {
                site.exception_type = declared_type_of(s.expr->text, &s, *m.decl);
            } else if (s.expr) {
                site.exception_type = collapse(s.expr->source);
            }
            found.emplace_back(s.range.begin, std::move(site));
        });
    std::stable_sort(found.begin(), found.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<ThrowSite> out;
    for (auto& f : found) out.push_back(std::move(f.second));
    return out;
}

std::string RepoContext::source_digest(Scope scope) const
{
    std::vector<std::pair<std::string, std::string>> parts;
    for (const auto& u : units) {
        if (scope == Scope::MainOnly && is_test_file(u.path)) continue;
        parts.emplace_back(u.path, sha256_hex(u.source));
    }
    std::sort(parts.begin(), parts.end());
    std::string acc;
    for (const auto& [p, d] : parts) acc += p + '\0' + d + '\n';
    return sha256_hex(acc);
}

void RepoContext::index()
{
    methods_.clear();
    types_by_name_.clear();
    type_unit_.clear();
    for (std::size_t ui = 0; ui < units.size(); ++ui) {
        const auto& u = units[ui];
        bool test = is_test_file(u.path);
        for (const TypeDecl* t : all_types(u)) {
            types_by_name_.emplace(t->binary_name, t);
            types_by_name_.emplace(t->qualified, t);
            type_unit_.emplace(t, ui);
            for (const auto& m : t->methods) {
                MethodInfo info;
                info.id.fqn = t->qualified;
                info.id.name = m->name;
                info.id.param_arity = static_cast<int>(m->params.size());
                info.id.decl_file = u.path;
                info.id.decl_line = m->name_line;
                info.decl = m.get();
                info.type = t;
                info.unit_index = ui;
                info.in_test = test;
                methods_.push_back(std::move(info));
            }
        }
    }

    // name+arity call graph, repo-internal only
    std::map<std::string, std::vector<const MethodInfo*>> by_name;
    for (const auto& m : methods_) by_name[m.id.name].push_back(&m);

    auto enclosing_types = [](const TypeDecl* t) {
        std::vector<const TypeDecl*> out;
        for (; t; t = t->outer) out.push_back(t);
        return out;
    };
    auto types_named = [&](std::string_view simple) {
        std::vector<const TypeDecl*> out;
        for (const auto& [name, t] : types_by_name_)
            if (t->name == simple && name == t->binary_name) out.push_back(t);
        return out;
    };

    std::set<std::pair<MethodId, MethodId>> edges;
    for (const auto& caller : methods_) {
        auto add = [&](const MethodInfo* callee) { edges.emplace(caller.id, callee->id); };
        visit_method(
            *caller.decl,
            [&](const Expr& e) {
                std::size_t n = e.operands.size();
                if (e.kind == ExprKind::New && !e.anon) {
                    for (const TypeDecl* t : types_named(simple_type_name(e.type)))
                        for (const auto& m : methods_)
                            if (m.type == t && m.decl->kind == MethodKind::Constructor &&
                                arity_matches(*m.decl, n))
                                add(&m);
                    return;
                }
                if (e.kind != ExprKind::Call) return;
                if (e.text == "this" || e.text == "super") {
                    std::vector<const TypeDecl*> targets;
                    if (e.text == "this") {
                        targets.push_back(caller.type);
                    } else {
                        for (const auto& st : caller.type->supertypes)
                            for (const TypeDecl* t : types_named(simple_type_name(st))) targets.push_back(t);
                    }
                    for (const auto& m : methods_)
                        if (std::find(targets.begin(), targets.end(), m.type) != targets.end() &&
                            m.decl->kind == MethodKind::Constructor && arity_matches(*m.decl, n))
                            add(&m);
                    return;
                }
                auto it = by_name.find(e.text);
                if (it == by_name.end()) return;
                bool unqualified = !e.target || e.target->kind == ExprKind::This;
                if (unqualified) {
                    auto scope = enclosing_types(caller.type);
                    bool any = false;
                    for (const MethodInfo* m : it->second) {
                        if (std::find(scope.begin(), scope.end(), m->type) != scope.end() &&
                            arity_matches(*m->decl, n)) {
                            add(m);
                            any = true;
                        }
                    }
                    if (any) return;
                }
                for (const MethodInfo* m : it->second)
                    if (m->decl->kind == MethodKind::Method && arity_matches(*m->decl, n)) add(m);
            },
            [](const Stmt&) {});
    }
    call_edges.clear();
    for (const auto& [a, b] : edges) call_edges.push_back({a, b});
}

RepoContext build_context(std::vector<std::pair<std::string, std::string>> files,
                          const LoadOptions& options)
{
    if (files.empty()) throw Error(ErrorCode::NoJavaSources, "no .java files found");
    std::sort(files.begin(), files.end());
    RepoContext ctx;
    for (auto& [path, source] : files) {
        if (classify_as_test(path, options))
            ctx.test_files.push_back(path);
        else
            ctx.main_files.push_back(path);
        try {
            ctx.units.push_back(parse_compilation_unit(path, std::move(source)));
        } catch (const LexError& e) {
            ctx.warnings.push_back({path, e.what()});
        } catch (const ParseError& e) {
            ctx.warnings.push_back({path, e.what()});
        }
    }
    ctx.index();
    return ctx;
}

RepoContext load_repo(const std::filesystem::path& root, const LoadOptions& options)
{
    namespace fs = std::filesystem;
    std::error_code ec;
    if (!fs::is_directory(root, ec)) throw Error(ErrorCode::IoError, "not a readable directory: " + root.string());
    std::vector<std::pair<std::string, std::string>> files;
    fs::recursive_directory_iterator it(root, fs::directory_options::skip_permission_denied, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot list " + root.string() + ": " + ec.message());
    for (; it != fs::recursive_directory_iterator(); it.increment(ec)) {
        if (ec) throw Error(ErrorCode::IoError, "cannot list " + root.string() + ": " + ec.message());
        const auto& p = it->path();
        if (it->is_directory() && p.filename().string().starts_with(".")) {
            it.disable_recursion_pending();
            continue;
        }
        if (it->is_regular_file() && p.extension() == ".java")
            files.emplace_back(relative_path(p, root), read_file(p));
    }
    if (files.empty()) throw Error(ErrorCode::NoJavaSources, "no .java files under " + root.string());
    RepoContext ctx = build_context(std::move(files), options);
    ctx.root_path = root;
    return ctx;
}

std::vector<ThrowSite> find_throw_sites(const RepoContext& ctx, Scope scope)
{
    std::vector<ThrowSite> out;
    for (const auto& m : ctx.methods()) {
        if (scope == Scope::MainOnly && m.in_test) continue;
        for (auto& s : ctx.throws_in(m)) out.push_back(std::move(s));
    }
    std::stable_sort(out.begin(), out.end(), [](const ThrowSite& a, const ThrowSite& b) {
        if (a.file() != b.file()) return a.file() < b.file();
        return a.line < b.line;
    });
    return out;
}

std::vector<ReachableThrow> reachable_throws(const RepoContext& ctx, const MethodId& mut, int max_depth)
{
    const MethodInfo* start = ctx.find(mut);
    if (!start) throw Error(ErrorCode::UnknownMethod, "method not declared in repo: " + mut.key());
    if (max_depth < 1) max_depth = 1;

    std::map<MethodId, std::vector<MethodId>> adj;
    for (const auto& e : ctx.call_edges) adj[e.caller].push_back(e.callee);
    for (auto& [k, v] : adj) std::sort(v.begin(), v.end());

    std::vector<ReachableThrow> out;
    std::set<std::pair<std::string, int>> seen_sites;
    std::set<MethodId> visited{mut};
    std::deque<std::vector<MethodId>> queue;
    queue.push_back({mut});
    while (!queue.empty()) {
        auto path = std::move(queue.front());
        queue.pop_front();
        const MethodInfo* m = ctx.find(path.back());
        if (!m) continue;
        for (auto& site : ctx.throws_in(*m)) {
            if (!seen_sites.emplace(site.file(), site.line).second) continue;
            out.push_back({std::move(site), path});
        }
        if (static_cast<int>(path.size()) >= max_depth) continue;
        for (const auto& next : adj[path.back()]) {
            if (!visited.insert(next).second) continue;
            auto np = path;
            np.push_back(next);
            queue.push_back(std::move(np));
        }
    }
    std::stable_sort(out.begin(), out.end(), [](const ReachableThrow& a, const ReachableThrow& b) {
        if (a.path.size() != b.path.size()) return a.path.size() < b.path.size();
        if (a.site.file() != b.site.file()) return a.site.file() < b.site.file();
        return a.site.line < b.site.line;
    });
    return out;
}

const MethodInfo* resolve_method_spec(const RepoContext& ctx, std::string_view spec)
{
    std::string cls, name;
    int arity = -1;
    auto hash = spec.find('#');
    if (hash != std::string_view::npos) {
        cls = std::string(spec.substr(0, hash));
        std::string rest(spec.substr(hash + 1));
        auto slash = rest.find('/');
        if (slash != std::string::npos) {
            arity = std::stoi(rest.substr(slash + 1));
            rest = rest.substr(0, slash);
        }
        name = rest;
    } else {
        auto dot = spec.rfind('.');
        if (dot == std::string_view::npos) return nullptr;
        cls = std::string(spec.substr(0, dot));
        name = std::string(spec.substr(dot + 1));
    }
    const MethodInfo* best = nullptr;
    for (const MethodInfo* m : ctx.find_by_name(cls, name)) {
        if (arity >= 0 && m->id.param_arity != arity) continue;
        if (!best || m->id < best->id) best = m;
    }
    return best;
}

}  // namespace exbt
