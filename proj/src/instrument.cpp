#include "exbt/instrument.hpp"

#include "exbt/error.hpp"
#include "exbt/java/parser.hpp"
#include "exbt/util.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

namespace exbt {

using namespace java;

namespace {

const std::string kDump = "exbt.runtime.ExbtTrace.dump();";
const std::string kInlineDump = " exbt.runtime.ExbtTrace.dump(); /* exbt-trace */";
const std::string kLineDumpSuffix = " // exbt-trace";

std::size_t line_start(std::string_view s, std::size_t pos)
{
    while (pos > 0 && s[pos - 1] != '\n') --pos;
    return pos;
}

std::string indentation_at(std::string_view s, std::size_t pos)
{
    std::size_t b = line_start(s, pos);
    std::size_t e = b;
    while (e < s.size() && (s[e] == ' ' || s[e] == '\t')) ++e;
    return std::string(s.substr(b, e - b));
}

std::string one_level(const std::string& indent)
{
    return indent.find('\t') != std::string::npos ? "\t" : "    ";
}

/// True when only whitespace follows `pos` up to the end of its line.
bool rest_of_line_blank(std::string_view s, std::size_t pos, std::size_t* next_line)
{
    std::size_t i = pos;
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
    if (i < s.size() && s[i] != '\n') return false;
    *next_line = i < s.size() ? i + 1 : i;
    return true;
}

/// A statement inserted right after `pos` (just past a `{` or `;`): on its own
/// line when the line ends there, inline otherwise. After `{` it is indented one level deeper.
Insertion statement_after(std::string_view src, std::size_t pos, const std::string& stmt,
                          const std::string& line_suffix, const std::string& inline_text)
{
    std::size_t next = 0;
    if (rest_of_line_blank(src, pos, &next) && next <= src.size() && (next < src.size() || (!src.empty() && src.back() == '\n'))) {
        std::string ind = indentation_at(src, pos - 1);
        if (src[pos - 1] == '{') ind += one_level(ind);
        return {next, ind + stmt + line_suffix + "\n"};
    }
    return {pos, inline_text};
}

bool is_compact_constructor(const CompilationUnit& u, const MethodDecl& m)
{
    if (m.kind != MethodKind::Constructor || !m.owner || m.owner->kind != TypeKind::Record || !m.body) return false;
    std::string_view head = std::string_view(u.source).substr(m.range.begin, m.body_open - m.range.begin);
    return head.find('(') == std::string_view::npos ||
           head.rfind(m.owner->name) > head.rfind('(');  // annotation args only
}

std::string java_string_literal(std::string_view s)
{
    std::string out = "\"";
    for (char c : s) {
        if (c == '\\' || c == '"') out.push_back('\\');
        out.push_back(c);
    }
    return out + "\"";
}

// ---- print-exception rewrites ---------------------------------------------

bool is_assert_holder(const ExprPtr& target)
{
    if (!target) return true;
    std::string last = simple_type_name(target->source);
    return last == "Assertions" || last == "Assert" || last == "TestCase";
}

bool contains_fail(const Stmt& s)
{
    bool found = false;
    visit_stmt(
        s,
        [&](const Expr& e) {
            if (e.kind == ExprKind::Call && e.text == "fail" && is_assert_holder(e.target)) found = true;
        },
        [](const Stmt&) {});
    return found;
}

std::vector<Insertion> print_exception_edits(std::string_view src, const MethodDecl& m, EbtPattern pattern)
{
    std::vector<Insertion> edits;
    if (!m.body) return edits;
    switch (pattern) {
    case EbtPattern::AnnotationExpected:
    case EbtPattern::ExpectedExceptionRule: {
        std::size_t open = m.body->range.begin + 1;
        std::size_t close = m.body->range.end - 1;
        std::string ind = indentation_at(src, close);
        std::string step = one_level(ind);
        edits.push_back({open, "\n" + ind + step + "try {"});
        edits.push_back({close, step + "} catch (Throwable __exbtEx) {\n" + ind + step + step +
                                    "exbt.runtime.ExbtTrace.printException(__exbtEx);\n" + ind + step + step +
                                    "throw __exbtEx;\n" + ind + step + "}\n" + ind});
        break;
    }
    case EbtPattern::TryFailCatch: {
        const Stmt* target = nullptr;
        visit_method(
            m, [](const Expr&) {},
            [&](const Stmt& s) {
                if (!target && s.kind == StmtKind::Try && !s.children.empty() && s.then_branch &&
                    contains_fail(*s.then_branch))
                    target = &s;
            });
        if (!target) break;
        const Stmt& c = *target->children[0];
        std::string stmt = "exbt.runtime.ExbtTrace.printException(" + c.vars[0].name + ");";
        edits.push_back(statement_after(src, c.then_branch->range.begin + 1, stmt, "", " " + stmt));
        break;
    }
    case EbtPattern::AssertThrows: {
        ExprPtr call;
        const Stmt* holder = nullptr;
        visit_method(
            m,
            [&](const Expr&) {},
            [&](const Stmt& s) {
                if (call) return;
                // a direct expression statement wins if it is the first match in source order
                auto probe = [&](const ExprPtr& e, const Stmt* direct) {
                    std::function<void(const ExprPtr&)> walk = [&](const ExprPtr& x) {
                        if (!x || call) return;
                        if (x->kind == ExprKind::Call && (x->text == "assertThrows" || x->text == "assertThrowsExactly") &&
                            is_assert_holder(x->target) && !x->operands.empty() &&
                            x->operands[0]->kind == ExprKind::ClassLit) {
                            call = x;
                            holder = (direct && direct->expr == x) ? direct : nullptr;
                            return;
                        }
                        walk(x->target);
                        for (const auto& op : x->operands) walk(op);
                    };
                    walk(e);
                };
                probe(s.expr, s.kind == StmtKind::ExprStmt ? &s : nullptr);
                for (const auto& v : s.vars) probe(v.init, nullptr);
                for (const auto& e : s.init) probe(e, nullptr);
                for (const auto& e : s.update) probe(e, nullptr);
            });
        if (!call) break;
        if (holder) {
            edits.push_back({holder->range.begin, "var __exbtEx = "});
            edits.push_back({holder->range.end, " exbt.runtime.ExbtTrace.printException(__exbtEx);"});
        } else {
            edits.push_back({call->range.begin, "exbt.runtime.ExbtTrace.printed("});
            edits.push_back({call->range.end, ")"});
        }
        break;
    }
    case EbtPattern::None:
        break;
    }
    return edits;
}

}  // namespace

// ---- offsets ----------------------------------------------------------------

OffsetMap OffsetMap::identity(int lines)
{
    std::vector<int> v(static_cast<std::size_t>(std::max(lines, 0)));
    for (int i = 0; i < lines; ++i) v[static_cast<std::size_t>(i)] = i + 1;
    return OffsetMap(std::move(v));
}

OffsetMap OffsetMap::parse(std::string_view text)
{
    std::vector<int> v;
    for (const auto& line : split_lines(text)) {
        std::string t = trim(line);
        if (t.empty()) continue;
        std::istringstream in(t);
        int a = 0, b = 0;
        if (!(in >> a >> b) || a != static_cast<int>(v.size()) + 1)
            throw Error(ErrorCode::IoError, "malformed offsets line: " + t);
        v.push_back(b);
    }
    return OffsetMap(std::move(v));
}

int OffsetMap::to_original(int line) const
{
    if (original_of_.empty() || line < 1) return line;
    if (line <= size()) return original_of_[static_cast<std::size_t>(line - 1)];
    return original_of_.back() + (line - size());
}

std::string OffsetMap::serialize() const
{
    std::string out;
    for (std::size_t i = 0; i < original_of_.size(); ++i)
        out += std::to_string(i + 1) + " " + std::to_string(original_of_[i]) + "\n";
    return out;
}

Rewrite apply_insertions(std::string_view original, std::vector<Insertion> edits)
{
    std::stable_sort(edits.begin(), edits.end(), [](const Insertion& a, const Insertion& b) { return a.pos < b.pos; });
    Rewrite r;
    std::vector<int> map;
    bool at_line_start = true;
    auto emit = [&](char c, int origin) {
        if (at_line_start) {
            map.push_back(origin);
            at_line_start = false;
        }
        r.text.push_back(c);
        if (c == '\n') at_line_start = true;
    };
    int line = 1;       // line of the next original char
    int prev_line = 1;  // line of the last original char copied
    std::size_t cur = 0;
    auto copy_to = [&](std::size_t end) {
        for (; cur < end && cur < original.size(); ++cur) {
            emit(original[cur], line);
            prev_line = line;
            if (original[cur] == '\n') ++line;
        }
    };
    for (const auto& ins : edits) {
        copy_to(ins.pos);
        int origin = cur == 0 ? 1 : prev_line;
        for (char c : ins.text) emit(c, origin);
    }
    copy_to(original.size());
    r.offsets = OffsetMap(std::move(map));
    return r;
}

// ---- trace instrumentation --------------------------------------------------

InstrumentResult instrument_print_trace(const RepoContext& ctx, const InstrumentOptions& opts)
{
    InstrumentResult out;
    std::map<std::size_t, std::vector<Insertion>> per_unit;
    for (const auto& mi : ctx.methods()) {
        if (mi.in_test) continue;
        if (ctx.throws_in(mi).empty()) continue;
        const CompilationUnit& u = ctx.unit_of(mi);
        const MethodDecl& m = *mi.decl;
        if (!m.body) {
            out.warnings.push_back("RewriteConflict: " + mi.id.key() + " has no body to instrument");
            continue;
        }
        if (is_compact_constructor(u, m)) {
            out.warnings.push_back("RewriteConflict: compact constructor " + mi.id.key() + " skipped");
            continue;
        }
        std::string_view body = u.text(m.body->range);
        if (body.find("ExbtTrace.dump(") != std::string_view::npos) continue;
        std::size_t pos = m.body->range.begin + 1;
        if (m.kind == MethodKind::Constructor && !m.body->children.empty()) {
            const Stmt& first = *m.body->children[0];
            if (first.kind == StmtKind::ExprStmt && first.expr && first.expr->kind == ExprKind::Call &&
                (first.expr->text == "this" || first.expr->text == "super"))
                pos = first.range.end;
        }
        per_unit[mi.unit_index].push_back(statement_after(u.source, pos, kDump, kLineDumpSuffix, kInlineDump));
        ++out.methods_instrumented;
    }
    for (std::size_t i = 0; i < ctx.units.size(); ++i) {
        const CompilationUnit& u = ctx.units[i];
        RewrittenFile f;
        f.path = u.path;
        auto it = per_unit.find(i);
        if (it == per_unit.end()) {
            f.source = u.source;
            f.offsets = OffsetMap::identity(static_cast<int>(split_lines(u.source).size()));
        } else {
            f.insertions = static_cast<int>(it->second.size());
            Rewrite r = apply_insertions(u.source, it->second);
            f.source = std::move(r.text);
            f.offsets = std::move(r.offsets);
        }
        out.files.push_back(std::move(f));
    }
    out.runtime_sources = runtime_sources(opts);
    return out;
}

std::string strip_trace_instrumentation(std::string_view text)
{
    std::string out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t nl = text.find('\n', pos);
        std::size_t end = nl == std::string_view::npos ? text.size() : nl + 1;
        std::string_view line = text.substr(pos, end - pos);
        if (trim(line) == kDump + kLineDumpSuffix) {
            pos = end;
            continue;
        }
        std::string l(line);
        for (std::size_t at; (at = l.find(kInlineDump)) != std::string::npos;) l.erase(at, kInlineDump.size());
        out += l;
        pos = end;
    }
    return out;
}

std::string instrument_print_exception(const TestMethod& ebt)
{
    if (ebt.kind != TestKind::EBT)
        throw Error(ErrorCode::NotEBT, "test " + ebt.id.name + " is not an exceptional behavior test");
    if (ebt.body_text.find("ExbtTrace.") != std::string::npos) return ebt.body_text;
    CompilationUnit u = parse_members(ebt.body_text);
    const MethodDecl& m = *u.types.at(0)->methods.at(0);
    return apply_insertions(ebt.body_text, print_exception_edits(ebt.body_text, m, ebt.pattern)).text;
}

Rewrite instrument_test_file(std::string_view source, const std::vector<TestMethod>& ebts)
{
    CompilationUnit u = parse_compilation_unit("", std::string(source));
    std::vector<Insertion> edits;
    for (const TypeDecl* t : all_types(u)) {
        for (const auto& m : t->methods) {
            auto it = std::find_if(ebts.begin(), ebts.end(), [&](const TestMethod& e) {
                return e.id.name == m->name && e.id.decl_line == m->name_line;
            });
            if (it == ebts.end() || it->kind != TestKind::EBT) continue;
            if (u.text(m->range).find("ExbtTrace.") != std::string_view::npos) continue;
            auto more = print_exception_edits(u.source, *m, it->pattern);
            edits.insert(edits.end(), more.begin(), more.end());
        }
    }
    return apply_insertions(source, std::move(edits));
}

std::vector<std::pair<std::string, std::string>> runtime_sources(const InstrumentOptions& opts)
{
    std::string trace = R"java(package exbt.runtime;

import java.io.FileWriter;
import java.io.IOException;
import java.io.PrintWriter;

public final class ExbtTrace {
    private static final String LOG_PATH = System.getProperty("exbt.log", @LOG@);
    private static final ThreadLocal<String> CURRENT_TEST = new ThreadLocal<>();

    private ExbtTrace() {}

    public static void setTest(String id) {
        CURRENT_TEST.set(id);
    }

    public static void dump() {
        write(null, Thread.currentThread().getStackTrace());
    }

    public static void printException(Throwable t) {
        write(t.toString(), t.getStackTrace());
    }

    public static <T extends Throwable> T printed(T t) {
        printException(t);
        return t;
    }

    private static synchronized void write(String headline, StackTraceElement[] frames) {
        StringBuilder sb = new StringBuilder();
        String test = CURRENT_TEST.get();
        if (test != null) {
            sb.append("# test: ").append(test).append('\n');
        }
        if (headline != null) {
            sb.append(headline.replace('\n', ' ')).append('\n');
        }
        for (StackTraceElement f : frames) {
            sb.append("\tat ").append(f).append('\n');
        }
        sb.append("---\n");
        try (PrintWriter out = new PrintWriter(new FileWriter(LOG_PATH, true))) {
            out.print(sb);
        } catch (IOException e) {
            throw new IllegalStateException("cannot write trace log " + LOG_PATH, e);
        }
    }
}
)java";
    trace.replace(trace.find("@LOG@"), 5, java_string_literal(opts.log_path));
    std::string listener = R"java(package exbt.runtime;

import org.junit.runner.Description;
import org.junit.runner.notification.RunListener;

public class ExbtTraceListener extends RunListener {
    @Override
    public void testStarted(Description description) {
        ExbtTrace.setTest(description.getClassName() + "#" + description.getMethodName());
    }
}
)java";
    return {{"exbt/runtime/ExbtTrace.java", trace}, {"exbt/runtime/ExbtTraceListener.java", listener}};
}

// ---- trace logs ---------------------------------------------------------------

TraceLog parse_trace_log(std::string_view text)
{
    TraceLog log;
    std::vector<std::string> block;
    int block_no = 0;
    auto flush = [&] {
        bool any = std::any_of(block.begin(), block.end(), [](const std::string& l) { return !trim(l).empty(); });
        if (!any) {
            block.clear();
            return;
        }
        ++block_no;
        TraceLogEntry entry;
        std::string body;
        for (const auto& l : block) {
            std::string t = trim(l);
            if (starts_with(t, "# test:")) {
                entry.test_id = trim(t.substr(7));
                continue;
            }
            body += l + "\n";
        }
        block.clear();
        try {
            ScannedTrace s = scan_stack_trace(body);
            if (s.had_garbage) {
                ++log.malformed_blocks;
                log.warnings.push_back("block " + std::to_string(block_no) + " skipped: " + s.warnings.back());
                return;
            }
            for (const auto& w : s.warnings) log.warnings.push_back("block " + std::to_string(block_no) + ": " + w);
            entry.trace = std::move(s.trace);
            entry.exception_type = s.exception_type;
            log.entries.push_back(std::move(entry));
        } catch (const Error& e) {
            ++log.malformed_blocks;
            log.warnings.push_back("block " + std::to_string(block_no) + " skipped: " + e.what());
        }
    };
    for (const auto& line : split_lines(text)) {
        if (trim(line) == "---") {
            flush();
            continue;
        }
        block.push_back(line);
    }
    flush();
    return log;
}

std::string render_trace_log(const std::vector<TraceLogEntry>& entries)
{
    std::string out;
    for (const auto& e : entries) {
        if (!e.test_id.empty()) out += "# test: " + e.test_id + "\n";
        if (e.exception_type) out += *e.exception_type + "\n";
        out += render_stack_trace(e.trace);
        out += "---\n";
    }
    return out;
}

StackTrace normalize_lines(const StackTrace& t, const RepoContext& ctx,
                           const std::vector<std::pair<std::string, OffsetMap>>& offsets)
{
    StackTrace out = t;
    for (auto& f : out.frames) {
        std::string path;
        if (const TypeDecl* type = ctx.find_type(f.class_fqn)) {
            if (auto ui = ctx.unit_index_of_type(type)) path = ctx.units[*ui].path;
        }
        for (const auto& [p, map] : offsets) {
            if (p == path || (path.empty() && file_name(p) == f.file)) {
                f.line = map.to_original(f.line);
                break;
            }
        }
    }
    return out;
}

}  // namespace exbt
