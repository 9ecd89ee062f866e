#include "exbt/stacktrace.hpp"

#include "exbt/error.hpp"
#include "exbt/util.hpp"

#include <algorithm>
#include <regex>

namespace exbt {

namespace {

// at [module/]fqn.method(Location)
const std::regex& frame_re()
{
    static const std::regex re(R"(^at\s+(?:[\w.\-@]+/+)?([\w$.]+)\.([\w$<>]+)\(([^)]*)\)$)");
    return re;
}

const std::regex& location_re()
{
    static const std::regex re(R"(^([\w$\-]+\.java):(\d+)$)");
    return re;
}

const std::regex& headline_re()
{
    static const std::regex re(R"(^([\w$]+(?:\.[\w$]+)*)(?::.*)?$)");
    return re;
}

}  // namespace

bool is_synthetic_frame(const Frame& f)
{
    static const char* prefixes[] = {
        "java.", "javax.", "jdk.", "sun.", "com.sun.", "org.junit.", "junit.framework.",
        "org.apache.maven.surefire.", "org.gradle.", "exbt.runtime.",
    };
    for (const char* p : prefixes)
        if (starts_with(f.class_fqn, p)) return true;
    return false;
}

ScannedTrace scan_stack_trace(std::string_view text)
{
    ScannedTrace out;
    std::vector<Frame> jvm_order;
    bool any_frame_syntax = false;
    bool in_frames = false;
    for (const auto& raw : split_lines(text)) {
        std::string line = trim(raw);
        if (line.empty()) continue;
        if (starts_with(line, "Caused by:")) break;
        if (starts_with(line, "...") && ends_with(line, "more")) continue;
        std::smatch m;
        if (std::regex_match(line, m, frame_re())) {
            any_frame_syntax = true;
            in_frames = true;
            Frame f;
            f.class_fqn = m[1];
            f.method = m[2];
            std::string loc = m[3];
            std::smatch lm;
            if (!std::regex_match(loc, lm, location_re())) {
                out.warnings.push_back("frame without line number dropped: " + line);
                continue;
            }
            f.file = lm[1];
            f.line = std::stoi(lm[2]);
            if (f.line < 1) {
                out.warnings.push_back("frame with invalid line dropped: " + line);
                continue;
            }
            if (is_synthetic_frame(f)) continue;
            jvm_order.push_back(std::move(f));
            continue;
        }
        if (starts_with(line, "Exception in thread ")) {
            auto q = line.find("\" ", 20);
            if (q != std::string::npos) line = trim(line.substr(q + 2));
        }
        if (!in_frames && !out.exception_type && std::regex_match(line, m, headline_re())) {
            out.exception_type = m[1];
            continue;
        }
        out.had_garbage = true;
        out.warnings.push_back("unrecognized trace line: " + line);
    }
    if (!any_frame_syntax) throw Error(ErrorCode::MalformedTrace, "no stack frame found in trace text");
    out.trace.frames.assign(jvm_order.rbegin(), jvm_order.rend());
    return out;
}

StackTrace parse_stack_trace(std::string_view text, std::vector<std::string>* warnings)
{
    ScannedTrace s = scan_stack_trace(text);
    if (warnings) warnings->insert(warnings->end(), s.warnings.begin(), s.warnings.end());
    return std::move(s.trace);
}

std::string render_frame(const Frame& f)
{
    return "at " + f.class_fqn + "." + f.method + "(" + f.file + ":" + std::to_string(f.line) + ")";
}

std::string render_stack_trace(const StackTrace& t)
{
    std::string out;
    for (auto it = t.frames.rbegin(); it != t.frames.rend(); ++it) out += "\t" + render_frame(*it) + "\n";
    return out;
}

std::pair<FrameResolution, const MethodInfo*> resolve_frame(const RepoContext& ctx, const Frame& f)
{
    const java::TypeDecl* t = ctx.find_type(f.class_fqn);
    if (!t) return {FrameResolution::UnknownClass, nullptr};
    auto ui = ctx.unit_index_of_type(t);
    if (!ui || file_name(ctx.units[*ui].path) != f.file) return {FrameResolution::UnknownClass, nullptr};
    return ctx.resolve_frame(f.class_fqn, f.method, f.line);
}

StackTrace exclude_test_and_util_frames(const StackTrace& r, const RepoContext& ctx, std::string_view dest)
{
    bool dest_is_basename = dest.find('/') == std::string_view::npos;
    StackTrace out;
    for (const auto& f : r.frames) {
        const java::TypeDecl* t = ctx.find_type(f.class_fqn);
        if (!t) continue;
        auto ui = ctx.unit_index_of_type(t);
        if (!ui) continue;
        const std::string& path = ctx.units[*ui].path;
        if (ctx.is_test_file(path)) continue;
        if (!dest.empty() && (path == dest || (dest_is_basename && file_name(path) == dest))) continue;
        out.frames.push_back(f);
    }
    if (out.empty()) throw Error(ErrorCode::EmptyAfterExclusion, "no frames left after excluding test and utility frames");
    return out;
}

std::optional<ThrowSite> throw_at_line(const RepoContext& ctx, const MethodInfo& m, int line)
{
    for (auto& s : ctx.throws_in(m)) {
        int end = s.line + static_cast<int>(std::count(s.statement_text.begin(), s.statement_text.end(), '\n'));
        if (s.line <= line && line <= end) return s;
    }
    return std::nullopt;
}

namespace {

const MethodInfo& require_frame(const RepoContext& ctx, const Frame& f)
{
    auto [res, m] = resolve_frame(ctx, f);
    if (res == FrameResolution::OutOfSpan)
        throw Error(ErrorCode::FrameOutOfSpan, "line " + std::to_string(f.line) + " is outside " + f.class_fqn + "." + f.method);
    if (!m) throw Error(ErrorCode::UnknownMethod, "frame does not resolve in repo: " + render_frame(f));
    return *m;
}

}  // namespace

Endpoints endpoints(const StackTrace& r, const RepoContext& ctx)
{
    if (r.empty()) throw Error(ErrorCode::EmptyAfterExclusion, "empty stack trace");
    const MethodInfo& first = require_frame(ctx, r.frames.front());
    const MethodInfo& last = require_frame(ctx, r.frames.back());
    auto site = throw_at_line(ctx, last, r.frames.back().line);
    if (!site)
        throw Error(ErrorCode::NoThrowAtFrame, "no throw statement at " + r.frames.back().file + ":" +
                                                   std::to_string(r.frames.back().line));
    return {first.id, *site};
}

}  // namespace exbt
