#pragma once

#include "exbt/jmodel.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace exbt {

struct Frame {
    std::string class_fqn;  // binary name as printed by the JVM (Outer$Inner)
    std::string method;
    std::string file;       // basename, e.g. Bar.java
    int line = 1;

    bool operator==(const Frame&) const = default;
};

/// Frames ordered MUT first; the last frame holds the throw.
struct StackTrace {
    std::vector<Frame> frames;

    bool empty() const { return frames.empty(); }
    bool operator==(const StackTrace&) const = default;
};

/// Result of scanning raw trace text.
struct ScannedTrace {
    StackTrace trace;
    std::optional<std::string> exception_type;  // from a "java.lang.X: msg" headline, if any
    std::vector<std::string> warnings;
    bool had_garbage = false;  // a non-frame line appeared between frame lines
};

/// Low-level scan shared by the trace and log parsers. Throws
/// Error(MalformedTrace) when no line has frame syntax.
ScannedTrace scan_stack_trace(std::string_view text);

/// Parses JVM-ordered trace text into MUT-first order. Frames without a line
/// number and synthetic frames (reflection, JDK, test runners) are dropped.
StackTrace parse_stack_trace(std::string_view text, std::vector<std::string>* warnings = nullptr);

/// Renders in JVM order ("\tat cls.m(File.java:N)" per line), innermost first.
std::string render_stack_trace(const StackTrace& t);

std::string render_frame(const Frame& f);

/// True for frames from the JDK, reflection, test frameworks and build runners.
bool is_synthetic_frame(const Frame& f);

/// Resolves a frame to a repo method, checking the file name against the
/// declaring unit.
std::pair<FrameResolution, const MethodInfo*> resolve_frame(const RepoContext& ctx, const Frame& f);

/// Drops frames whose class is declared in `dest`, in any test file, or
/// outside the repo. Throws Error(EmptyAfterExclusion).
StackTrace exclude_test_and_util_frames(const StackTrace& r, const RepoContext& ctx, std::string_view dest);

struct Endpoints {
    MethodId mut;
    ThrowSite site;
};

/// Resolves r[0] to the MUT and r[-1] to a throw statement. Throws
/// Error(UnknownMethod), Error(FrameOutOfSpan) or Error(NoThrowAtFrame).
Endpoints endpoints(const StackTrace& r, const RepoContext& ctx);

/// The throw site in `m` whose statement spans `line`, if any.
std::optional<ThrowSite> throw_at_line(const RepoContext& ctx, const MethodInfo& m, int line);

}  // namespace exbt
