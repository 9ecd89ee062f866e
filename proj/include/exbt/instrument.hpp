#pragma once

#include "exbt/classifier.hpp"
#include "exbt/jmodel.hpp"
#include "exbt/stacktrace.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace exbt {

/// Maps each line of an instrumented file back to the original file. Inserted
/// lines map to the original line just before the insertion.
class OffsetMap {
public:
    OffsetMap() = default;
    explicit OffsetMap(std::vector<int> original_of) : original_of_(std::move(original_of)) {}
    static OffsetMap identity(int lines);
    /// Reads the sidecar format: one "instrumented original" pair per line.
    static OffsetMap parse(std::string_view text);

    /// Lines past the end map to themselves shifted by the final offset.
    int to_original(int instrumented_line) const;
    int size() const { return static_cast<int>(original_of_.size()); }
    std::string serialize() const;
    bool operator==(const OffsetMap&) const = default;

private:
    std::vector<int> original_of_;
};

struct Insertion {
    std::size_t pos;  // byte offset in the original text
    std::string text;
};

struct Rewrite {
    std::string text;
    OffsetMap offsets;
};

/// Applies insertion-only edits. Insertions at the same offset keep their order.
Rewrite apply_insertions(std::string_view original, std::vector<Insertion> edits);

inline constexpr std::string_view kTraceMarker = "exbt-trace";
inline constexpr std::string_view kRuntimePackage = "exbt.runtime";

struct RewrittenFile {
    std::string path;  // repo-relative
    std::string source;
    OffsetMap offsets;
    int insertions = 0;
};

struct InstrumentOptions {
    std::string log_path = "exbt-trace.log";
};

struct InstrumentResult {
    std::vector<RewrittenFile> files;  // every unit, rewritten or byte-identical
    std::vector<std::string> warnings;
    int methods_instrumented = 0;
    std::vector<std::pair<std::string, std::string>> runtime_sources;  // relative path, source
};

/// Adds a trace dump as the first statement of every main-source method that
/// contains a throw statement. Compact constructors and bodiless members are
/// skipped with a warning. Re-instrumenting is a no-op.
InstrumentResult instrument_print_trace(const RepoContext& ctx, const InstrumentOptions& opts = {});

/// Removes every trace dump the instrumenter inserted.
std::string strip_trace_instrumentation(std::string_view text);

/// Rewrites one EBT so the observed exception's stack trace is printed.
/// Throws Error(NotEBT).
std::string instrument_print_exception(const TestMethod& ebt);

/// Applies instrument_print_exception to each EBT method inside its file.
Rewrite instrument_test_file(std::string_view source, const std::vector<TestMethod>& ebts);

/// Java sources of the logging runtime and JUnit listener, keyed by relative path.
std::vector<std::pair<std::string, std::string>> runtime_sources(const InstrumentOptions& opts);

// ---- trace logs ------------------------------------------------------------

struct TraceLogEntry {
    StackTrace trace;
    std::string test_id;  // "pkg.Class#method", empty when the block had no header
    std::optional<std::string> exception_type;

    bool operator==(const TraceLogEntry&) const = default;
};

struct TraceLog {
    std::vector<TraceLogEntry> entries;
    int malformed_blocks = 0;
    std::vector<std::string> warnings;
};

/// Blocks are separated by lines of `---`. A block may start with
/// "# test: <id>" and an exception headline; anything else that is not a frame
/// makes the block malformed (skipped and counted).
TraceLog parse_trace_log(std::string_view text);

/// Renders entries in the block format parse_trace_log reads.
std::string render_trace_log(const std::vector<TraceLogEntry>& entries);

/// Rewrites frame lines of instrumented files back to original coordinates.
/// `offsets` maps repo-relative paths to their sidecar maps; frames are matched by file basename
/// and declaring class.
StackTrace normalize_lines(const StackTrace& t, const RepoContext& ctx,
                           const std::vector<std::pair<std::string, OffsetMap>>& offsets);

}  // namespace exbt
