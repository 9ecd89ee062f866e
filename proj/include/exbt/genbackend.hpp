#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace exbt {

struct GenParams {
    int max_new_tokens = 512;
    double temperature = 0.0;
    std::uint64_t seed = 42;
    std::vector<std::string> stop;
    int timeout_ms = 60000;
};

/// A text-generation service. Implementations throw Error(BackendUnavailable),
/// Error(BackendTimeout) or Error(MalformedResponse).
class Backend {
public:
    virtual ~Backend() = default;
    virtual std::string kind() const = 0;
    virtual std::string complete(const std::string& prompt, const GenParams& params) = 0;
};

/// Canned completions keyed by prompt digest, or by a substring the prompt
/// must contain. Digest entries win; substring entries are tried in order.
class StubBackend : public Backend {
public:
    StubBackend() = default;
    /// {"completions": [{"digest"|"contains": ..., "completion": ...}, ...]}
    static StubBackend from_json_text(std::string_view text);
    static StubBackend load(const std::filesystem::path& file);

    void add_digest(std::string digest, std::string completion);
    void add_contains(std::string needle, std::string completion);

    std::string kind() const override { return "stub"; }
    std::string complete(const std::string& prompt, const GenParams& params) override;

private:
    std::vector<std::pair<std::string, std::string>> by_digest_;
    std::vector<std::pair<std::string, std::string>> by_substring_;
};

/// POSTs {prompt, max_tokens, temperature, seed, stop} and reads {text}.
/// Responses shaped like common completion APIs ({choices[0].text},
/// {choices[0].message.content}, {response}) are accepted too. Plain http only.
class HttpBackend : public Backend {
public:
    explicit HttpBackend(std::string url, std::string token = "");
    std::string kind() const override { return "http"; }
    std::string complete(const std::string& prompt, const GenParams& params) override;

private:
    std::string host_port_;
    std::string path_;
    std::string token_;
};

struct RequestRecord {
    int seq = 0;
    std::string backend;
    std::string prompt_digest;
    std::string request_digest;  // prompt digest plus parameters
    GenParams params;
    std::string completion;
    std::string completion_digest;
};

/// Serves completions recorded in a request log, by request digest.
class ReplayBackend : public Backend {
public:
    static ReplayBackend from_log(std::string_view jsonl);
    std::string kind() const override { return "replay"; }
    std::string complete(const std::string& prompt, const GenParams& params) override;

private:
    std::vector<std::pair<std::string, std::string>> recorded_;
};

std::string request_digest(std::string_view prompt, const GenParams& params);

/// Bounded-concurrency front end that records every request.
class Generator {
public:
    explicit Generator(Backend& backend, int max_in_flight = 4);

    std::string generate(const std::string& instruction, const GenParams& params);
    /// Same, with the log position chosen by the caller so that concurrent
    /// callers still produce a stable log.
    std::string generate(const std::string& instruction, const GenParams& params, int seq);

    std::vector<RequestRecord> records() const;
    /// One JSON object per request in issue order.
    std::string log_jsonl() const;

private:
    Backend& backend_;
    std::counting_semaphore<64> slots_;
    mutable std::mutex mutex_;
    std::vector<RequestRecord> records_;
    int next_seq_ = 0;
};

std::unique_ptr<Backend> make_backend(std::string_view kind, const std::string& url_or_file,
                                      const std::string& token = "");

/// First complete method carrying a test annotation, with code fences and
/// surrounding prose removed; nullopt when there is none.
std::optional<std::string> extract_candidate(std::string_view completion);

}  // namespace exbt
