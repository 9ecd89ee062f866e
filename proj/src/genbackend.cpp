#include "exbt/genbackend.hpp"

#include "exbt/classifier.hpp"
#include "exbt/error.hpp"
#include "exbt/java/parser.hpp"
#include "exbt/util.hpp"

#include <httplib.h>
#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <chrono>

namespace exbt {

using nlohmann::json;

// ---- stub -------------------------------------------------------------------

StubBackend StubBackend::from_json_text(std::string_view text)
{
    StubBackend s;
    try {
        json j = json::parse(text);
        for (const auto& e : j.at("completions")) {
            std::string completion = e.at("completion").get<std::string>();
            if (e.contains("digest"))
                s.add_digest(e.at("digest").get<std::string>(), completion);
            else
                s.add_contains(e.at("contains").get<std::string>(), completion);
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ConfigError, std::string("stub completions: ") + e.what());
    }
    return s;
}

StubBackend StubBackend::load(const std::filesystem::path& file)
{
    return from_json_text(read_file(file));
}

void StubBackend::add_digest(std::string digest, std::string completion)
{
    by_digest_.emplace_back(std::move(digest), std::move(completion));
}

void StubBackend::add_contains(std::string needle, std::string completion)
{
    by_substring_.emplace_back(std::move(needle), std::move(completion));
}

std::string StubBackend::complete(const std::string& prompt, const GenParams&)
{
    std::string digest = sha256_hex(prompt);
    for (const auto& [d, c] : by_digest_)
        if (d == digest) return c;
    for (const auto& [needle, c] : by_substring_)
        if (prompt.find(needle) != std::string::npos) return c;
    throw Error(ErrorCode::BackendUnavailable, "stub has no completion for prompt " + digest);
}

// ---- http -------------------------------------------------------------------

HttpBackend::HttpBackend(std::string url, std::string token) : token_(std::move(token))
{
    if (!starts_with(url, "http://"))
        throw Error(ErrorCode::ConfigError, "backend url must start with http://: " + url);
    auto slash = url.find('/', 7);
    host_port_ = url.substr(0, slash);
    path_ = slash == std::string::npos ? "/" : url.substr(slash);
}

std::string HttpBackend::complete(const std::string& prompt, const GenParams& p)
{
    json body = {{"prompt", prompt},
                 {"max_tokens", p.max_new_tokens},
                 {"temperature", p.temperature},
                 {"seed", p.seed},
                 {"stop", p.stop}};
    httplib::Client cli(host_port_);
    auto timeout = std::chrono::milliseconds(p.timeout_ms);
    cli.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(timeout).count(),
                               static_cast<time_t>((p.timeout_ms % 1000) * 1000));
    cli.set_read_timeout(std::chrono::duration_cast<std::chrono::seconds>(timeout).count(),
                         static_cast<time_t>((p.timeout_ms % 1000) * 1000));
    cli.set_write_timeout(std::chrono::duration_cast<std::chrono::seconds>(timeout).count(),
                          static_cast<time_t>((p.timeout_ms % 1000) * 1000));
    httplib::Headers headers;
    if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);
    auto start = std::chrono::steady_clock::now();
    auto res = cli.Post(path_, headers, body.dump(), "application/json");
    auto elapsed =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
    if (!res) {
        auto err = res.error();
        if (err == httplib::Error::ConnectionTimeout || (err == httplib::Error::Read && elapsed >= p.timeout_ms))
            throw Error(ErrorCode::BackendTimeout,
                        "backend did not answer within " + std::to_string(p.timeout_ms) + " ms (elapsed " +
                            std::to_string(elapsed) + " ms)");
        throw Error(ErrorCode::BackendUnavailable, "backend request failed: " + httplib::to_string(err));
    }
    if (res->status != 200)
        throw Error(ErrorCode::BackendUnavailable, "backend answered HTTP " + std::to_string(res->status));
    json j;
    try {
        j = json::parse(res->body);
    } catch (const json::exception&) {
        throw Error(ErrorCode::MalformedResponse, "backend response is not JSON");
    }
    if (j.is_object()) {
        if (j.contains("text") && j["text"].is_string()) return j["text"];
        if (j.contains("response") && j["response"].is_string()) return j["response"];
        if (j.contains("choices") && j["choices"].is_array() && !j["choices"].empty()) {
            const auto& c = j["choices"][0];
            if (c.contains("text") && c["text"].is_string()) return c["text"];
            if (c.contains("message") && c["message"].contains("content") && c["message"]["content"].is_string())
                return c["message"]["content"];
        }
    }
    throw Error(ErrorCode::MalformedResponse, "backend response has no completion text");
}

// ---- replay and request log -------------------------------------------------

std::string request_digest(std::string_view prompt, const GenParams& p)
{
    json j = {{"prompt", sha256_hex(prompt)},
              {"max_tokens", p.max_new_tokens},
              {"temperature", p.temperature},
              {"seed", p.seed},
              {"stop", p.stop}};
    return sha256_hex(j.dump());
}

namespace {

json record_json(const RequestRecord& r)
{
    return {{"seq", r.seq},
            {"backend", r.backend},
            {"prompt_digest", r.prompt_digest},
            {"request_digest", r.request_digest},
            {"params",
             {{"max_tokens", r.params.max_new_tokens},
              {"temperature", r.params.temperature},
              {"seed", r.params.seed},
              {"stop", r.params.stop}}},
            {"completion", r.completion},
            {"completion_digest", r.completion_digest}};
}

}  // namespace

ReplayBackend ReplayBackend::from_log(std::string_view jsonl)
{
    ReplayBackend b;
    for (const auto& line : split_lines(jsonl)) {
        if (trim(line).empty()) continue;
        try {
            json j = json::parse(line);
            b.recorded_.emplace_back(j.at("request_digest").get<std::string>(), j.at("completion").get<std::string>());
        } catch (const json::exception& e) {
            throw Error(ErrorCode::MalformedResponse, std::string("request log: ") + e.what());
        }
    }
    return b;
}

std::string ReplayBackend::complete(const std::string& prompt, const GenParams& params)
{
    std::string d = request_digest(prompt, params);
    for (const auto& [k, c] : recorded_)
        if (k == d) return c;
    throw Error(ErrorCode::BackendUnavailable, "request " + d + " is not in the replay log");
}

Generator::Generator(Backend& backend, int max_in_flight)
    : backend_(backend), slots_(std::clamp(max_in_flight, 1, 64))
{
}

std::string Generator::generate(const std::string& instruction, const GenParams& params)
{
    int seq;
    {
        std::lock_guard lock(mutex_);
        seq = next_seq_++;
    }
    return generate(instruction, params, seq);
}

std::string Generator::generate(const std::string& instruction, const GenParams& params, int seq)
{
    RequestRecord r;
    r.seq = seq;
    r.backend = backend_.kind();
    r.prompt_digest = sha256_hex(instruction);
    r.request_digest = request_digest(instruction, params);
    r.params = params;
    slots_.acquire();
    try {
        r.completion = backend_.complete(instruction, params);
    } catch (...) {
        slots_.release();
        throw;
    }
    slots_.release();
    r.completion_digest = sha256_hex(r.completion);
    std::lock_guard lock(mutex_);
    records_.push_back(r);
    return r.completion;
}

std::vector<RequestRecord> Generator::records() const
{
    std::lock_guard lock(mutex_);
    auto out = records_;
    std::sort(out.begin(), out.end(), [](const RequestRecord& a, const RequestRecord& b) { return a.seq < b.seq; });
    return out;
}

std::string Generator::log_jsonl() const
{
    std::string out;
    for (const auto& r : records()) out += record_json(r).dump() + "\n";
    return out;
}

std::unique_ptr<Backend> make_backend(std::string_view kind, const std::string& url_or_file, const std::string& token)
{
    if (kind == "stub") return std::make_unique<StubBackend>(StubBackend::load(url_or_file));
    if (kind == "http") return std::make_unique<HttpBackend>(url_or_file, token);
    if (kind == "replay") return std::make_unique<ReplayBackend>(ReplayBackend::from_log(read_file(url_or_file)));
    throw Error(ErrorCode::ConfigError, "unknown backend kind: " + std::string(kind));
}

// ---- candidate extraction -----------------------------------------------------

namespace {

bool ident_char(char c)
{
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$';
}

/// Index one past a string or char literal starting at `i`, or past a comment.
std::size_t skip_literal(std::string_view s, std::size_t i)
{
    char q = s[i];
    if (q == '/' && i + 1 < s.size() && s[i + 1] == '/') {
        auto nl = s.find('\n', i);
        return nl == std::string_view::npos ? s.size() : nl;
    }
    if (q == '/' && i + 1 < s.size() && s[i + 1] == '*') {
        auto end = s.find("*/", i + 2);
        return end == std::string_view::npos ? s.size() : end + 2;
    }
    if (q == '"' && s.substr(i, 3) == "\"\"\"") {
        auto end = s.find("\"\"\"", i + 3);
        return end == std::string_view::npos ? s.size() : end + 3;
    }
    for (std::size_t j = i + 1; j < s.size(); ++j) {
        if (s[j] == '\\') {
            ++j;
            continue;
        }
        if (s[j] == q || s[j] == '\n') return j + 1;
    }
    return s.size();
}

bool literal_start(std::string_view s, std::size_t i)
{
    return s[i] == '"' || s[i] == '\'' || (s[i] == '/' && i + 1 < s.size() && (s[i + 1] == '/' || s[i + 1] == '*'));
}

/// End of the method starting at `start` (one past its closing brace), if balanced.
std::optional<std::size_t> method_end(std::string_view s, std::size_t start)
{
    int parens = 0;
    std::size_t i = start;
    while (i < s.size()) {
        if (literal_start(s, i)) {
            i = skip_literal(s, i);
            continue;
        }
        char c = s[i];
        if (c == '(') ++parens;
        if (c == ')') --parens;
        if (c == ';' && parens == 0) return std::nullopt;  // abstract or prose
        if (c == '{' && parens == 0) break;
        ++i;
    }
    int depth = 0;
    while (i < s.size()) {
        if (literal_start(s, i)) {
            i = skip_literal(s, i);
            continue;
        }
        if (s[i] == '{') ++depth;
        if (s[i] == '}' && --depth == 0) return i + 1;
        ++i;
    }
    return std::nullopt;
}

std::string strip_fences(std::string_view text)
{
    std::string out;
    for (const auto& line : split_lines(text)) {
        if (starts_with(trim(line), "```")) continue;
        out += line + "\n";
    }
    return out;
}

}  // namespace

std::optional<std::string> extract_candidate(std::string_view completion)
{
    std::string text = strip_fences(completion);
    std::string_view s = text;
    for (std::size_t at = s.find('@'); at != std::string_view::npos; at = s.find('@', at + 1)) {
        if (at > 0 && ident_char(s[at - 1])) continue;
        std::size_t j = at + 1;
        while (j < s.size() && (ident_char(s[j]) || s[j] == '.')) ++j;
        std::string name = simple_type_name(s.substr(at + 1, j - at - 1));
        if (name != "Test" && name != "ParameterizedTest" && name != "RepeatedTest") continue;
        auto end = method_end(s, j);
        if (!end) continue;
        std::string method = dedent_tail(s.substr(at, *end - at));
        try {
            auto unit = java::parse_members(method);
            const auto& methods = unit.types.at(0)->methods;
            if (methods.size() == 1 && is_test_method(*methods[0])) return method;
        } catch (const std::exception&) {
            // not a parseable method; keep looking
        }
    }
    return std::nullopt;
}

}  // namespace exbt
