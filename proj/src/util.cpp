#include "exbt/util.hpp"

#include "exbt/error.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <fstream>
#include <sstream>

namespace exbt {

std::string_view error_code_name(ErrorCode code)
{
    switch (code) {
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::NoJavaSources: return "NoJavaSources";
    case ErrorCode::UnknownMethod: return "UnknownMethod";
    case ErrorCode::NotATest: return "NotATest";
    case ErrorCode::NotEBT: return "NotEBT";
    case ErrorCode::MalformedTrace: return "MalformedTrace";
    case ErrorCode::EmptyAfterExclusion: return "EmptyAfterExclusion";
    case ErrorCode::NoThrowAtFrame: return "NoThrowAtFrame";
    case ErrorCode::FrameOutOfSpan: return "FrameOutOfSpan";
    case ErrorCode::UnboundName: return "UnboundName";
    case ErrorCode::UnsupportedConstruct: return "UnsupportedConstruct";
    case ErrorCode::DivisionByZero: return "DivisionByZero";
    case ErrorCode::RewriteConflict: return "RewriteConflict";
    case ErrorCode::BackendUnavailable: return "BackendUnavailable";
    case ErrorCode::BackendTimeout: return "BackendTimeout";
    case ErrorCode::MalformedResponse: return "MalformedResponse";
    case ErrorCode::RunnerUnavailable: return "RunnerUnavailable";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::UsageError: return "UsageError";
    }
    return "Unknown";
}

std::string sha256_hex(std::string_view data)
{
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr);
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 0xf]);
    }
    return out;
}

std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view data)
{
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw Error(ErrorCode::IoError, "short write to " + path.string());
}

std::vector<std::string> split_lines(std::string_view text)
{
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        auto nl = text.find('\n', start);
        if (nl == std::string_view::npos) {
            lines.emplace_back(text.substr(start));
            break;
        }
        std::string_view line = text.substr(start, nl - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.emplace_back(line);
        start = nl + 1;
    }
    return lines;
}

std::string trim(std::string_view s)
{
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

bool starts_with(std::string_view s, std::string_view prefix) { return s.substr(0, prefix.size()) == prefix; }

bool ends_with(std::string_view s, std::string_view suffix)
{
    return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

std::string simple_type_name(std::string_view qualified)
{
    auto lt = qualified.find('<');
    if (lt != std::string_view::npos) qualified = qualified.substr(0, lt);
    auto dot = qualified.rfind('.');
    return trim(dot == std::string_view::npos ? qualified : qualified.substr(dot + 1));
}

std::string relative_path(const std::filesystem::path& p, const std::filesystem::path& base)
{
    return std::filesystem::relative(p, base).generic_string();
}

std::string file_name(std::string_view path)
{
    auto slash = path.rfind('/');
    return std::string(slash == std::string_view::npos ? path : path.substr(slash + 1));
}

std::string dedent_tail(std::string_view text)
{
    auto lines = split_lines(text);
    std::size_t common = std::string::npos;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto& l = lines[i];
        auto first = l.find_first_not_of(" \t");
        if (first == std::string::npos) continue;
        common = std::min(common, first);
    }
    if (common == std::string::npos || common == 0) return std::string(text);
    std::string out;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (i) out += "\n";
        const auto& l = lines[i];
        out += (i == 0 || l.size() < common) ? (i == 0 ? l : trim(l)) : l.substr(common);
    }
    if (!text.empty() && text.back() == '\n') out += "\n";
    return out;
}

}  // namespace exbt
