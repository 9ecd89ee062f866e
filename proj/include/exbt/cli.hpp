#pragma once

#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace exbt {

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

/// The process environment.
std::optional<std::string> process_env(const std::string& name);

/// `key = value` lines; blank lines and lines starting with '#' are skipped.
/// Keys use the long flag spelling ("backend-url"); underscores are accepted.
/// Throws Error(ConfigError) for a line without '=' or an unknown key.
std::map<std::string, std::string> parse_config_text(std::string_view text);

/// Runs one subcommand. `args` excludes the program name. Returns the exit
/// status: 0 on success, 2 on usage errors, 1 on pipeline errors (with a JSON
/// error object on `err`).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            const EnvLookup& env = process_env);

}  // namespace exbt
