#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fallwatch::cli {

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

/// Reads the real process environment.
std::optional<std::string> process_env(const std::string& name);

struct OptionSpec {
    std::string key;       // dotted config key, e.g. "train.epochs"
    std::string flag;      // command-line flag, e.g. "--epochs"
    std::string fallback;  // built-in default; empty means unset
    std::string help;
};

/// Every key the tool understands.
const std::vector<OptionSpec>& option_catalog();
const OptionSpec& option(std::string_view key);

/// FALLWATCH_ + key upper-cased with dots turned into underscores.
std::string env_name(std::string_view key);

/// Flat `key = value` lines; '#' starts a comment. Throws ConfigError on malformed
/// lines, unknown keys and duplicates.
std::map<std::string, std::string> parse_config_text(std::string_view text, const std::string& origin = "config");

/// Resolved settings with the precedence command line > environment > config file > default.
class RunConfig {
public:
    struct Value {
        std::string text;
        std::string source;  // "cli", "env", "file" or "default"
    };

    static RunConfig resolve(const std::vector<std::string>& keys, const std::map<std::string, std::string>& cli,
                             const std::optional<std::filesystem::path>& config_file, const EnvLookup& env);

    bool has(std::string_view key) const;
    const Value& value(std::string_view key) const;

    /// Throws ConfigError naming the flag when the key has no value.
    std::string require(std::string_view key) const;
    std::string text(std::string_view key) const;
    long long integer(std::string_view key) const;
    std::size_t count(std::string_view key) const;  // integer >= 1
    double real(std::string_view key) const;
    std::uint64_t seed() const;
    std::filesystem::path existing_path(std::string_view key) const;

    /// "key = value  # source" per line, sorted by key, for the output directory.
    std::string echo(std::string_view command) const;
    void write_echo(std::string_view command, const std::filesystem::path& dir) const;

private:
    std::map<std::string, Value, std::less<>> values_;
};

/// "1..7", "3" or "1,3,5".
std::vector<std::size_t> parse_k_list(std::string_view text);

/// Comma-separated integers, e.g. "16,8,8".
std::vector<int> parse_int_list(std::string_view text, std::string_view what);

}  // namespace fallwatch::cli
