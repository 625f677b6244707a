#include "fallwatch/cli/run_config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "fallwatch/error.hpp"

namespace fs = std::filesystem;

namespace fallwatch::cli {

std::optional<std::string> process_env(const std::string& name) {
    if (const char* v = std::getenv(name.c_str())) return std::string(v);
    return std::nullopt;
}

const std::vector<OptionSpec>& option_catalog() {
    static const std::vector<OptionSpec> catalog = {
        {"out", "--out", "", "output directory"},
        {"seed", "--seed", "0", "seed for generation, initialization and shuffling"},
        {"synth.train", "--train", "20", "number of fall-free training clips"},
        {"synth.test", "--test", "10", "number of test clips"},
        {"synth.falls", "--falls", "1", "falls per test clip"},
        {"synth.style", "--style", "plain", "plain | depth_with_holes | thermal_gradient"},
        {"synth.train_frames", "--train-frames", "48", "frames per training clip"},
        {"synth.test_frames", "--test-frames", "96", "frames per test clip"},
        {"data.root", "--data", "", "dataset root in the ingest layout"},
        {"data.labels", "--labels", "", "label CSV (default <data>/labels.csv)"},
        {"data.modality", "--modality", "auto", "modality to use; auto picks the only one present"},
        {"data.participants", "--participants", "",
         "comma list of participants, NAME* matches a prefix (default: unlabelled participants for "
         "train, labelled ones for score)"},
        {"data.cache", "--cache", "", "directory for cached canonical clips"},
        {"window.length", "--window", "8", "frames per window (T)"},
        {"window.stride", "--stride", "1", "window stride when scoring"},
        {"model.channels", "--channels", "16,8,8", "encoder channels per stage"},
        {"train.epochs", "--epochs", "20", "training epochs"},
        {"train.batch_size", "--batch-size", "128", "windows per optimizer step"},
        {"train.learning_rate", "--lr", "0.001", "Adam learning rate"},
        {"train.stride", "--train-stride", "1", "window stride when sampling training windows"},
        {"train.purity", "--purity", "reject", "reject | skip-fall-windows"},
        {"checkpoint", "--checkpoint", "", "checkpoint file"},
        {"score.chunk", "--chunk", "64", "windows per forward chunk"},
        {"scores", "--scores", "", "directory written by score"},
        {"eval.family", "--family", "both", "mu | sigma | both"},
        {"eval.k_sweep", "--k-sweep", "1..7", "fall thresholds for the within-context sweep"},
        {"report", "--report", "", "report.json written by evaluate"},
    };
    return catalog;
}

const OptionSpec& option(std::string_view key) {
    for (const auto& o : option_catalog())
        if (o.key == key) return o;
    throw ConfigError("unknown config key '" + std::string(key) + "'");
}

std::string env_name(std::string_view key) {
    std::string name = "FALLWATCH_";
    for (char c : key) name += c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return name;
}

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

}  // namespace

std::map<std::string, std::string> parse_config_text(std::string_view text, const std::string& origin) {
    std::map<std::string, std::string> out;
    std::istringstream in{std::string(text)};
    std::string line;
    for (int number = 1; std::getline(in, line); ++number) {
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const std::string stripped = trim(line);
        if (stripped.empty()) continue;
        const auto eq = stripped.find('=');
        const std::string where = origin + ":" + std::to_string(number);
        if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
        const std::string key = trim(std::string_view(stripped).substr(0, eq));
        const std::string value = trim(std::string_view(stripped).substr(eq + 1));
        try {
            option(key);
        } catch (const ConfigError&) {
            throw ConfigError(where + ": unknown key '" + key + "'");
        }
        if (!out.emplace(key, value).second) throw ConfigError(where + ": duplicate key '" + key + "'");
    }
    return out;
}

RunConfig RunConfig::resolve(const std::vector<std::string>& keys, const std::map<std::string, std::string>& cli,
                             const std::optional<fs::path>& config_file, const EnvLookup& env) {
    std::map<std::string, std::string> file_values;
    if (config_file) {
        std::ifstream in(*config_file);
        if (!in) throw ConfigError("cannot read config file " + config_file->string());
        std::ostringstream text;
        text << in.rdbuf();
        file_values = parse_config_text(text.str(), config_file->string());
    }
    RunConfig cfg;
    for (const auto& key : keys) {
        const auto& spec = option(key);
        Value v{spec.fallback, "default"};
        if (auto it = file_values.find(key); it != file_values.end()) v = {it->second, "file"};
        if (env) {
            if (auto e = env(env_name(key))) v = {*e, "env"};
        }
        if (auto it = cli.find(key); it != cli.end()) v = {it->second, "cli"};
        cfg.values_[key] = v;
    }
    return cfg;
}

bool RunConfig::has(std::string_view key) const {
    auto it = values_.find(key);
    return it != values_.end() && !it->second.text.empty();
}

const RunConfig::Value& RunConfig::value(std::string_view key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("option '" + std::string(key) + "' does not apply to this command");
    return it->second;
}

std::string RunConfig::require(std::string_view key) const {
    if (!has(key)) throw ConfigError("missing required option " + option(key).flag);
    return value(key).text;
}

std::string RunConfig::text(std::string_view key) const { return value(key).text; }

long long RunConfig::integer(std::string_view key) const {
    const std::string t = require(key);
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || ptr != t.data() + t.size())
        throw ConfigError(option(key).flag + " expects an integer, got '" + t + "'");
    return v;
}

std::size_t RunConfig::count(std::string_view key) const {
    const long long v = integer(key);
    if (v < 1) throw ConfigError(option(key).flag + " must be at least 1");
    return static_cast<std::size_t>(v);
}

double RunConfig::real(std::string_view key) const {
    const std::string t = require(key);
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size()) throw ConfigError(option(key).flag + " expects a number, got '" + t + "'");
    return v;
}

std::uint64_t RunConfig::seed() const {
    const long long v = integer("seed");
    if (v < 0) throw ConfigError("--seed must be non-negative");
    return static_cast<std::uint64_t>(v);
}

fs::path RunConfig::existing_path(std::string_view key) const {
    fs::path p = require(key);
    if (!fs::exists(p)) throw ConfigError(option(key).flag + " path does not exist: " + p.string());
    return p;
}

std::string RunConfig::echo(std::string_view command) const {
    std::string out = "command = " + std::string(command) + "\n";
    for (const auto& [key, v] : values_) out += key + " = " + v.text + "  # " + v.source + "\n";
    return out;
}

void RunConfig::write_echo(std::string_view command, const fs::path& dir) const {
    fs::create_directories(dir);
    std::ofstream out(dir / "effective_config.txt", std::ios::binary);
    if (!out) throw ConfigError("cannot write " + (dir / "effective_config.txt").string());
    out << echo(command);
}

std::vector<std::size_t> parse_k_list(std::string_view text) {
    auto number = [&](std::string_view s) {
        const std::string t = trim(s);
        std::size_t v = 0;
        const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
        if (t.empty() || ec != std::errc{} || ptr != t.data() + t.size())
            throw ConfigError("bad fall threshold list '" + std::string(text) + "'");
        return v;
    };
    std::vector<std::size_t> ks;
    if (trim(text).empty()) return ks;
    if (const auto dots = text.find(".."); dots != std::string_view::npos) {
        const std::size_t lo = number(text.substr(0, dots)), hi = number(text.substr(dots + 2));
        if (lo > hi) throw ConfigError("empty fall threshold range '" + std::string(text) + "'");
        for (std::size_t k = lo; k <= hi; ++k) ks.push_back(k);
        return ks;
    }
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto comma = text.find(',', start);
        ks.push_back(number(text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return ks;
}

std::vector<int> parse_int_list(std::string_view text, std::string_view what) {
    std::vector<int> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto comma = text.find(',', start);
        const std::string t = trim(text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        int v = 0;
        const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
        if (t.empty() || ec != std::errc{} || ptr != t.data() + t.size() || v < 1)
            throw ConfigError("bad " + std::string(what) + " list '" + std::string(text) + "'");
        out.push_back(v);
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

}  // namespace fallwatch::cli
