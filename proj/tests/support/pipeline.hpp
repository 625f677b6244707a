#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fallwatch/cli/commands.hpp"

namespace fallwatch::testing {

struct CliResult {
    int code = 0;
    std::string out;
    std::string err;
};

inline CliResult run_cli(const std::vector<std::string>& args, const std::map<std::string, std::string>& env = {}) {
    std::ostringstream out, err;
    const cli::EnvLookup lookup = [&env](const std::string& name) -> std::optional<std::string> {
        if (auto it = env.find(name); it != env.end()) return it->second;
        return std::nullopt;
    };
    const int code = cli::run(args, out, err, lookup);
    return {code, out.str(), err.str()};
}

struct PipelineOptions {
    std::string seed = "0";
    std::string train = "20";
    std::string test = "10";
    std::string train_frames = "48";
    std::string test_frames = "96";
    std::string epochs = "20";
    std::string batch_size = "128";
    std::string channels = "16,8,8";
    std::string learning_rate = "0.001";
};

struct PipelineDirs {
    std::filesystem::path data, model, scores, report;
};

// synth -> train -> score -> evaluate through the command-line entry point.
inline PipelineDirs run_pipeline(const std::filesystem::path& root, const PipelineOptions& o) {
    PipelineDirs d{root / "data", root / "model", root / "scores", root / "report"};
    auto step = [](const std::vector<std::string>& args) {
        const auto r = run_cli(args);
        if (r.code != 0) throw std::runtime_error(args.front() + " exited " + std::to_string(r.code) + ": " + r.err);
    };
    step({"synth", "--out", d.data.string(), "--seed", o.seed, "--train", o.train, "--test", o.test, "--train-frames",
          o.train_frames, "--test-frames", o.test_frames});
    step({"train", "--data", d.data.string(), "--out", d.model.string(), "--seed", o.seed, "--epochs", o.epochs,
          "--batch-size", o.batch_size, "--channels", o.channels, "--lr", o.learning_rate});
    step({"score", "--data", d.data.string(), "--checkpoint", (d.model / "checkpoint.fwck").string(), "--out",
          d.scores.string()});
    step({"evaluate", "--scores", d.scores.string(), "--out", d.report.string()});
    return d;
}

}  // namespace fallwatch::testing
