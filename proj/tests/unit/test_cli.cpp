#include <gtest/gtest.h>

#include <fstream>

#include "fallwatch/cli/run_config.hpp"
#include "fallwatch/error.hpp"
#include "fallwatch/hashing.hpp"
#include "oracles.hpp"
#include "pipeline.hpp"

using namespace fallwatch;
using fallwatch::testing::run_cli;
namespace fs = std::filesystem;

namespace {

cli::EnvLookup env_of(std::map<std::string, std::string> vars) {
    return [vars = std::move(vars)](const std::string& name) -> std::optional<std::string> {
        if (auto it = vars.find(name); it != vars.end()) return it->second;
        return std::nullopt;
    };
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

fallwatch::testing::PipelineOptions tiny_pipeline() {
    fallwatch::testing::PipelineOptions o;
    o.train = "2";
    o.test = "2";
    o.train_frames = "12";
    o.test_frames = "40";
    o.epochs = "1";
    o.batch_size = "4";
    o.channels = "2,2,2";
    return o;
}

}  // namespace

TEST(RunConfig, PrecedenceCliEnvFileDefault) {
    fallwatch::testing::TempDir dir("cfg");
    std::ofstream(dir / "run.cfg") << "# comment\ntrain.epochs = 7\ntrain.batch_size = 9\nseed = 3\n";
    const std::vector<std::string> keys{"train.epochs", "train.batch_size", "seed", "train.learning_rate"};
    const auto cfg = cli::RunConfig::resolve(keys, {{"train.epochs", "11"}}, dir / "run.cfg",
                                             env_of({{"FALLWATCH_TRAIN_BATCH_SIZE", "5"}}));
    EXPECT_EQ(cfg.integer("train.epochs"), 11);
    EXPECT_EQ(cfg.value("train.epochs").source, "cli");
    EXPECT_EQ(cfg.count("train.batch_size"), 5u);
    EXPECT_EQ(cfg.value("train.batch_size").source, "env");
    EXPECT_EQ(cfg.seed(), 3u);
    EXPECT_EQ(cfg.value("seed").source, "file");
    EXPECT_EQ(cfg.real("train.learning_rate"), 0.001);
    EXPECT_EQ(cfg.value("train.learning_rate").source, "default");
    EXPECT_NE(cfg.echo("train").find("train.epochs = 11  # cli"), std::string::npos);
}

TEST(RunConfig, RejectsMalformedFiles) {
    EXPECT_THROW(cli::parse_config_text("epochs = 3\n"), ConfigError);
    EXPECT_THROW(cli::parse_config_text("seed = 1\nseed = 2\n"), ConfigError);
    EXPECT_THROW(cli::parse_config_text("seed 1\n"), ConfigError);
    EXPECT_EQ(cli::parse_config_text("  seed=4  # x\n\n").at("seed"), "4");
}

TEST(RunConfig, TypedAccessors) {
    const auto cfg = cli::RunConfig::resolve({"train.epochs", "out", "seed"}, {{"train.epochs", "abc"}, {"seed", "-1"}},
                                             std::nullopt, {});
    EXPECT_THROW(cfg.integer("train.epochs"), ConfigError);
    EXPECT_THROW(cfg.require("out"), ConfigError);
    EXPECT_THROW(cfg.seed(), ConfigError);
    EXPECT_THROW(cfg.value("report"), ConfigError);
    EXPECT_EQ(cli::env_name("train.batch_size"), "FALLWATCH_TRAIN_BATCH_SIZE");
}

TEST(RunConfig, ListParsing) {
    EXPECT_EQ(cli::parse_k_list("1..7"), (std::vector<std::size_t>{1, 2, 3, 4, 5, 6, 7}));
    EXPECT_EQ(cli::parse_k_list("1,3, 5"), (std::vector<std::size_t>{1, 3, 5}));
    EXPECT_TRUE(cli::parse_k_list("").empty());
    EXPECT_THROW(cli::parse_k_list("5..2"), ConfigError);
    EXPECT_THROW(cli::parse_k_list("a"), ConfigError);
    EXPECT_EQ(cli::parse_int_list("16,8,8", "channel"), (std::vector<int>{16, 8, 8}));
    EXPECT_THROW(cli::parse_int_list("16,0", "channel"), ConfigError);
}

TEST(Cli, ExitCodes) {
    EXPECT_EQ(run_cli({}).code, cli::kExitUsage);
    EXPECT_EQ(run_cli({"frobnicate"}).code, cli::kExitUsage);
    EXPECT_EQ(run_cli({"train", "--bogus", "1"}).code, cli::kExitUsage);
    EXPECT_EQ(run_cli({"--help"}).code, cli::kExitOk);
    const auto missing = run_cli({"synth"});
    EXPECT_EQ(missing.code, cli::kExitUsage);
    EXPECT_NE(missing.err.find("--out"), std::string::npos);
    EXPECT_EQ(run_cli({"train", "--data", "/nonexistent/fw", "--out", "/tmp/x"}).code, cli::kExitUsage);
}

TEST(Cli, ConfigFileFromEnvironment) {
    fallwatch::testing::TempDir dir("cli-env");
    std::ofstream(dir / "bad.cfg") << "no.such.key = 1\n";
    const auto r = run_cli({"synth", "--out", (dir / "s").string()}, {{"FALLWATCH_CONFIG", (dir / "bad.cfg").string()}});
    EXPECT_EQ(r.code, cli::kExitUsage);
    EXPECT_NE(r.err.find("unknown key"), std::string::npos);
}

TEST(Cli, TrainingOnLabelledClipsIsAPurityViolation) {
    fallwatch::testing::TempDir dir("cli-purity");
    ASSERT_EQ(run_cli({"synth", "--out", (dir / "d").string(), "--train", "1", "--test", "1", "--train-frames", "12",
                       "--test-frames", "40"})
                  .code,
              0);
    const auto r = run_cli({"train", "--data", (dir / "d").string(), "--participants", "FD*", "--out",
                            (dir / "m").string(), "--channels", "2,2,2", "--epochs", "1"});
    EXPECT_EQ(r.code, cli::kExitData);
    EXPECT_NE(r.err.find("purity violation"), std::string::npos);
}

TEST(Cli, FullPipelineAndCorruptCheckpoint) {
    fallwatch::testing::TempDir dir("cli-pipe");
    const auto d = fallwatch::testing::run_pipeline(dir.path(), tiny_pipeline());

    EXPECT_TRUE(fs::exists(d.model / "effective_config.txt"));
    EXPECT_TRUE(fs::exists(d.model / "training_log.csv"));
    EXPECT_NE(slurp(d.model / "effective_config.txt").find("model.channels = 2,2,2  # cli"), std::string::npos);
    EXPECT_TRUE(fs::exists(d.scores / "index.json"));
    EXPECT_TRUE(fs::exists(d.report / "report.json"));
    EXPECT_TRUE(fs::exists(d.report / "tables/within_context_pr.csv"));
    EXPECT_TRUE(fs::exists(d.report / "plots/within_context_roc.svg"));

    // re-rendering from report.json reproduces the tables byte for byte
    const auto again = run_cli({"report", "--report", (d.report / "report.json").string(), "--out",
                                (dir / "again").string()});
    ASSERT_EQ(again.code, 0) << again.err;
    for (const char* f : {"report.json", "tables/counts.csv", "tables/within_context_roc.csv",
                          "tables/cross_context_global_mu.csv", "plots/within_context_pr.svg"})
        EXPECT_EQ(sha256_file(dir / "again" / f), sha256_file(d.report / f)) << f;

    auto bytes = slurp(d.model / "checkpoint.fwck");
    bytes[bytes.size() / 2] ^= 0x10;
    std::ofstream(dir / "bad.fwck", std::ios::binary) << bytes;
    const auto r = run_cli({"score", "--data", d.data.string(), "--checkpoint", (dir / "bad.fwck").string(), "--out",
                            (dir / "s2").string()});
    EXPECT_EQ(r.code, cli::kExitIntegrity);
}
