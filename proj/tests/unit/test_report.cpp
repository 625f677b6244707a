#include <gtest/gtest.h>

#include <fstream>

#include "fallwatch/hashing.hpp"
#include "fallwatch/report.hpp"
#include "oracles.hpp"

using namespace fallwatch;
namespace fs = std::filesystem;

namespace {

ScoreSet two_videos() {
    ScoreSet set;
    for (int v = 0; v < 2; ++v) {
        VideoScores s;
        s.video_id = "FD00" + std::to_string(v + 1) + "_SYNTHETIC_Day-1";
        s.windows.length = 8;
        for (std::size_t i = 0; i < 30; ++i) {
            const std::uint8_t fall = i >= 12 && i < 20;
            s.frames.push_back({0.01 * static_cast<double>(i % 7) + 0.1 * fall + 0.3 * v, 0.002 * static_cast<double>(i), 8, fall});
        }
        for (std::size_t w = 0; w + 8 <= 30; ++w) {
            std::size_t falls = 0;
            for (std::size_t t = w; t < w + 8; ++t) falls += s.frames[t].truth;
            s.windows.windows.push_back({w, 0.05 * static_cast<double>(falls) + 0.001 * static_cast<double>(w), falls});
        }
        set.videos.push_back(std::move(s));
    }
    return set;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST(Report, WritesEveryTableAndRerendersIdentically) {
    fallwatch::testing::TempDir a("report-a"), b("report-b");
    const auto report = evaluate(two_videos());
    const auto first = render_report(report, a.path());
    EXPECT_TRUE(first.omitted.empty());
    for (const char* f : {"report.json", "tables/cross_context_per_video_mu.csv", "tables/cross_context_per_video_sigma.csv",
                          "tables/cross_context_global_mu.csv", "tables/cross_context_global_sigma.csv",
                          "tables/within_context_roc.csv", "tables/within_context_pr.csv", "tables/counts.csv",
                          "plots/within_context_roc.svg", "plots/within_context_pr.svg", "manifest.json"})
        EXPECT_TRUE(fs::exists(a / f)) << f;

    const auto reloaded = EvalReport::from_json(nlohmann::json::parse(slurp(a / "report.json")));
    const auto second = render_report(reloaded, b.path());
    ASSERT_EQ(second.files.size(), first.files.size());
    for (std::size_t i = 0; i < first.files.size(); ++i) {
        EXPECT_EQ(second.files[i].path, first.files[i].path);
        EXPECT_EQ(second.files[i].sha256, first.files[i].sha256) << first.files[i].path;
        EXPECT_EQ(sha256_file(a / first.files[i].path), first.files[i].sha256);
    }
}

TEST(Report, PrTableCarriesBaselineRow) {
    fallwatch::testing::TempDir dir("report-pr");
    render_report(evaluate(two_videos()), dir.path());
    const auto pr = slurp(dir / "tables/within_context_pr.csv");
    EXPECT_EQ(pr.substr(0, pr.find('\n')), "row,k1,k2,k3,k4,k5,k6,k7");
    EXPECT_NE(pr.find("Baseline (SYNTHETIC)"), std::string::npos);
    EXPECT_EQ(slurp(dir / "tables/within_context_roc.csv").find("Baseline"), std::string::npos);
}

TEST(Report, EmptySweepOmitsPlotsWithReason) {
    fallwatch::testing::TempDir dir("report-empty");
    const auto r = render_report(evaluate(two_videos(), {FamilySelection::Sigma, {}}), dir.path());
    EXPECT_FALSE(fs::exists(dir / "plots/within_context_roc.svg"));
    EXPECT_FALSE(fs::exists(dir / "tables/cross_context_global_mu.csv"));
    EXPECT_TRUE(fs::exists(dir / "tables/cross_context_global_sigma.csv"));
    ASSERT_FALSE(r.omitted.empty());
    EXPECT_FALSE(r.omitted.front().reason.empty());
    EXPECT_NE(slurp(dir / "manifest.json").find("omitted"), std::string::npos);
}

TEST(Report, UndefinedMetricsAreNullInJsonAndNaInTables) {
    fallwatch::testing::TempDir dir("report-na");
    auto set = two_videos();
    for (auto& v : set.videos)
        for (auto& w : v.windows.windows) w.fall_frames = std::min<std::size_t>(w.fall_frames, 6);
    render_report(evaluate(set), dir.path());
    const auto roc = slurp(dir / "tables/within_context_roc.csv");
    EXPECT_NE(roc.find("NA"), std::string::npos);
    EXPECT_NE(slurp(dir / "report.json").find("null"), std::string::npos);
}
