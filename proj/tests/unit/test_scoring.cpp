#include <gtest/gtest.h>

#include <random>

#include "fallwatch/error.hpp"
#include "fallwatch/scoring.hpp"
#include "oracles.hpp"

using namespace fallwatch;
using fallwatch::testing::brute_cross_context;
using fallwatch::testing::brute_within_context;
using fallwatch::testing::random_error_matrix;

namespace {

std::vector<std::uint8_t> random_labels(std::mt19937_64& rng, std::size_t n) {
    std::vector<std::uint8_t> labels(n);
    for (auto& l : labels) l = rng() % 4 == 0;
    return labels;
}

CanonicalClip constant_clip(std::size_t n, float value) {
    CanonicalClip clip;
    clip.frames.assign(n, Frame(kCanonicalSize, kCanonicalSize, value));
    clip.frame_label.assign(n, 0);
    clip.trial = {"P01", SessionCondition::Day, 1};
    return clip;
}

}  // namespace

TEST(CrossContext, MatchesNestedLoopOracle) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 300; ++trial) {
        const WindowSpec spec{1 + rng() % 5, 1};
        const std::size_t n = spec.length + rng() % (21 - spec.length);
        const auto e = random_error_matrix(rng, n, spec);
        const auto labels = random_labels(rng, n);
        const auto got = cross_context(e, labels, spec);
        const auto want = brute_cross_context(e);
        ASSERT_EQ(got.size(), want.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
            EXPECT_NEAR(got[i].mu, want[i].mu, 1e-12);
            EXPECT_NEAR(got[i].sigma, want[i].sigma, 1e-12);
            EXPECT_EQ(got[i].n_windows, want[i].n);
            EXPECT_EQ(got[i].truth, labels[i]);
        }
    }
}

TEST(CrossContext, InteriorFramesSeeTWindowsAndEdgesFewer) {
    const WindowSpec spec{8, 1};
    std::mt19937_64 rng(3);
    const auto e = random_error_matrix(rng, 20, spec);
    const auto s = cross_context(e, std::vector<std::uint8_t>(20, 0), spec);
    EXPECT_EQ(s.front().n_windows, 1u);
    EXPECT_EQ(s.back().n_windows, 1u);
    for (std::size_t i = 7; i <= 12; ++i) EXPECT_EQ(s[i].n_windows, 8u);
}

TEST(CrossContext, IdenticalErrorsGiveZeroSigma) {
    const WindowSpec spec{4, 1};
    ErrorMatrix e;
    e.length = 4;
    for (std::size_t w = 0; w < 5; ++w) {
        e.starts.push_back(w);
        for (int t = 0; t < 4; ++t) e.values.push_back(0.25);
    }
    for (const auto& f : cross_context(e, std::vector<std::uint8_t>(8, 0), spec)) {
        EXPECT_DOUBLE_EQ(f.mu, 0.25);
        EXPECT_EQ(f.sigma, 0.0);
    }
}

TEST(CrossContext, RejectsStartsOffTheGrid) {
    const WindowSpec spec{2, 1};
    ErrorMatrix e{2, {0, 2}, {0.1, 0.2, 0.3, 0.4}};
    EXPECT_THROW(cross_context(e, std::vector<std::uint8_t>(3, 0), spec), DataError);
}

TEST(WithinContext, MatchesOracleAndCountsFallFrames) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        const WindowSpec spec{1 + rng() % 5, 1};
        const std::size_t n = spec.length + rng() % (21 - spec.length);
        const auto e = random_error_matrix(rng, n, spec);
        const auto labels = random_labels(rng, n);
        const auto got = within_context(e, labels, spec);
        const auto want = brute_within_context(e);
        ASSERT_EQ(got.windows.size(), want.size());
        for (std::size_t w = 0; w < want.size(); ++w) {
            EXPECT_EQ(got.windows[w].start, want[w].first);
            EXPECT_NEAR(got.windows[w].score, want[w].second, 1e-12);
            std::size_t falls = 0;
            for (std::size_t t = 0; t < spec.length; ++t) falls += labels[want[w].first + t];
            EXPECT_EQ(got.windows[w].fall_frames, falls);
        }
    }
}

TEST(Scoring, WindowArrivalOrderDoesNotMatter) {
    std::mt19937_64 rng(9);
    const WindowSpec spec{8, 1};
    auto e = random_error_matrix(rng, 30, spec);
    const auto labels = random_labels(rng, 30);
    const auto a = cross_context(e, labels, spec);
    const auto wa = within_context(e, labels, spec);

    // reverse the window order
    ErrorMatrix r;
    r.length = e.length;
    for (std::size_t w = e.windows(); w-- > 0;) {
        r.starts.push_back(e.starts[w]);
        for (std::size_t t = 0; t < e.length; ++t) r.values.push_back(e.at(w, t));
    }
    EXPECT_EQ(cross_context(r, labels, spec), a);
    EXPECT_EQ(within_context(r, labels, spec), wa);
}

TEST(ScoreVideo, PerfectReconstructionScoresZero) {
    IdentityReconstructor identity;
    auto clip = constant_clip(12, 0.5f);
    clip.frame_label[5] = 1;
    const auto scores = score_video(identity, clip, WindowSpec{}, nullptr, 2);
    ASSERT_TRUE(scores);
    EXPECT_EQ(scores->frames.size(), 12u);
    EXPECT_EQ(scores->windows.windows.size(), 5u);
    for (const auto& f : scores->frames) {
        EXPECT_EQ(f.mu, 0.0);
        EXPECT_EQ(f.sigma, 0.0);
    }
    EXPECT_EQ(scores->frames[5].truth, 1);
    EXPECT_EQ(scores->video_id, "P01_SYNTHETIC_Day-1");
}

TEST(ScoreVideo, ShortClipIsSkipped) {
    IdentityReconstructor identity;
    ScoreSkip skip;
    EXPECT_FALSE(score_video(identity, constant_clip(7, 0.1f), WindowSpec{}, &skip));
    EXPECT_EQ(skip.video_id, "P01_SYNTHETIC_Day-1");
    EXPECT_NE(skip.reason.find("fewer than T=8"), std::string::npos);
}

TEST(ScoreFiles, CsvRoundTripIsExact) {
    std::mt19937_64 rng(2);
    const WindowSpec spec{8, 1};
    const auto e = random_error_matrix(rng, 25, spec);
    const auto labels = random_labels(rng, 25);
    const auto frames = cross_context(e, labels, spec);
    const auto windows = within_context(e, labels, spec);
    EXPECT_EQ(parse_frame_scores_csv(frame_scores_csv(frames)), frames);
    EXPECT_EQ(parse_window_scores_csv(window_scores_csv(windows), 8), windows);
}

TEST(ScoreFiles, WindowCsvHasTruthColumnsPerThreshold) {
    WindowScoreSeries s;
    s.length = 8;
    s.windows = {{0, 0.5, 3}};
    const auto csv = window_scores_csv(s);
    EXPECT_EQ(csv,
              "window_start,score,truth_k1,truth_k2,truth_k3,truth_k4,truth_k5,truth_k6,truth_k7,fall_frames\n"
              "0,0.5,1,1,1,0,0,0,0,3\n");
}

TEST(ScoreFiles, InconsistentTruthColumnIsRejected) {
    const std::string csv =
        "window_start,score,truth_k1,truth_k2,truth_k3,fall_frames\n"
        "0,0.5,1,1,0,3\n";
    EXPECT_THROW(parse_window_scores_csv(csv, 4), DataError);
}

TEST(ScoreFiles, DirectoryRoundTrip) {
    fallwatch::testing::TempDir dir("scoreset");
    IdentityReconstructor identity;
    ScoreSet set;
    auto clip = constant_clip(10, 0.3f);
    clip.frame_label[4] = 1;
    set.videos.push_back(*score_video(identity, clip, WindowSpec{}));
    set.skips.push_back({"P02_SYNTHETIC_Day-2", ModalityName::Synthetic, "too short"});
    write_score_set(set, dir.path());
    EXPECT_TRUE(std::filesystem::exists(dir / "P01_SYNTHETIC_Day-1_frames.csv"));
    EXPECT_TRUE(std::filesystem::exists(dir / "P01_SYNTHETIC_Day-1_windows.csv"));
    const auto back = read_score_set(dir.path());
    ASSERT_EQ(back.videos.size(), 1u);
    EXPECT_EQ(back.videos[0].frames, set.videos[0].frames);
    EXPECT_EQ(back.videos[0].windows, set.videos[0].windows);
    ASSERT_EQ(back.skips.size(), 1u);
    EXPECT_EQ(back.skips[0].reason, "too short");
}
