#include <gtest/gtest.h>

#include <random>

#include "fallwatch/error.hpp"
#include "fallwatch/evaluation.hpp"
#include "oracles.hpp"

using namespace fallwatch;

namespace {

VideoScores video(std::string id, std::vector<double> mu, std::vector<std::uint8_t> truth,
                  ModalityName modality = ModalityName::Synthetic) {
    VideoScores v;
    v.video_id = std::move(id);
    v.modality = modality;
    for (std::size_t i = 0; i < mu.size(); ++i) v.frames.push_back({mu[i], 2.0 * mu[i], 1, truth[i]});
    return v;
}

VideoScores windowed(std::string id, std::vector<double> scores, std::vector<std::size_t> falls) {
    VideoScores v;
    v.video_id = std::move(id);
    v.windows.length = 8;
    for (std::size_t w = 0; w < scores.size(); ++w) v.windows.windows.push_back({w, scores[w], falls[w]});
    v.frames = {{0.1, 0.0, 1, 0}, {0.9, 0.0, 1, 1}};
    return v;
}

}  // namespace

TEST(AucRoc, MatchesPairwiseOracle) {
    std::mt19937_64 rng(1);
    for (int i = 0; i < 300; ++i) {
        const auto inst = fallwatch::testing::random_auc_instance(rng, 200);
        const auto got = auc_roc(inst.scores, inst.truths);
        ASSERT_TRUE(got);
        EXPECT_NEAR(*got, fallwatch::testing::brute_auc_roc(inst.scores, inst.truths), 1e-9);
    }
}

TEST(AucRoc, SmallCases) {
    const std::vector<std::uint8_t> y{0, 0, 1, 1};
    EXPECT_EQ(auc_roc(std::vector<double>{0.1, 0.2, 0.3, 0.4}, y), 1.0);
    EXPECT_EQ(auc_roc(std::vector<double>{0.4, 0.3, 0.2, 0.1}, y), 0.0);
    EXPECT_EQ(auc_roc(std::vector<double>{0.5, 0.5, 0.5, 0.5}, y), 0.5);
    EXPECT_EQ(auc_roc(std::vector<double>{0.1, 0.3, 0.2, 0.4}, y), 0.75);
}

TEST(AucRoc, UndefinedForOneClass) {
    EXPECT_FALSE(auc_roc(std::vector<double>{0.1, 0.2}, std::vector<std::uint8_t>{1, 1}));
    EXPECT_FALSE(auc_roc(std::vector<double>{0.1, 0.2}, std::vector<std::uint8_t>{0, 0}));
    EXPECT_FALSE(auc_pr(std::vector<double>{0.1, 0.2}, std::vector<std::uint8_t>{0, 0}));
}

TEST(AucRoc, InvariantUnderMonotoneTransform) {
    std::mt19937_64 rng(4);
    for (int i = 0; i < 50; ++i) {
        auto inst = fallwatch::testing::random_auc_instance(rng, 100);
        const auto a = auc_roc(inst.scores, inst.truths);
        for (auto& s : inst.scores) s = std::exp(3.0 * s) - 7.0;
        EXPECT_NEAR(*auc_roc(inst.scores, inst.truths), *a, 1e-12);
    }
}

TEST(AucRoc, TrapezoidOfRocCurveAgrees) {
    std::mt19937_64 rng(8);
    for (int i = 0; i < 100; ++i) {
        const auto inst = fallwatch::testing::random_auc_instance(rng, 150);
        const auto curve = roc_curve(inst.scores, inst.truths);
        EXPECT_EQ(curve.front().fpr, 0.0);
        EXPECT_EQ(curve.back().tpr, 1.0);
        EXPECT_NEAR(trapezoid_area(curve), *auc_roc(inst.scores, inst.truths), 1e-9);
    }
}

TEST(AucPr, EqualsBruteAveragePrecisionExactly) {
    std::mt19937_64 rng(2);
    for (int i = 0; i < 300; ++i) {
        const auto inst = fallwatch::testing::random_auc_instance(rng, 200);
        EXPECT_EQ(*auc_pr(inst.scores, inst.truths),
                  fallwatch::testing::brute_average_precision(inst.scores, inst.truths));
    }
}

TEST(AucPr, HandComputedCases) {
    // ranking 1,0,1: precision 1 at the first positive, 2/3 at the second
    EXPECT_NEAR(*auc_pr(std::vector<double>{0.9, 0.8, 0.7}, std::vector<std::uint8_t>{1, 0, 1}), (1.0 + 2.0 / 3.0) / 2,
                1e-15);
    // a fully tied set scores its prevalence
    EXPECT_NEAR(*auc_pr(std::vector<double>{1, 1, 1, 1}, std::vector<std::uint8_t>{1, 0, 0, 0}), 0.25, 1e-15);
}

TEST(MeanStd, PopulationDefinition) {
    const auto m = mean_std(std::vector<double>{1.0, 2.0, 3.0, 4.0});
    ASSERT_TRUE(m);
    EXPECT_DOUBLE_EQ(m->mean, 2.5);
    EXPECT_DOUBLE_EQ(m->std, std::sqrt(1.25));
    EXPECT_EQ(m->count, 4u);
    EXPECT_FALSE(mean_std(std::vector<double>{}));
}

TEST(PerVideo, SkipsSingleClassVideos) {
    std::vector<VideoScores> vids{
        video("a", {0.1, 0.2, 0.8, 0.9}, {0, 0, 1, 1}),
        video("b", {0.1, 0.2, 0.3}, {0, 0, 0}),
        video("c", {0.9, 0.1, 0.5, 0.4}, {0, 1, 0, 1}),
    };
    const auto r = per_video_eval(vids);
    ASSERT_EQ(r.videos.size(), 2u);
    EXPECT_EQ(r.skipped, std::vector<std::string>{"b"});
    EXPECT_EQ(r.videos[0].mu.roc, 1.0);
    EXPECT_EQ(r.videos[1].mu.roc, 0.0);
    EXPECT_DOUBLE_EQ(r.mu.roc->mean, 0.5);
    EXPECT_DOUBLE_EQ(r.mu.roc->std, 0.5);
}

TEST(PerVideo, NothingEvaluableThrows) {
    std::vector<VideoScores> vids{video("b", {0.1, 0.2}, {0, 0})};
    EXPECT_THROW(per_video_eval(vids), DataError);
}

TEST(Global, DisjointRangesSeparateWithinButNotAcross) {
    std::vector<VideoScores> vids{
        video("low", {0.1, 0.2, 0.3, 0.4}, {0, 0, 1, 1}),
        video("high", {0.5, 0.6, 0.7, 0.8}, {0, 0, 1, 1}),
    };
    EXPECT_EQ(per_video_eval(vids).mu.roc->mean, 1.0);
    const auto g = global_eval(vids);
    // positives 0.3,0.4,0.7,0.8 vs negatives 0.1,0.2,0.5,0.6: 12 of 16 pairs concordant
    EXPECT_DOUBLE_EQ(*g.mu.roc, 0.75);
}

TEST(KSweep, BaselineAndSkips) {
    std::vector<VideoScores> vids{
        windowed("a", {0.1, 0.5, 0.9, 0.2}, {0, 2, 5, 1}),
        windowed("b", {0.3, 0.4}, {0, 0}),
    };
    const std::vector<std::size_t> ks{1, 2, 5, 6};
    const auto rows = k_sweep(vids, ks);
    ASSERT_EQ(rows.size(), 4u);
    EXPECT_EQ(rows[0].fall_windows, 3u);
    EXPECT_EQ(rows[0].total_windows, 6u);
    EXPECT_DOUBLE_EQ(rows[0].baseline, 0.5);
    EXPECT_EQ(rows[0].videos_evaluated, 1u);
    EXPECT_EQ(rows[0].videos_skipped, 1u);
    EXPECT_DOUBLE_EQ(rows[2].roc->mean, 1.0);
    EXPECT_EQ(rows[3].fall_windows, 0u);
    EXPECT_FALSE(rows[3].roc);
    for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_LE(rows[i].baseline, rows[i - 1].baseline);
}

TEST(KSweep, RejectsThresholdOutsideWindow) {
    std::vector<VideoScores> vids{windowed("a", {0.1, 0.5}, {0, 2})};
    EXPECT_THROW(k_sweep(vids, std::vector<std::size_t>{0}), ConfigError);
    EXPECT_THROW(k_sweep(vids, std::vector<std::size_t>{8}), ConfigError);
}

TEST(Evaluate, GroupsByModalityAndDropsUnevaluable) {
    ScoreSet set;
    auto a = windowed("a", {0.1, 0.9}, {0, 3});
    a.modality = ModalityName::Thermal;
    auto b = windowed("b", {0.1, 0.9}, {0, 3});
    b.modality = ModalityName::IpIr;
    b.frames = {{0.1, 0.0, 1, 0}, {0.2, 0.0, 1, 0}};
    set.videos = {a, b};
    set.skips.push_back({"c", ModalityName::Thermal, "short"});
    std::vector<std::string> dropped;
    const auto report = evaluate(set, {}, &dropped);
    ASSERT_EQ(report.modalities.size(), 1u);
    EXPECT_EQ(report.modalities[0].modality, ModalityName::Thermal);
    EXPECT_EQ(report.modalities[0].counts.videos_skipped_short, 1u);
    EXPECT_EQ(report.modalities[0].counts.fall_frames, 1u);
    EXPECT_EQ(dropped.size(), 1u);
}

TEST(Evaluate, FamilySelectionClearsTheOther) {
    ScoreSet set;
    set.videos = {windowed("a", {0.1, 0.9}, {0, 3})};
    const auto report = evaluate(set, {FamilySelection::Mu, {1}});
    EXPECT_TRUE(report.modalities[0].global.mu.roc);
    EXPECT_FALSE(report.modalities[0].global.sigma.roc);
}

TEST(Evaluate, JsonRoundTripAfterRounding) {
    ScoreSet set;
    set.videos = {windowed("a", {0.123456789, 0.987654321, 0.5}, {0, 3, 1}),
                  windowed("b", {0.3, 0.2, 0.7}, {4, 0, 2})};
    const auto report = evaluate(set);
    const auto j = report.to_json();
    const auto back = EvalReport::from_json(nlohmann::json::parse(j.dump()));
    EXPECT_EQ(back.to_json(), j);
    EXPECT_EQ(back.ks, report.ks);
}

TEST(Format, SixSignificantDigits) {
    EXPECT_EQ(round6(0.123456789), 0.123457);
    EXPECT_EQ(format6(0.123456789), "0.123457");
    EXPECT_EQ(format6(std::nullopt), "NA");
    EXPECT_EQ(parse_family_selection("sigma"), FamilySelection::Sigma);
    EXPECT_THROW(parse_family_selection("median"), ConfigError);
}
