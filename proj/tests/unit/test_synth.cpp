#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "fallwatch/dataset.hpp"
#include "fallwatch/error.hpp"
#include "fallwatch/synth.hpp"
#include "oracles.hpp"

using namespace fallwatch;
namespace fs = std::filesystem;

namespace {

SceneConfig one_fall(std::uint64_t seed = 3) {
    SceneConfig cfg;
    cfg.seed = seed;
    cfg.n_frames = 60;
    cfg.blob.center_y = cfg.floor_y - cfg.blob.axis_y - 1.0;
    cfg.fall_events = {{20, 12}};
    return cfg;
}

SuiteConfig small_suite(std::uint64_t seed = 0) {
    SuiteConfig cfg;
    cfg.train_n = 2;
    cfg.test_n = 2;
    cfg.train_frames = 12;
    cfg.test_frames = 40;
    cfg.seed = seed;
    return cfg;
}

}  // namespace

TEST(Scene, ValidationRejectsBadEvents) {
    auto cfg = one_fall();
    cfg.fall_events = {{10, 12}, {15, 5}};
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg.fall_events = {{55, 12}};
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg.fall_events = {{5, 0}};
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg.fall_events = {{10, 12}, {22, 5}};
    EXPECT_NO_THROW(cfg.validate());
}

TEST(Scene, SameSeedSameClip) {
    const auto a = generate(one_fall(4)), b = generate(one_fall(4)), c = generate(one_fall(5));
    EXPECT_EQ(a.clip.frames, b.clip.frames);
    EXPECT_NE(a.clip.frames, c.clip.frames);
}

TEST(Scene, LabelsMatchEventsInclusive) {
    const auto s = generate(one_fall());
    ASSERT_EQ(s.spans.size(), 1u);
    EXPECT_EQ(s.spans[0], (LabelSpan{20, 31}));
    for (std::size_t i = 0; i < 60; ++i) EXPECT_EQ(s.clip.frame_label[i], i >= 20 && i <= 31) << i;
    EXPECT_NO_THROW(s.clip.validate());
}

TEST(Scene, FallShrinksHeightKeepsAreaAndRecovers) {
    const auto cfg = one_fall();
    const auto s = generate(cfg);
    const auto& before = s.blobs[19];
    const double area = before.axis_x * before.axis_y;
    for (std::size_t i = 0; i < 12; ++i) {
        const auto& b = s.blobs[20 + i];
        EXPECT_NEAR(b.axis_y, before.axis_y * (1.0 - 0.7 * static_cast<double>(i + 1) / 12.0), 1e-12);
        EXPECT_NEAR(b.axis_x * b.axis_y, area, 1e-9);
        EXPECT_LE(b.center_y + b.axis_y, cfg.floor_y + 1e-9);
    }
    EXPECT_EQ(s.blobs[32].axis_y, before.axis_y);
    EXPECT_EQ(s.blobs[32].axis_x, before.axis_x);
}

TEST(Scene, FramesLieOnTheEightBitGrid) {
    const auto s = generate(one_fall());
    for (const auto& f : s.clip.frames) {
        for (float v : f.pixels) {
            const float q = v * 255.0f;
            EXPECT_EQ(q, std::round(q));
        }
    }
}

TEST(Scene, DepthStyleHasHolesOnlyWhereItSaysSo) {
    auto cfg = one_fall();
    cfg.style = SceneStyle::DepthWithHoles;
    const auto s = generate(cfg, {"SYN001"}, ModalityName::ZedDepth);
    for (const auto& f : s.clip.frames) {
        const auto zeros = std::count(f.pixels.begin(), f.pixels.end(), 0.0f);
        EXPECT_GE(zeros, 1);
        EXPECT_LE(zeros, 4 * 9);
    }
    cfg.style = SceneStyle::Plain;
    cfg.noise_sigma = 0.0;
    for (const auto& f : generate(cfg).clip.frames) EXPECT_EQ(std::count(f.pixels.begin(), f.pixels.end(), 0.0f), 0);
}

TEST(Scene, JsonRoundTrip) {
    auto cfg = one_fall(99);
    cfg.style = SceneStyle::ThermalGradient;
    EXPECT_EQ(SceneConfig::from_json(nlohmann::json::parse(cfg.to_json().dump())), cfg);
    EXPECT_THROW(SceneConfig::from_json(nlohmann::json{{"seed", "x"}}), ConfigError);
    EXPECT_THROW(parse_scene_style("fog"), ConfigError);
}

TEST(Suite, WritesIngestLayoutAndLabels) {
    fallwatch::testing::TempDir dir("suite");
    const auto r = generate_suite(small_suite(), dir.path());
    EXPECT_EQ(r.clips, 4u);
    const auto cat = scan_dataset(dir.path());
    ASSERT_EQ(cat.entries.size(), 4u);
    for (const auto& e : cat.entries) EXPECT_EQ(e.modality, ModalityName::Synthetic);
    const auto labels = load_labels(r.labels);
    EXPECT_TRUE(labels.rejects.empty());
    EXPECT_EQ(labels.table.row_count(), 2u);
    for (const auto& [key, rows] : labels.table.rows) EXPECT_EQ(key.participant.substr(0, 2), "FD");

    const auto clip = load_clip(cat.entries.back());
    EXPECT_EQ(clip.frames.size(), 40u);
    EXPECT_EQ(clip.native_fps, 8.0);
}

TEST(Suite, ContentHashIsReproducible) {
    fallwatch::testing::TempDir a("suite-a"), b("suite-b");
    const auto ra = generate_suite(small_suite(1), a.path());
    EXPECT_EQ(generate_suite(small_suite(1), b.path()).content_hash, ra.content_hash);
    // regenerating in place replaces the previous suite
    EXPECT_EQ(generate_suite(small_suite(1), a.path()).content_hash, ra.content_hash);
    EXPECT_NE(generate_suite(small_suite(2), a.path()).content_hash, ra.content_hash);
}

TEST(Suite, RefusesForeignDirectory) {
    fallwatch::testing::TempDir dir("suite-foreign");
    std::ofstream(dir / "precious.txt") << "keep me";
    EXPECT_THROW(generate_suite(small_suite(), dir.path()), ConfigError);
    EXPECT_TRUE(fs::exists(dir / "precious.txt"));
}

TEST(Suite, StylesMapToModalities) {
    EXPECT_EQ(suite_modality(SceneStyle::Plain), ModalityName::Synthetic);
    EXPECT_EQ(suite_modality(SceneStyle::DepthWithHoles), ModalityName::ZedDepth);
    EXPECT_EQ(suite_modality(SceneStyle::ThermalGradient), ModalityName::Thermal);
    auto cfg = small_suite();
    cfg.test_frames = 50;
    cfg.falls_per_test = 2;
    EXPECT_THROW(cfg.validate(), ConfigError);
}
