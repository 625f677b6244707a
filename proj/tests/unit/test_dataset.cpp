#include <gtest/gtest.h>

#include <fstream>

#include <opencv2/imgcodecs.hpp>

#include "fallwatch/dataset.hpp"
#include "fallwatch/error.hpp"
#include "oracles.hpp"

using namespace fallwatch;
namespace fs = std::filesystem;

namespace {

void write_png(const fs::path& path, const cv::Mat& image) {
    fs::create_directories(path.parent_path());
    ASSERT_TRUE(cv::imwrite(path.string(), image));
}

void write_text(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path());
    std::ofstream(path) << text;
}

}  // namespace

TEST(Modality, LooseSpellings) {
    EXPECT_EQ(parse_modality("IP"), ModalityName::IpIr);
    EXPECT_EQ(parse_modality("Orbbec IR"), ModalityName::OrbbecIr);
    EXPECT_EQ(parse_modality("zed-depth"), ModalityName::ZedDepth);
    EXPECT_EQ(parse_modality("ZED_RGB"), ModalityName::ZedRgb);
    EXPECT_EQ(parse_modality("FLIR"), ModalityName::Thermal);
    EXPECT_FALSE(parse_modality("lidar"));
    EXPECT_EQ(to_string(ModalityName::ZedDepth), "ZED_DEPTH");
    EXPECT_EQ(Modality::of(ModalityName::IpIr).native_fps, 20.0);
    EXPECT_TRUE(Modality::of(ModalityName::OrbbecDepth).is_depth);
}

TEST(TrialName, Variants) {
    const std::pair expected{SessionCondition::Day, 1};
    for (const char* s : {"Day-Trial 1", "Day - Trial 1", "day-trial1", "Day-1", "DAY 1"}) EXPECT_EQ(parse_trial_name(s), expected) << s;
    EXPECT_EQ(parse_trial_name("Night-Trial 5"), (std::pair{SessionCondition::Night, 5}));
    EXPECT_FALSE(parse_trial_name("Day-Trial 6"));
    EXPECT_FALSE(parse_trial_name("Evening-1"));
    EXPECT_EQ((TrialId{"P1", SessionCondition::Night, 2}.folder_name()), "Night-Trial 2");
}

TEST(Labels, ParseWithRejectsAndMissingBounds) {
    const std::string text =
        "\xEF\xBB\xBFparticipant,modality,trial,start_frame,end_frame\r\n"
        "FD001,IP,Day-Trial 1,10,20\r\n"
        "FD001,IP,Day-Trial 1,40,\r\n"
        "FD001,lidar,Day-1,1,2\n"
        "FD002,FLIR,Night 3,9,4\n"
        "FD002,FLIR,Night 3,x,4\n"
        "FD002,FLIR,Night 3,30,35\n";
    const auto r = parse_labels(text);
    EXPECT_EQ(r.table.row_count(), 3u);
    ASSERT_EQ(r.rejects.size(), 3u);
    EXPECT_EQ(r.rejects[0].line, 4u);
    EXPECT_EQ(r.rejects[1].line, 5u);
    EXPECT_EQ(r.rejects[2].line, 6u);
    std::size_t unusable = 0;
    const auto spans = r.table.spans({"FD001", ModalityName::IpIr, SessionCondition::Day, 1}, &unusable);
    EXPECT_EQ(spans, (std::vector<LabelSpan>{{10, 20}}));
    EXPECT_EQ(unusable, 1u);
    EXPECT_TRUE(r.table.has_falls({"FD002", ModalityName::Thermal, SessionCondition::Night, 3}));
}

TEST(Labels, HeaderRequired) {
    EXPECT_THROW(parse_labels(""), DataError);
    EXPECT_THROW(parse_labels("participant,modality,trial\n"), DataError);
}

TEST(Labels, SerializeRoundTrip) {
    const auto r = parse_labels(
        "participant,modality,trial,start_frame,end_frame\n"
        "FD001,ZED_DEPTH,Day-2,5,9\n"
        "FD003,IP_IR,Night-1,,7\n");
    EXPECT_EQ(parse_labels(serialize_labels(r.table)).table, r.table);
}

TEST(Labels, FrameLabelsInclusive) {
    EXPECT_EQ(frame_labels(6, {{1, 2}, {4, 4}}), (std::vector<std::uint8_t>{0, 1, 1, 0, 1, 0}));
    EXPECT_THROW(frame_labels(6, {{4, 6}}), DataError);
}

TEST(Catalog, ScansLayoutAndSkipsStrayFolders) {
    fallwatch::testing::TempDir root("scan");
    const cv::Mat gray(4, 6, CV_8UC1, cv::Scalar(7));
    write_png(root / "FD001/IP/Day-Trial 1/0.png", gray);
    write_png(root / "FD001/IP/Day-Trial 1/1.png", gray);
    write_png(root / "FD001/ZED/Depth/Night-Trial 2/000000.png", gray);
    write_png(root / "FD001/FLIR/FLIR 279/Day-Trial 3/0.png", gray);
    write_png(root / "FD001/IP/Brunch/0.png", gray);
    write_text(root / "FD001/Empatica/data.csv", "x\n");
    write_text(root / "notes/readme.txt", "x\n");

    const auto cat = scan_dataset(root.path());
    ASSERT_EQ(cat.entries.size(), 3u);
    EXPECT_EQ(cat.entries[0].modality, ModalityName::IpIr);
    EXPECT_EQ(cat.entries[1].modality, ModalityName::ZedDepth);
    EXPECT_EQ(cat.entries[2].modality, ModalityName::Thermal);
    EXPECT_EQ(cat.entries[2].stream, "FLIR 279");
    EXPECT_EQ(cat.skips.size(), 2u);
    const auto jsonl = cat.to_jsonl();
    EXPECT_EQ(std::count(jsonl.begin(), jsonl.end(), '\n'), 3);
}

TEST(Catalog, MissingRootIsAConfigError) {
    EXPECT_THROW(scan_dataset("/nonexistent/fallwatch"), ConfigError);
}

TEST(LoadClip, ColourToLumaAndDepth16) {
    fallwatch::testing::TempDir root("load");
    cv::Mat bgr(2, 2, CV_8UC3, cv::Scalar(10, 20, 30));  // B, G, R
    write_png(root / "rgb/0.png", bgr);
    write_png(root / "rgb/1.png", bgr);
    write_text(root / "rgb/meta.json", R"({"fps": 12.5})");
    const auto clip = load_clip({LocatorKind::FrameDirectory, root / "rgb"}, {"P1"}, ModalityName::ZedRgb);
    ASSERT_EQ(clip.frames.size(), 2u);
    EXPECT_NEAR(clip.frames[0].at(1, 1), kLumaRed * 30 + kLumaGreen * 20 + kLumaBlue * 10, 1e-4);
    EXPECT_EQ(clip.native_fps, 12.5);
    EXPECT_EQ(clip.max_value, 255.0f);

    cv::Mat depth(3, 3, CV_16UC1, cv::Scalar(40000));
    write_png(root / "depth/0.png", depth);
    const auto d = load_clip({LocatorKind::FrameDirectory, root / "depth"}, {"P1"}, ModalityName::OrbbecDepth);
    EXPECT_EQ(d.max_value, 65535.0f);
    EXPECT_EQ(d.frames[0].at(2, 2), 40000.0f);
    EXPECT_EQ(d.native_fps, 30.0);
}

TEST(LoadClip, GapsAndEmptyDirectoriesFail) {
    fallwatch::testing::TempDir root("gaps");
    const cv::Mat gray(2, 2, CV_8UC1, cv::Scalar(1));
    write_png(root / "a/0.png", gray);
    write_png(root / "a/2.png", gray);
    fs::create_directories(root / "b");
    try {
        load_clip({LocatorKind::FrameDirectory, root / "a"}, {"P1"}, ModalityName::IpIr);
        FAIL();
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("missing frame index 1"), std::string::npos);
    }
    EXPECT_THROW(load_clip({LocatorKind::FrameDirectory, root / "b"}, {"P1"}, ModalityName::IpIr), DataError);
}
