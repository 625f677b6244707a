#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fallwatch/dataset.hpp"
#include "fallwatch/preprocess.hpp"

namespace fallwatch {

enum class SceneStyle { Plain, DepthWithHoles, ThermalGradient };

std::string_view to_string(SceneStyle style);
/// "plain", "depth_with_holes" or "thermal_gradient"; throws ConfigError otherwise.
SceneStyle parse_scene_style(std::string_view text);

struct Ellipse {
    double center_x = 32.0;
    double center_y = 34.0;
    double axis_x = 5.0;   // half-width, pixels
    double axis_y = 13.0;  // half-height, pixels
    double intensity = 0.8;

    friend bool operator==(const Ellipse&, const Ellipse&) = default;
};

struct FallEvent {
    std::size_t start_frame = 0;
    std::size_t duration = 12;

    friend bool operator==(const FallEvent&, const FallEvent&) = default;
};

struct SceneConfig {
    std::uint64_t seed = 0;
    std::size_t n_frames = 96;
    Ellipse blob;
    double walk = 0.6;         // pixels per frame
    double floor_y = 58.0;     // row the blob falls toward
    std::vector<FallEvent> fall_events;
    double noise_sigma = 0.02;
    SceneStyle style = SceneStyle::Plain;

    /// Throws ConfigError for overlapping or out-of-range fall events and bad geometry.
    void validate() const;

    nlohmann::ordered_json to_json() const;
    static SceneConfig from_json(const nlohmann::json& j);

    friend bool operator==(const SceneConfig&, const SceneConfig&) = default;
};

struct BlobState {
    double center_x = 0.0;
    double center_y = 0.0;
    double axis_x = 0.0;
    double axis_y = 0.0;
};

struct SyntheticClip {
    CanonicalClip clip;            // 64x64, 8 fps, values on the 8-bit grid k/255
    std::vector<LabelSpan> spans;  // inclusive, one per fall event
    std::vector<BlobState> blobs;  // per frame
};

/// During a fall event of duration D, frame i (0-based within the event) has its
/// vertical axis scaled by 1 - 0.7 (i + 1) / D and moves toward the floor at three
/// times the walk speed, while the horizontal axis widens to keep the area constant.
/// The blob stands back up at its pre-fall pose afterwards.
SyntheticClip generate(const SceneConfig& config, const TrialId& trial = {"SYN001", SessionCondition::Day, 1},
                       ModalityName modality = ModalityName::Synthetic);

struct SuiteConfig {
    std::size_t train_n = 20;
    std::size_t test_n = 10;
    std::size_t falls_per_test = 1;
    std::uint64_t seed = 0;
    std::size_t train_frames = 64;
    std::size_t test_frames = 96;
    SceneStyle style = SceneStyle::Plain;

    void validate() const;
};

struct SuiteResult {
    std::filesystem::path manifest;
    std::filesystem::path labels;
    std::size_t clips = 0;
    std::string content_hash;  // sha256 over the whole output tree
};

/// Modality written for a style: plain -> SYNTHETIC, depth_with_holes -> ZED depth,
/// thermal_gradient -> FLIR.
ModalityName suite_modality(SceneStyle style);

/// Writes train clips (participants AD001.., fall-free) and test clips (FD001.., each
/// with `falls_per_test` falls) as 8-bit PNG frame directories in the ingest layout,
/// plus labels.csv and manifest.json holding every SceneConfig. Ten trials per
/// participant (Day 1-5, Night 1-5). Train and test walk speeds come from different
/// ranges.
SuiteResult generate_suite(const SuiteConfig& config, const std::filesystem::path& out);

}  // namespace fallwatch
