#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fallwatch/frame.hpp"

namespace fallwatch {

enum class ModalityName { IpIr, OrbbecIr, OrbbecDepth, ZedDepth, ZedRgb, Thermal, Synthetic };

struct Modality {
    ModalityName name = ModalityName::Synthetic;
    double native_fps = 8.0;
    bool is_depth = false;

    /// Device defaults: IP 20 fps, ZED/Orbbec 30 fps, FLIR 8.7 fps, synthetic 8 fps.
    static Modality of(ModalityName name);

    friend bool operator==(const Modality&, const Modality&) = default;
};

/// Canonical token, e.g. "IP_IR", "ZED_DEPTH".
std::string_view to_string(ModalityName name);

/// Accepts canonical tokens and the loose spellings used in label sheets
/// ("IP", "Orbbec IR", "zed-depth", "FLIR"). Case, spaces, '-' and '_' are ignored.
std::optional<ModalityName> parse_modality(std::string_view text);

enum class SessionCondition { Day, Night };

struct TrialId {
    std::string participant;
    SessionCondition condition = SessionCondition::Day;
    int trial_index = 1;  // 1..5

    /// "Day-Trial 1" style name used on disk.
    std::string folder_name() const;
    /// Compact "Day-1" style used in label files.
    std::string short_name() const;

    friend auto operator<=>(const TrialId&, const TrialId&) = default;
};

/// Parses trial folder names and label-sheet trial cells. Whitespace is stripped and
/// case folded first, so "Day - Trial 1", "day-trial1", "Day-1" and "DAY 1" all parse.
std::optional<std::pair<SessionCondition, int>> parse_trial_name(std::string_view text);

struct VideoClip {
    TrialId trial;
    Modality modality;
    std::vector<Frame> frames;
    double native_fps = 8.0;
    /// Full-scale intensity of the stored frames (255 for 8-bit, 65535 for 16-bit).
    float max_value = 255.0f;
};

struct LabelSpan {
    std::size_t start_frame = 0;
    std::size_t end_frame = 0;

    friend bool operator==(const LabelSpan&, const LabelSpan&) = default;
};

/// A row from the label sheet. Either bound may be absent when the labeller could not
/// see it; such rows stay in the table but are excluded from frame labelling.
struct LabelRow {
    std::optional<std::size_t> start_frame;
    std::optional<std::size_t> end_frame;

    bool usable() const noexcept { return start_frame.has_value() && end_frame.has_value(); }
    std::optional<LabelSpan> span() const;

    friend bool operator==(const LabelRow&, const LabelRow&) = default;
};

struct LabelKey {
    std::string participant;
    ModalityName modality = ModalityName::Synthetic;
    SessionCondition condition = SessionCondition::Day;
    int trial_index = 1;

    friend auto operator<=>(const LabelKey&, const LabelKey&) = default;
};

LabelKey label_key(const TrialId& trial, ModalityName modality);

struct LabelTable {
    std::map<LabelKey, std::vector<LabelRow>> rows;

    /// Usable spans for a key; `unusable` receives the count of rows missing a bound.
    std::vector<LabelSpan> spans(const LabelKey& key, std::size_t* unusable = nullptr) const;
    bool has_falls(const LabelKey& key) const;
    std::size_t row_count() const;

    friend bool operator==(const LabelTable&, const LabelTable&) = default;
};

struct LabelReject {
    std::size_t line = 0;  // 1-based line in the file, header is line 1
    std::string reason;
};

struct LabelLoadResult {
    LabelTable table;
    std::vector<LabelReject> rejects;
};

/// Label CSV: UTF-8, header row, comma-delimited, columns
/// participant,modality,trial,start_frame,end_frame. Empty bound cells are allowed.
LabelLoadResult load_labels(const std::filesystem::path& path);
LabelLoadResult parse_labels(std::string_view text);
std::string serialize_labels(const LabelTable& table);
void write_labels(const LabelTable& table, const std::filesystem::path& path);

/// Element i is 1 iff i lies in any inclusive span. Throws DataError on a span
/// reaching past `frame_count`.
std::vector<std::uint8_t> frame_labels(std::size_t frame_count, const std::vector<LabelSpan>& spans);
std::vector<std::uint8_t> frame_labels(const VideoClip& clip, const std::vector<LabelSpan>& spans);

// ---------------------------------------------------------------------------
// On-disk layout
//
//   <root>/<participant>/IP/<trial>/
//   <root>/<participant>/Orbbec/{IR,Depth}/<trial>/
//   <root>/<participant>/ZED/{Depth,RGB}/<trial>/
//   <root>/<participant>/FLIR/[<unit>/]<trial>/
//   <root>/<participant>/SYNTHETIC/<trial>/
//
// <trial> is either a directory of numerically named frames (optionally with a
// meta.json declaring {"fps": ...}), a directory holding one video file, or a
// video file whose stem is the trial name.
// ---------------------------------------------------------------------------

enum class LocatorKind { FrameDirectory, VideoFile };

struct ClipLocator {
    LocatorKind kind = LocatorKind::FrameDirectory;
    std::filesystem::path path;
};

struct CatalogEntry {
    TrialId trial;
    ModalityName modality = ModalityName::Synthetic;
    std::string stream;  // camera sub-unit, e.g. "FLIR 279"; empty when there is one
    ClipLocator locator;
};

struct ScanSkip {
    std::filesystem::path path;
    std::string reason;
};

struct Catalog {
    std::vector<CatalogEntry> entries;  // sorted by (participant, modality, trial, stream)
    std::vector<ScanSkip> skips;

    /// JSON lines, one entry per line.
    std::string to_jsonl() const;
};

/// Throws ConfigError when `root` is missing or not a directory.
Catalog scan_dataset(const std::filesystem::path& root);

/// Frames come back single-channel; colour input is converted with the BT.601 luma
/// weights. Throws DataError naming the frame on gaps, decode failures or empty input.
VideoClip load_clip(const CatalogEntry& entry);
VideoClip load_clip(const ClipLocator& locator, const TrialId& trial, ModalityName modality);

inline constexpr float kLumaRed = 0.299f;
inline constexpr float kLumaGreen = 0.587f;
inline constexpr float kLumaBlue = 0.114f;

}  // namespace fallwatch
