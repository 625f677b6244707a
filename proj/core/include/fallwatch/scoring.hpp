#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fallwatch/autoencoder.hpp"
#include "fallwatch/dataset.hpp"
#include "fallwatch/windowing.hpp"

namespace fallwatch {

/// Per-frame reconstruction errors e(w, t), windows in any order.
struct ErrorMatrix {
    std::size_t length = 0;  // T
    std::vector<std::size_t> starts;
    std::vector<double> values;  // values[w * T + t]

    std::size_t windows() const noexcept { return starts.size(); }
    double at(std::size_t w, std::size_t t) const { return values[w * length + t]; }

    static ErrorMatrix from(const Reconstruction& r) { return {r.length, r.start_indices, r.frame_errors}; }
};

struct FrameScore {
    double mu = 0.0;     // mean error over covering windows
    double sigma = 0.0;  // population standard deviation of the same set
    std::size_t n_windows = 0;
    std::uint8_t truth = 0;

    friend bool operator==(const FrameScore&, const FrameScore&) = default;
};

struct WindowScore {
    std::size_t start = 0;
    double score = 0.0;
    std::size_t fall_frames = 0;  // truth for threshold k is fall_frames >= k

    bool truth(std::size_t k) const noexcept { return fall_frames >= k; }
    friend bool operator==(const WindowScore&, const WindowScore&) = default;
};

using FrameScoreSeries = std::vector<FrameScore>;

struct WindowScoreSeries {
    std::size_t length = 0;  // T
    std::vector<WindowScore> windows;  // ascending start

    std::vector<std::uint8_t> truth(std::size_t k) const;
    std::vector<double> scores() const;
    friend bool operator==(const WindowScoreSeries&, const WindowScoreSeries&) = default;
};

/// Frame i gets the mean and population std of {e(w, i - start_w) : w covers i}.
/// Window starts must be exactly those `make_windows` produces for `spec`.
FrameScoreSeries cross_context(const ErrorMatrix& errors, std::span<const std::uint8_t> frame_label,
                               const WindowSpec& spec);

/// score(w) = mean_t e(w, t), in ascending start order.
WindowScoreSeries within_context(const ErrorMatrix& errors, std::span<const std::uint8_t> frame_label,
                                 const WindowSpec& spec);

struct VideoScores {
    std::string video_id;
    ModalityName modality = ModalityName::Synthetic;
    FrameScoreSeries frames;
    WindowScoreSeries windows;
};

struct ScoreSkip {
    std::string video_id;
    ModalityName modality = ModalityName::Synthetic;
    std::string reason;
};

/// make_windows -> reconstruct -> both aggregations. Windows go through the model in
/// chunks of `chunk` to bound memory. Returns nullopt (and fills `skip`) when the clip
/// is shorter than T.
std::optional<VideoScores> score_video(const Reconstructor& model, const CanonicalClip& clip, const WindowSpec& spec,
                                       ScoreSkip* skip = nullptr, std::size_t chunk = 64);

// ---------------------------------------------------------------------------
// Score files
//
//   <dir>/index.json                 videos with modality and file names
//   <dir>/<video>_frames.csv          frame_index,mu,sigma,n_windows,truth
//   <dir>/<video>_windows.csv         window_start,score,truth_k1..truth_k{T-1},fall_frames
//   <dir>/skips.json                  videos that could not be scored
// ---------------------------------------------------------------------------

struct ScoreSet {
    std::vector<VideoScores> videos;
    std::vector<ScoreSkip> skips;
};

std::string frame_scores_csv(const FrameScoreSeries& series);
std::string window_scores_csv(const WindowScoreSeries& series);
FrameScoreSeries parse_frame_scores_csv(std::string_view text);
/// Throws DataError if a truth column disagrees with the fall_frames column.
WindowScoreSeries parse_window_scores_csv(std::string_view text, std::size_t window_length);

void write_score_set(const ScoreSet& set, const std::filesystem::path& dir);
ScoreSet read_score_set(const std::filesystem::path& dir);

}  // namespace fallwatch
