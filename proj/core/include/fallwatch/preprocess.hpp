#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fallwatch/dataset.hpp"
#include "fallwatch/frame.hpp"

namespace fallwatch {

inline constexpr int kCanonicalSize = 64;
inline constexpr double kCanonicalFps = 8.0;

/// Bumped whenever a stage changes numerically; part of the cache key.
inline constexpr int kPipelineVersion = 1;

struct CanonicalClip {
    std::vector<Frame> frames;  // 64x64, values in [0,1]
    double fps = kCanonicalFps;
    std::vector<std::uint8_t> frame_label;
    TrialId trial;
    ModalityName modality = ModalityName::Synthetic;

    std::size_t size() const noexcept { return frames.size(); }

    /// Throws DataError describing the first violated invariant.
    void validate() const;
};

/// Bilinear resampling with pixel-centre alignment. Output values stay within the
/// input range.
Frame resize_frame(const Frame& frame, int height = kCanonicalSize, int width = kCanonicalSize);

struct Resampled {
    std::vector<Frame> frames;
    std::vector<std::uint8_t> frame_label;
};

/// Output frame j is input frame floor(j * native / target) for
/// j < round(N * target / native). Frames are duplicated or dropped, never blended.
std::vector<std::size_t> resample_indices(std::size_t frame_count, double native_fps, double target_fps = kCanonicalFps);
Resampled resample_fps(const std::vector<Frame>& frames, double native_fps, const std::vector<std::uint8_t>& frame_label,
                       double target_fps = kCanonicalFps);

struct InpaintOptions {
    double tolerance = 1e-4;  // stop when the largest per-sweep change falls below this
    int max_iterations = 500;
};

/// Fills exactly-zero pixels by harmonic (Laplace) diffusion with the non-zero pixels
/// held fixed. Gauss-Seidel sweeps in row-major order over the hole pixels.
Frame inpaint_depth(const Frame& frame, const InpaintOptions& options = {});

/// out = in / max_value. Throws DataError if any value lies outside [0, max_value].
Frame normalize(const Frame& frame, float max_value);

struct CanonicalizeOptions {
    int size = kCanonicalSize;
    double target_fps = kCanonicalFps;
    InpaintOptions inpaint;
};

/// grayscale (at load) -> inpaint (depth only) -> resize -> resample -> normalize.
/// `frame_label` is in native-fps frame index space and is remapped by resampling.
CanonicalClip canonicalize(const VideoClip& clip, const std::vector<std::uint8_t>& frame_label,
                           const CanonicalizeOptions& options = {});

/// Canonical clips cached on disk as <key>.bin (float32 little-endian frames) plus
/// <key>.json (shape, fps, labels, provenance, pipeline version).
class CanonicalCache {
public:
    explicit CanonicalCache(std::filesystem::path dir);

    /// Content hash of the raw frames, labels and pipeline parameters.
    static std::string key(const VideoClip& clip, const std::vector<std::uint8_t>& frame_label,
                           const CanonicalizeOptions& options);

    std::optional<CanonicalClip> load(const std::string& key) const;
    void store(const std::string& key, const CanonicalClip& clip) const;

    /// Returns the cached clip or computes and stores it.
    CanonicalClip get_or_compute(const VideoClip& clip, const std::vector<std::uint8_t>& frame_label,
                                 const CanonicalizeOptions& options = {}) const;

private:
    std::filesystem::path dir_;
};

}  // namespace fallwatch
