#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fallwatch/preprocess.hpp"

namespace fallwatch {

struct WindowSpec {
    std::size_t length = 8;  // T
    std::size_t stride = 1;

    void validate() const;
};

/// Number of windows over `frame_count` frames; zero when the clip is shorter than T.
/// Tail frames that do not complete a stride step are dropped.
std::size_t window_count(std::size_t frame_count, const WindowSpec& spec);

/// Contiguous B x 1 x T x H x W volume, float32.
struct WindowBatch {
    std::size_t length = 0;  // T
    int height = 0;
    int width = 0;
    std::vector<std::size_t> start_indices;
    std::vector<float> volumes;
    std::string clip_id;

    std::size_t batch_size() const noexcept { return start_indices.size(); }
    std::size_t frame_elements() const noexcept { return static_cast<std::size_t>(height) * static_cast<std::size_t>(width); }
    std::size_t window_elements() const noexcept { return length * frame_elements(); }

    std::span<const float> window(std::size_t b) const {
        return std::span<const float>(volumes).subspan(b * window_elements(), window_elements());
    }
    std::span<const float> frame(std::size_t b, std::size_t t) const {
        return window(b).subspan(t * frame_elements(), frame_elements());
    }
};

std::string clip_id(const CanonicalClip& clip);

/// Throws DataError naming the clip when it has fewer than T frames.
WindowBatch make_windows(const CanonicalClip& clip, const WindowSpec& spec);

/// Windows [first, first + count) of the full window sequence, for chunked processing.
WindowBatch make_windows(const CanonicalClip& clip, const WindowSpec& spec, std::size_t first, std::size_t count);

struct WindowLabelRule {
    std::size_t min_fall_frames = 4;  // k

    void validate(const WindowSpec& spec) const;
};

/// Window w is 1 iff at least k of its frames are labelled as falls.
std::vector<std::uint8_t> window_truth(std::span<const std::uint8_t> frame_label, const WindowSpec& spec,
                                       const WindowLabelRule& rule);

/// Number of labelled frames in each window.
std::vector<std::size_t> window_fall_counts(std::span<const std::uint8_t> frame_label, const WindowSpec& spec);

/// Indices (not start frames) of the windows containing frame i, ascending.
std::vector<std::size_t> coverage(std::size_t frame_index, std::size_t frame_count, const WindowSpec& spec);

}  // namespace fallwatch
