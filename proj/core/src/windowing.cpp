#include "fallwatch/windowing.hpp"

#include <algorithm>

#include "fallwatch/error.hpp"

namespace fallwatch {

void WindowSpec::validate() const {
    if (length < 1) throw ConfigError("window length must be >= 1");
    if (stride < 1) throw ConfigError("window stride must be >= 1");
}

std::size_t window_count(std::size_t frame_count, const WindowSpec& spec) {
    spec.validate();
    if (frame_count < spec.length) return 0;
    return (frame_count - spec.length) / spec.stride + 1;
}

std::string clip_id(const CanonicalClip& clip) {
    return clip.trial.participant + "_" + std::string(to_string(clip.modality)) + "_" + clip.trial.short_name();
}

WindowBatch make_windows(const CanonicalClip& clip, const WindowSpec& spec) {
    return make_windows(clip, spec, 0, window_count(clip.size(), spec));
}

WindowBatch make_windows(const CanonicalClip& clip, const WindowSpec& spec, std::size_t first, std::size_t count) {
    const std::size_t total = window_count(clip.size(), spec);
    if (total == 0) {
        throw DataError("clip " + clip_id(clip) + " has " + std::to_string(clip.size()) + " frames, fewer than T=" +
                        std::to_string(spec.length));
    }
    if (first > total || count > total - first) throw DataError("window range out of bounds for " + clip_id(clip));

    WindowBatch batch;
    batch.length = spec.length;
    batch.height = clip.frames.front().height;
    batch.width = clip.frames.front().width;
    batch.clip_id = clip_id(clip);
    batch.volumes.reserve(count * batch.window_elements());
    for (std::size_t w = first; w < first + count; ++w) {
        const std::size_t start = w * spec.stride;
        batch.start_indices.push_back(start);
        for (std::size_t t = 0; t < spec.length; ++t) {
            const auto& px = clip.frames[start + t].pixels;
            batch.volumes.insert(batch.volumes.end(), px.begin(), px.end());
        }
    }
    return batch;
}

void WindowLabelRule::validate(const WindowSpec& spec) const {
    if (min_fall_frames < 1 || min_fall_frames > spec.length)
        throw ConfigError("fall threshold k must lie in [1, T]");
}

std::vector<std::size_t> window_fall_counts(std::span<const std::uint8_t> frame_label, const WindowSpec& spec) {
    const std::size_t n = window_count(frame_label.size(), spec);
    std::vector<std::size_t> counts(n, 0);
    for (std::size_t w = 0; w < n; ++w) {
        const std::size_t start = w * spec.stride;
        for (std::size_t t = 0; t < spec.length; ++t) counts[w] += frame_label[start + t] != 0 ? 1 : 0;
    }
    return counts;
}

std::vector<std::uint8_t> window_truth(std::span<const std::uint8_t> frame_label, const WindowSpec& spec,
                                       const WindowLabelRule& rule) {
    rule.validate(spec);
    const auto counts = window_fall_counts(frame_label, spec);
    std::vector<std::uint8_t> truth(counts.size());
    std::transform(counts.begin(), counts.end(), truth.begin(),
                   [&](std::size_t c) { return static_cast<std::uint8_t>(c >= rule.min_fall_frames); });
    return truth;
}

std::vector<std::size_t> coverage(std::size_t frame_index, std::size_t frame_count, const WindowSpec& spec) {
    const std::size_t n = window_count(frame_count, spec);
    std::vector<std::size_t> windows;
    if (n == 0 || frame_index >= frame_count) return windows;
    // start_w = w * stride; need start_w <= i < start_w + T
    const std::size_t lowest_start = frame_index + 1 > spec.length ? frame_index + 1 - spec.length : 0;
    std::size_t w = (lowest_start + spec.stride - 1) / spec.stride;
    for (; w < n && w * spec.stride <= frame_index; ++w) windows.push_back(w);
    return windows;
}

}  // namespace fallwatch
