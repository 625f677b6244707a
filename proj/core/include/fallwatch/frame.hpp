#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace fallwatch {

/// Single-channel image, row-major.
struct Frame {
    int height = 0;
    int width = 0;
    std::vector<float> pixels;

    Frame() = default;
    Frame(int h, int w, float fill = 0.0f)
        : height(h), width(w), pixels(static_cast<std::size_t>(h) * static_cast<std::size_t>(w), fill) {}

    std::size_t size() const noexcept { return pixels.size(); }
    float& at(int row, int col) { return pixels[static_cast<std::size_t>(row) * width + col]; }
    float at(int row, int col) const { return pixels[static_cast<std::size_t>(row) * width + col]; }
    std::span<const float> view() const noexcept { return pixels; }

    friend bool operator==(const Frame&, const Frame&) = default;
};

}  // namespace fallwatch
